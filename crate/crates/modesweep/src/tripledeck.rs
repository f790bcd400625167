//! Resolvent solver for the coupled vorticity-displacement system on the
//! half-line.
//!
//! For one mode `(k, lambda)` the unknowns are a vorticity profile
//! `omega(y)` and a scalar amplitude `A` coupled through
//!
//! ```text
//! (lambda + ik + ik|k|) A = ik V[omega] + A_init
//! (lambda + ik V_s) omega - ik U_s'' Vy[omega] - omega'' = ik U_s'' y A + omega_init
//! U[omega] = A
//! ```
//!
//! Two independent paths produce the solution. The constructive path
//! builds a boundary-layer profile with unit mean, solves three wall
//! problems sharing one factorization, sums the geometric correction
//! series in closed form, and finishes with a scalar division for `A`.
//! The direct path assembles the whole coupled system, with `A` as an
//! extra unknown, into a single dense solve. Agreement of the two is the
//! standing oracle for every sign convention in the operator stack.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linsolve::{self, C64, CMatrix, ComplexSystem, RowKind};
use crate::mode::Mode;
use crate::shearflow::ShearFlow;

/// Which path produced a [`Solution`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Assembly {
    /// Constructive boundary-layer assembly with the closed-form series.
    Iterative,
    /// Monolithic coupled solve.
    Direct,
}

impl std::fmt::Display for Assembly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Assembly::Iterative => write!(f, "iterative"),
            Assembly::Direct => write!(f, "direct"),
        }
    }
}

/// Intermediate profiles and scalars of the constructive assembly.
pub struct ResolventPieces {
    /// Boundary-layer seed `lambda^{1/2} exp(-lambda^{1/2} y)`.
    pub xi0: Vec<C64>,
    /// Advection corrector of the seed.
    pub xi0_corrector: Vec<C64>,
    /// Unit-mean boundary-layer profile.
    pub omega_bl: Vec<C64>,
    /// Wall response to the boundary-layer stream forcing.
    pub f_h: Vec<C64>,
    /// Wall response to the displacement forcing `ik U_s'' y`.
    pub omega_h0: Vec<C64>,
    /// Wall response to the initial vorticity.
    pub omega_ih0: Vec<C64>,
    /// Mean of the corrector.
    pub alpha0: C64,
    /// Leading mean coefficient `1 - U[omega_h0]`.
    pub lambda0: C64,
    /// Closed-form series sum `lambda0 / (1 - ratio)`.
    pub lambda_star: C64,
    /// Leading inhomogeneous coefficient `-U[omega_ih0]`.
    pub lambda0_inhom: C64,
    /// Closed-form series sum of the inhomogeneous branch.
    pub lambda_star_inhom: C64,
    /// Geometric ratio `-ik U[f_h]` of both series.
    pub ratio: C64,
}

/// A per-mode resolvent solution.
pub struct Solution {
    /// Vorticity profile on the grid nodes.
    pub omega: Vec<C64>,
    /// Displacement amplitude.
    pub a: C64,
    /// Constructive intermediates; absent on the direct path.
    pub pieces: Option<ResolventPieces>,
    /// Which path produced this solution.
    pub path: Assembly,
}

impl Solution {
    /// Residual of the mean constraint `U[omega] = A`.
    pub fn mean_residual(&self, grid: &Grid) -> f64 {
        (grid.mean_u(&self.omega) - self.a).norm()
    }
}

/// Initial vorticity profiles used throughout the sweeps. All decay fast
/// enough for the weighted norms and nearly vanish at the wall; the wall
/// value is recorded as a compatibility residual, not an error.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataFamily {
    /// `exp(-(y - 2)^2)`.
    Gaussian,
    /// Smooth compactly supported bump on `(1, 5)`, peak 1 at `y = 3`.
    Bump,
    /// `(1 + y)^{-4}`.
    Rational,
}

impl DataFamily {
    pub fn name(&self) -> &'static str {
        match self {
            DataFamily::Gaussian => "gaussian",
            DataFamily::Bump => "bump",
            DataFamily::Rational => "rational",
        }
    }

    /// Evaluate the profile on the grid nodes.
    pub fn profile(&self, grid: &Grid) -> Vec<C64> {
        grid.nodes()
            .iter()
            .map(|&y| {
                let v = match self {
                    DataFamily::Gaussian => (-(y - 2.0) * (y - 2.0)).exp(),
                    DataFamily::Bump => {
                        let t = (y - 3.0) / 2.0;
                        if t.abs() < 1.0 {
                            (1.0 - 1.0 / (1.0 - t * t)).exp()
                        } else {
                            0.0
                        }
                    }
                    DataFamily::Rational => (1.0 + y).powi(-4),
                };
                Complex64::new(v, 0.0)
            })
            .collect()
    }
}

impl std::str::FromStr for DataFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(DataFamily::Gaussian),
            "bump" => Ok(DataFamily::Bump),
            "rational" => Ok(DataFamily::Rational),
            other => Err(Error::Config(format!(
                "unknown data family {other:?}; expected gaussian, bump, or rational"
            ))),
        }
    }
}

/// How the amplitude datum is chosen relative to the vorticity datum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AInitRule {
    /// `A_init = U[omega_init]`, the compatible convention.
    MeanOfOmega,
    /// A fixed amplitude datum independent of the vorticity datum.
    Independent(C64),
}

impl AInitRule {
    pub fn name(&self) -> &'static str {
        match self {
            AInitRule::MeanOfOmega => "mean-of-omega",
            AInitRule::Independent(_) => "independent",
        }
    }

    pub fn a_init(&self, grid: &Grid, omega_init: &[C64]) -> C64 {
        match self {
            AInitRule::MeanOfOmega => grid.mean_u(omega_init),
            AInitRule::Independent(v) => *v,
        }
    }
}

/// Boundary-layer seed `lambda^{1/2} exp(-lambda^{1/2} y)` with the
/// principal root, so it decays and has unit mean up to truncation.
pub fn xi0(mode: &Mode, grid: &Grid) -> Result<Vec<C64>> {
    mode.require_stable_half_plane()?;
    let mu = mode.sqrt_lambda();
    Ok(grid.nodes().iter().map(|&y| mu * (-mu * y).exp()).collect())
}

/// Interior collocation operator `(lambda + ik V_s) - d^2/dy^2`, with the
/// nonlocal curvature term `-ik U_s'' Vy` included on request.
fn interior_operator(
    flow: &ShearFlow,
    mode: &Mode,
    grid: &Grid,
    nonlocal: bool,
) -> Result<CMatrix> {
    let n = grid.degree();
    let lambda = mode.lambda();
    let ik = mode.ik();
    let vs: Vec<f64> = grid.nodes().iter().map(|&y| flow.vs(y)).collect::<Result<_>>()?;
    let us2: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&y| flow.eval(y).map(|e| e.2))
        .collect::<Result<_>>()?;
    let d2 = grid.d2();
    let vy = if nonlocal { Some(grid.vy_matrix()) } else { None };
    let mut m = CMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        let row = m.row_mut(i);
        let diag = lambda + ik * vs[i];
        for j in 0..=n {
            let mut v = Complex64::new(-d2[(i, j)], 0.0);
            if let Some(vy) = vy {
                v -= ik * us2[i] * vy[(i, j)];
            }
            if i == j {
                v += diag;
            }
            row[j] = v;
        }
    }
    Ok(m)
}

/// Advection corrector of the boundary-layer seed: solves
/// `(lambda + ik V_s) X - X'' = -ik V_s xi0` with zero Dirichlet data at
/// the wall and the truncation boundary.
pub fn solve_corrector(flow: &ShearFlow, mode: &Mode, grid: &Grid) -> Result<Vec<C64>> {
    let seed = xi0(mode, grid)?;
    let n = grid.degree();
    let ik = mode.ik();
    let matrix = interior_operator(flow, mode, grid, false)?;
    let mut rhs = vec![Complex64::new(0.0, 0.0); n + 1];
    for (i, (&y, &s)) in grid.nodes().iter().zip(&seed).enumerate() {
        rhs[i] = -ik * flow.vs(y)? * s;
    }
    let mut system = ComplexSystem::new(matrix, vec![rhs]);
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut wall = vec![zero; n + 1];
    wall[0] = one;
    system.replace_row(0, &wall, &[zero], RowKind::Boundary);
    let mut far = vec![zero; n + 1];
    far[n] = one;
    system.replace_row(n, &far, &[zero], RowKind::Boundary);
    let out = linsolve::solve(&system)?;
    Ok(out.solutions.into_iter().next().unwrap())
}

/// Unit-mean boundary-layer profile `(xi0 + corrector) / (1 + alpha0)`
/// together with the corrector mean `alpha0`.
pub fn omega_bl(flow: &ShearFlow, mode: &Mode, grid: &Grid) -> Result<(Vec<C64>, C64)> {
    let seed = xi0(mode, grid)?;
    let corrector = solve_corrector(flow, mode, grid)?;
    let alpha0 = grid.mean_u(&corrector);
    if alpha0.norm() >= 1.0 {
        return Err(Error::SeriesDivergence {
            ratio: alpha0.norm(),
        });
    }
    let scale = (Complex64::new(1.0, 0.0) + alpha0).inv();
    let profile = seed
        .iter()
        .zip(&corrector)
        .map(|(s, c)| (s + c) * scale)
        .collect();
    Ok((profile, alpha0))
}

/// Solve the wall problem `(lambda + ik V_s) f - ik U_s'' Vy[f] - f'' = R`
/// with a homogeneous Neumann wall row and decay at the truncation
/// boundary, for several right-hand sides sharing one factorization.
pub fn solve_hydrostatic_multi(
    flow: &ShearFlow,
    mode: &Mode,
    grid: &Grid,
    rhs_list: Vec<Vec<C64>>,
) -> Result<Vec<Vec<C64>>> {
    mode.require_stable_half_plane()?;
    let n = grid.degree();
    let matrix = interior_operator(flow, mode, grid, true)?;
    let count = rhs_list.len();
    let mut system = ComplexSystem::new(matrix, rhs_list);
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let wall: Vec<C64> = grid.d1().row(0).iter().map(|&v| Complex64::new(v, 0.0)).collect();
    system.replace_row(0, &wall, &vec![zero; count], RowKind::Boundary);
    let mut far = vec![zero; n + 1];
    far[n] = one;
    system.replace_row(n, &far, &vec![zero; count], RowKind::Boundary);
    Ok(linsolve::solve(&system)?.solutions)
}

/// Single right-hand side form of [`solve_hydrostatic_multi`].
pub fn solve_hydrostatic(
    flow: &ShearFlow,
    mode: &Mode,
    grid: &Grid,
    rhs: &[C64],
) -> Result<Vec<C64>> {
    Ok(solve_hydrostatic_multi(flow, mode, grid, vec![rhs.to_vec()])?
        .into_iter()
        .next()
        .unwrap())
}

/// Run the constructive pipeline up to (and including) the series sums.
pub fn resolvent_pieces(
    flow: &ShearFlow,
    mode: &Mode,
    grid: &Grid,
    omega_init: &[C64],
) -> Result<ResolventPieces> {
    assert_eq!(omega_init.len(), grid.node_count(), "profile length mismatch");
    let seed = xi0(mode, grid)?;
    let corrector = solve_corrector(flow, mode, grid)?;
    let alpha0 = grid.mean_u(&corrector);
    if alpha0.norm() >= 1.0 {
        return Err(Error::SeriesDivergence {
            ratio: alpha0.norm(),
        });
    }
    let scale = (Complex64::new(1.0, 0.0) + alpha0).inv();
    let omega_bl: Vec<C64> = seed
        .iter()
        .zip(&corrector)
        .map(|(s, c)| (s + c) * scale)
        .collect();

    let ik = mode.ik();
    let stream = grid.vy(&omega_bl);
    let us2: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&y| flow.eval(y).map(|e| e.2))
        .collect::<Result<_>>()?;
    let rhs_fh: Vec<C64> = us2.iter().zip(&stream).map(|(&c, s)| c * s).collect();
    let rhs_h0: Vec<C64> = grid
        .nodes()
        .iter()
        .zip(&us2)
        .map(|(&y, &c)| ik * c * y)
        .collect();
    let solved = solve_hydrostatic_multi(
        flow,
        mode,
        grid,
        vec![rhs_fh, rhs_h0, omega_init.to_vec()],
    )?;
    let mut it = solved.into_iter();
    let f_h = it.next().unwrap();
    let omega_h0 = it.next().unwrap();
    let omega_ih0 = it.next().unwrap();

    let ratio = -ik * grid.mean_u(&f_h);
    if ratio.norm() >= 1.0 {
        return Err(Error::SeriesDivergence {
            ratio: ratio.norm(),
        });
    }
    let one = Complex64::new(1.0, 0.0);
    let lambda0 = one - grid.mean_u(&omega_h0);
    let lambda0_inhom = -grid.mean_u(&omega_ih0);
    let denom = one - ratio;
    Ok(ResolventPieces {
        xi0: seed,
        xi0_corrector: corrector,
        omega_bl,
        f_h,
        omega_h0,
        omega_ih0,
        alpha0,
        lambda0,
        lambda_star: lambda0 / denom,
        lambda0_inhom,
        lambda_star_inhom: lambda0_inhom / denom,
        ratio,
    })
}

impl ResolventPieces {
    /// Homogeneous building block `lambda_star omega_bl + omega_h0 +
    /// ik lambda_star f_h`, whose mean is 1 by construction.
    pub fn omega_bar(&self, mode: &Mode) -> Vec<C64> {
        self.combine(mode, self.lambda_star, &self.omega_h0)
    }

    /// Inhomogeneous building block with the replacement coefficients.
    pub fn omega_inhom(&self, mode: &Mode) -> Vec<C64> {
        self.combine(mode, self.lambda_star_inhom, &self.omega_ih0)
    }

    /// Tail of the homogeneous series beyond its leading term.
    pub fn omega_h_tail(&self, mode: &Mode) -> Vec<C64> {
        let c = mode.ik() * self.lambda_star;
        self.f_h.iter().map(|f| c * f).collect()
    }

    fn combine(&self, mode: &Mode, coeff: C64, base: &[C64]) -> Vec<C64> {
        let ik = mode.ik();
        self.omega_bl
            .iter()
            .zip(base)
            .zip(&self.f_h)
            .map(|((bl, b), f)| coeff * bl + b + ik * coeff * f)
            .collect()
    }
}

/// Scalar amplitude equation and final superposition shared by the full
/// and truncated assemblies.
fn couple(
    mode: &Mode,
    grid: &Grid,
    pieces: &ResolventPieces,
    lambda_star: C64,
    lambda_star_inhom: C64,
    a_init: C64,
) -> Result<(Vec<C64>, C64)> {
    let ik = mode.ik();
    let combine = |coeff: C64, base: &[C64]| -> Vec<C64> {
        pieces
            .omega_bl
            .iter()
            .zip(base)
            .zip(&pieces.f_h)
            .map(|((bl, b), f)| coeff * bl + b + ik * coeff * f)
            .collect()
    };
    let omega_bar = combine(lambda_star, &pieces.omega_h0);
    let omega_inhom = combine(lambda_star_inhom, &pieces.omega_ih0);
    let denom = mode.lambda() + ik + mode.ik_abs_k() - ik * grid.mean_v(&omega_bar);
    let threshold = 1e-12 * (mode.lambda().norm() + mode.k() * mode.k());
    if denom.norm() < threshold {
        return Err(Error::NearResonance {
            denom: denom.norm(),
            threshold,
        });
    }
    let a = (ik * grid.mean_v(&omega_inhom) + a_init) / denom;
    let omega = omega_bar
        .iter()
        .zip(&omega_inhom)
        .map(|(bar, inh)| a * bar + inh)
        .collect();
    Ok((omega, a))
}

/// Constructive resolvent solution with closed-form series sums.
pub fn assemble(
    flow: &ShearFlow,
    mode: &Mode,
    grid: &Grid,
    omega_init: &[C64],
    a_init: C64,
) -> Result<Solution> {
    let pieces = resolvent_pieces(flow, mode, grid, omega_init)?;
    let (omega, a) = couple(
        mode,
        grid,
        &pieces,
        pieces.lambda_star,
        pieces.lambda_star_inhom,
        a_init,
    )?;
    Ok(Solution {
        omega,
        a,
        pieces: Some(pieces),
        path: Assembly::Iterative,
    })
}

/// Constructive solution with the series truncated after `depth` terms,
/// for convergence studies. `depth = 0` keeps only the zeroth term.
pub fn assemble_partial(
    flow: &ShearFlow,
    mode: &Mode,
    grid: &Grid,
    omega_init: &[C64],
    a_init: C64,
    depth: usize,
) -> Result<Solution> {
    let pieces = resolvent_pieces(flow, mode, grid, omega_init)?;
    let mut partial = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    for _ in 0..=depth {
        partial += term;
        term *= pieces.ratio;
    }
    let (omega, a) = couple(
        mode,
        grid,
        &pieces,
        pieces.lambda0 * partial,
        pieces.lambda0_inhom * partial,
        a_init,
    )?;
    Ok(Solution {
        omega,
        a,
        pieces: Some(pieces),
        path: Assembly::Iterative,
    })
}

/// Monolithic solve of the coupled system: vorticity collocation rows,
/// the mean constraint in place of the wall row, decay at the truncation
/// boundary, and the amplitude equation closing the system.
pub fn direct_solve(
    flow: &ShearFlow,
    mode: &Mode,
    grid: &Grid,
    omega_init: &[C64],
    a_init: C64,
) -> Result<Solution> {
    assert_eq!(omega_init.len(), grid.node_count(), "profile length mismatch");
    let n = grid.degree();
    let m = n + 2;
    let ik = mode.ik();
    let interior = interior_operator(flow, mode, grid, true)?;
    let us2: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&y| flow.eval(y).map(|e| e.2))
        .collect::<Result<_>>()?;
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);

    let mut matrix = CMatrix::zeros(m, m);
    let mut rhs = vec![zero; m];
    for i in 0..=n {
        let src = interior.row(i);
        let row = matrix.row_mut(i);
        row[..=n].copy_from_slice(src);
        row[n + 1] = -ik * us2[i] * grid.nodes()[i];
        rhs[i] = omega_init[i];
    }
    for (j, &c) in matrix.row_mut(n + 1).iter_mut().zip(grid.mean_v_row()) {
        *j = -ik * c;
    }
    matrix[(n + 1, n + 1)] = mode.lambda() + ik + mode.ik_abs_k();
    rhs[n + 1] = a_init;

    let mut system = ComplexSystem::new(matrix, vec![rhs]);
    let mut mean_row: Vec<C64> = grid
        .quad_weights()
        .iter()
        .map(|&w| Complex64::new(w, 0.0))
        .collect();
    mean_row.push(-one);
    system.replace_row(0, &mean_row, &[zero], RowKind::Constraint);
    let mut far = vec![zero; m];
    far[n] = one;
    system.replace_row(n, &far, &[zero], RowKind::Boundary);

    let out = linsolve::solve(&system)?;
    let mut solution = out.solutions.into_iter().next().unwrap();
    let a = solution.pop().unwrap();
    Ok(Solution {
        omega: solution,
        a,
        pieces: None,
        path: Assembly::Direct,
    })
}
