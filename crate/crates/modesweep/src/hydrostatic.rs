//! Resolvent solver for the hydrostatic channel system on the unit
//! interval.
//!
//! For one mode `(k, lambda)` the unknown is a vorticity profile
//! `omega(y)` on `[0, 1]`, driven through its stream function:
//!
//! ```text
//! (lambda + ik U_s) omega - ik U_s'' Phi[omega] - omega'' = omega_init
//! Phi[omega]'' = omega,   Phi[omega](0) = Phi[omega](1) = 0
//! U[omega] := (Phi[omega]'(0), Phi[omega]'(1)) = (0, 0)
//! ```
//!
//! The wall-trace pair `U` plays the role the scalar mean plays on the
//! half-line, so every scalar of the half-line construction becomes a
//! pair here: the boundary-layer profile is a pair of columns normalized
//! to `U[omega_bl] = Id`, the series ratio is a 2x2 trace matrix, and
//! the geometric correction sums through a 2x2 inverse. The seed pair
//! comes from an explicit stream-function ansatz of wall exponentials
//! plus a linear part, whose coefficients solve an exact 4x4 system; no
//! asymptotic approximation enters the solve path.
//!
//! A monolithic collocation solve with the stream kernel materialized
//! and mixed wall rows serves as the standing oracle for the
//! constructive path, exactly as on the half-line.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Domain, Grid};
use crate::linsolve::{self, C64, CMatrix, ComplexSystem, RowKind};
use crate::mode::Mode;
use crate::shearflow::ShearFlow;
use crate::tripledeck::Assembly;

/// Dense 2x2 complex matrix, row major: entry `(i, j)` is `self.0[i][j]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub fn identity() -> Self {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        Mat2([[one, zero], [zero, one]])
    }

    pub fn scale(&self, s: C64) -> Self {
        Mat2([
            [self.0[0][0] * s, self.0[0][1] * s],
            [self.0[1][0] * s, self.0[1][1] * s],
        ])
    }

    pub fn add(&self, other: &Mat2) -> Self {
        Mat2([
            [self.0[0][0] + other.0[0][0], self.0[0][1] + other.0[0][1]],
            [self.0[1][0] + other.0[1][0], self.0[1][1] + other.0[1][1]],
        ])
    }

    pub fn mul_vec2(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    /// Largest singular value, from the closed-form eigenvalues of the
    /// 2x2 Gram matrix.
    pub fn spectral_norm(&self) -> f64 {
        let m = &self.0;
        let g00 = m[0][0].norm_sqr() + m[1][0].norm_sqr();
        let g11 = m[0][1].norm_sqr() + m[1][1].norm_sqr();
        let g01 = m[0][0].conj() * m[0][1] + m[1][0].conj() * m[1][1];
        let half_gap = 0.5 * (g00 - g11);
        let shift = (half_gap * half_gap + g01.norm_sqr()).sqrt();
        (0.5 * (g00 + g11) + shift).max(0.0).sqrt()
    }

    pub fn inverse(&self) -> Result<Mat2> {
        let m = &self.0;
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let top = self.spectral_norm();
        if det.norm() <= 1e-14 * top * top {
            let condition = if det.norm() == 0.0 {
                f64::INFINITY
            } else {
                top * top / det.norm()
            };
            return Err(Error::Singular { condition });
        }
        let inv = det.inv();
        Ok(Mat2([
            [m[1][1] * inv, -m[0][1] * inv],
            [-m[1][0] * inv, m[0][0] * inv],
        ]))
    }
}

/// A pair of grid profiles forming one vector-valued field. Component
/// `wall0` is the column normalized against the `y = 0` stream trace,
/// `wall1` the column normalized against `y = 1`.
#[derive(Clone, Debug)]
pub struct VectorProfile {
    pub wall0: Vec<C64>,
    pub wall1: Vec<C64>,
}

impl VectorProfile {
    pub fn zeros(n: usize) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        VectorProfile {
            wall0: vec![zero; n],
            wall1: vec![zero; n],
        }
    }

    pub fn len(&self) -> usize {
        self.wall0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wall0.is_empty()
    }

    pub fn add(&self, other: &VectorProfile) -> VectorProfile {
        VectorProfile {
            wall0: self.wall0.iter().zip(&other.wall0).map(|(a, b)| a + b).collect(),
            wall1: self.wall1.iter().zip(&other.wall1).map(|(a, b)| a + b).collect(),
        }
    }

    /// Contract the pair with a coefficient vector.
    pub fn apply(&self, coeff: [C64; 2]) -> Vec<C64> {
        self.wall0
            .iter()
            .zip(&self.wall1)
            .map(|(a, b)| a * coeff[0] + b * coeff[1])
            .collect()
    }

    /// Right-multiply the pair by a 2x2 matrix, columnwise.
    pub fn times(&self, m: &Mat2) -> VectorProfile {
        VectorProfile {
            wall0: self.apply([m.0[0][0], m.0[1][0]]),
            wall1: self.apply([m.0[0][1], m.0[1][1]]),
        }
    }
}

/// Coefficients of the explicit stream-function pair: `a` and `b` scale
/// the same-wall and opposite-wall exponentials, `c` the linear part,
/// `d` the constant offset of the first component.
#[derive(Clone, Copy, Debug)]
pub struct StreamCoeffs {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

/// Output of [`stream_basis`]: the stream-function pair with unit wall
/// traces, its ansatz coefficients, and the induced vorticity seeds
/// split by the wall they decay from.
pub struct StreamBasis {
    pub phi0: VectorProfile,
    pub coeffs: StreamCoeffs,
    pub xi0_near0: VectorProfile,
    pub xi0_near1: VectorProfile,
}

/// Intermediate profiles and matrices of the constructive channel
/// assembly.
pub struct ChannelPieces {
    /// Explicit stream-function pair with unit wall traces.
    pub phi0: VectorProfile,
    /// Ansatz coefficients of the stream pair.
    pub coeffs: StreamCoeffs,
    /// Vorticity seed decaying from the `y = 0` wall.
    pub xi0_near0: VectorProfile,
    /// Vorticity seed decaying from the `y = 1` wall.
    pub xi0_near1: VectorProfile,
    /// Advection corrector of the `y = 0` seed.
    pub corrector_near0: VectorProfile,
    /// Advection corrector of the `y = 1` seed.
    pub corrector_near1: VectorProfile,
    /// Wall-trace matrix of the total corrector.
    pub alpha0: Mat2,
    /// Trace-normalized boundary-layer pair, `U[omega_bl] = Id`.
    pub omega_bl: VectorProfile,
    /// Wall responses to the boundary-layer stream forcing.
    pub f_h: VectorProfile,
    /// Wall response to the initial vorticity.
    pub omega_h0: Vec<C64>,
    /// Wall-trace matrix of `f_h`, the generator of the series ratio.
    pub m_h: Mat2,
    /// Leading trace coefficient `-U[omega_h0]`.
    pub lambda0: [C64; 2],
    /// Closed-form series sum `(I + ik M_H)^{-1} lambda0`.
    pub lambda_star: [C64; 2],
    /// Spectral norm of `ik M_H`, the geometric ratio of the series.
    pub ratio: f64,
}

impl ChannelPieces {
    /// Final superposition `omega_h0 + (omega_bl + ik f_h) lambda_star`.
    pub fn omega_hat(&self, mode: &Mode) -> Vec<C64> {
        self.superpose(mode, self.lambda_star)
    }

    /// Per-step contraction of the series along the direction it
    /// actually runs in, `|ik M_H lambda0| / |lambda0|`. Compatible
    /// data pins `lambda0` to an eigendirection of the trace matrix,
    /// so truncation errors shrink by exactly this factor per term;
    /// the spectral norm [`ChannelPieces::ratio`] is its upper bound.
    pub fn step_ratio(&self, mode: &Mode) -> f64 {
        let size = |v: [C64; 2]| (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        let scale = size(self.lambda0);
        if scale == 0.0 {
            return 0.0;
        }
        size(self.m_h.scale(mode.ik()).mul_vec2(self.lambda0)) / scale
    }

    /// Superposition with the series truncated after `depth` terms;
    /// `depth = 0` keeps only the leading coefficient.
    pub fn omega_hat_partial(&self, mode: &Mode, depth: usize) -> Vec<C64> {
        let contraction = self.m_h.scale(-mode.ik());
        let mut term = self.lambda0;
        let mut partial = term;
        for _ in 1..=depth {
            term = contraction.mul_vec2(term);
            partial = [partial[0] + term[0], partial[1] + term[1]];
        }
        self.superpose(mode, partial)
    }

    fn superpose(&self, mode: &Mode, coeff: [C64; 2]) -> Vec<C64> {
        let ik = mode.ik();
        let mut out = self.omega_h0.clone();
        for i in 0..out.len() {
            out[i] += (self.omega_bl.wall0[i] + ik * self.f_h.wall0[i]) * coeff[0]
                + (self.omega_bl.wall1[i] + ik * self.f_h.wall1[i]) * coeff[1];
        }
        out
    }
}

/// A per-mode channel resolvent solution.
pub struct ChannelSolution {
    /// Vorticity profile on the grid nodes.
    pub omega: Vec<C64>,
    /// Constructive intermediates; absent on the direct path.
    pub pieces: Option<ChannelPieces>,
    /// Which path produced this solution.
    pub path: Assembly,
}

impl ChannelSolution {
    /// Euclidean size of the wall-trace pair `U[omega]`; zero for the
    /// exact solution, so this is the residual of the trace constraint.
    pub fn trace_residual(&self, grid: &Grid) -> f64 {
        let (t0, t1) = grid.stream_traces(&self.omega);
        (t0.norm_sqr() + t1.norm_sqr()).sqrt()
    }
}

/// Initial vorticity profiles for channel sweeps. Each is the second
/// derivative of a stream function with double zeros at both walls, so
/// the wall-trace pair of the data vanishes identically.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelData {
    /// `2 - 12y + 12y^2`, stream function `y^2 (1-y)^2`.
    Quartic,
    /// `2 pi^2 cos(2 pi y)`, stream function `(1 - cos(2 pi y)) / 2`.
    Cosine,
    /// `2 - 36y^2 + 40y^3`, stream function `y^2 (1-y)^2 (1 + 2y)`; not
    /// symmetric about the midline, which exercises both series
    /// directions.
    Skew,
}

impl ChannelData {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelData::Quartic => "quartic",
            ChannelData::Cosine => "cosine",
            ChannelData::Skew => "skew",
        }
    }

    /// Evaluate the profile on the grid nodes.
    pub fn profile(&self, grid: &Grid) -> Vec<C64> {
        let pi = std::f64::consts::PI;
        grid.nodes()
            .iter()
            .map(|&y| {
                let v = match self {
                    ChannelData::Quartic => 2.0 - 12.0 * y + 12.0 * y * y,
                    ChannelData::Cosine => 2.0 * pi * pi * (2.0 * pi * y).cos(),
                    ChannelData::Skew => 2.0 - 36.0 * y * y + 40.0 * y * y * y,
                };
                Complex64::new(v, 0.0)
            })
            .collect()
    }
}

impl std::str::FromStr for ChannelData {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quartic" => Ok(ChannelData::Quartic),
            "cosine" => Ok(ChannelData::Cosine),
            "skew" => Ok(ChannelData::Skew),
            other => Err(Error::Config(format!(
                "unknown channel data family {other:?}; expected quartic, cosine, or skew"
            ))),
        }
    }
}

fn require_channel(flow: &ShearFlow, grid: &Grid) -> Result<()> {
    if flow.domain() != Domain::UnitInterval || grid.domain() != Domain::UnitInterval {
        return Err(Error::Config(format!(
            "channel solver needs a unit-interval flow and grid, got {} on {}",
            flow.kind().name(),
            grid.domain()
        )));
    }
    Ok(())
}

/// Wall-trace matrix of a vector profile: column `j` holds the stream
/// traces of component `j`.
fn trace_matrix(grid: &Grid, v: &VectorProfile) -> Mat2 {
    let (a0, a1) = grid.stream_traces(&v.wall0);
    let (b0, b1) = grid.stream_traces(&v.wall1);
    Mat2([[a0, b0], [a1, b1]])
}

/// Explicit boundary-layer stream pair: wall exponentials
/// `exp(-lambda^{1/2} y)` and `exp(-lambda^{1/2} (1-y))` plus a linear
/// part, with coefficients solving the exact 4x4 system for
/// `Phi(0) = Phi(1) = 0`, `Phi'(0) = (1, 0)`, `Phi'(1) = (0, 1)`.
/// The induced vorticity seeds are `lambda` times the exponential parts.
pub fn stream_basis(mode: &Mode, grid: &Grid) -> Result<StreamBasis> {
    mode.require_stable_half_plane()?;
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mu = mode.sqrt_lambda();
    let e = (-mu).exp();

    // Boundary conditions of the first component in the unknowns
    // (a, b, c, d); the second component is its flip image, so its
    // conditions follow automatically.
    let rows = [
        [one, -e, Complex64::new(-0.5, 0.0), -one],
        [e, -one, Complex64::new(0.5, 0.0), -one],
        [-mu, -mu * e, one, zero],
        [-mu * e, -mu, one, zero],
    ];
    let matrix = CMatrix::from_fn(4, 4, |i, j| rows[i][j]);
    let system = ComplexSystem::new(matrix, vec![vec![zero, zero, one, zero]]);
    let coeffs = linsolve::solve(&system)?.solutions.into_iter().next().unwrap();
    let (a, b, c, d) = (coeffs[0], coeffs[1], coeffs[2], coeffs[3]);

    let lambda = mode.lambda();
    let n = grid.node_count();
    let mut phi0 = VectorProfile::zeros(n);
    let mut xi0_near0 = VectorProfile::zeros(n);
    let mut xi0_near1 = VectorProfile::zeros(n);
    for (i, &y) in grid.nodes().iter().enumerate() {
        let down = (-mu * y).exp();
        let up = (-mu * (1.0 - y)).exp();
        let linear = y - 0.5;
        phi0.wall0[i] = a * down - b * up + c * linear - d;
        phi0.wall1[i] = b * down - a * up + c * linear + d;
        xi0_near0.wall0[i] = lambda * a * down;
        xi0_near0.wall1[i] = lambda * b * down;
        xi0_near1.wall0[i] = -lambda * b * up;
        xi0_near1.wall1[i] = -lambda * a * up;
    }
    Ok(StreamBasis {
        phi0,
        coeffs: StreamCoeffs { a, b, c, d },
        xi0_near0,
        xi0_near1,
    })
}

/// Interior collocation operator `(lambda + ik U_s) - d^2/dy^2`, with
/// the nonlocal curvature term `-ik U_s'' Phi` materialized through the
/// stream kernel on request.
fn interior_operator(
    flow: &ShearFlow,
    mode: &Mode,
    grid: &Grid,
    nonlocal: bool,
) -> Result<CMatrix> {
    let n = grid.degree();
    let lambda = mode.lambda();
    let ik = mode.ik();
    let us: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&y| flow.eval(y).map(|e| e.0))
        .collect::<Result<_>>()?;
    let us2: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&y| flow.eval(y).map(|e| e.2))
        .collect::<Result<_>>()?;
    let d2 = grid.d2();
    let green = if nonlocal {
        Some(grid.poisson_green_matrix())
    } else {
        None
    };
    let mut m = CMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        let row = m.row_mut(i);
        let diag = lambda + ik * us[i];
        for j in 0..=n {
            let mut v = Complex64::new(-d2[(i, j)], 0.0);
            if let Some(green) = &green {
                v -= ik * us2[i] * green[(i, j)];
            }
            if i == j {
                v += diag;
            }
            row[j] = v;
        }
    }
    Ok(m)
}

/// Advection correctors of the wall seeds: each scalar component solves
/// `(lambda + ik U_s) X - X'' = -ik U_s xi` with zero Dirichlet rows at
/// both walls, all four sharing one factorization.
pub fn solve_correctors(
    flow: &ShearFlow,
    mode: &Mode,
    grid: &Grid,
    basis: &StreamBasis,
) -> Result<(VectorProfile, VectorProfile)> {
    require_channel(flow, grid)?;
    let n = grid.degree();
    let ik = mode.ik();
    let us: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&y| flow.eval(y).map(|e| e.0))
        .collect::<Result<_>>()?;
    let forcing = |xi: &[C64]| -> Vec<C64> {
        xi.iter().zip(&us).map(|(x, &u)| -ik * u * x).collect()
    };
    let rhs_list = vec![
        forcing(&basis.xi0_near0.wall0),
        forcing(&basis.xi0_near0.wall1),
        forcing(&basis.xi0_near1.wall0),
        forcing(&basis.xi0_near1.wall1),
    ];
    let matrix = interior_operator(flow, mode, grid, false)?;
    let mut system = ComplexSystem::new(matrix, rhs_list);
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let zeros4 = [zero; 4];
    let mut wall = vec![zero; n + 1];
    wall[0] = one;
    system.replace_row(0, &wall, &zeros4, RowKind::Boundary);
    let mut far = vec![zero; n + 1];
    far[n] = one;
    system.replace_row(n, &far, &zeros4, RowKind::Boundary);
    let mut it = linsolve::solve(&system)?.solutions.into_iter();
    let near0 = VectorProfile {
        wall0: it.next().unwrap(),
        wall1: it.next().unwrap(),
    };
    let near1 = VectorProfile {
        wall0: it.next().unwrap(),
        wall1: it.next().unwrap(),
    };
    Ok((near0, near1))
}

/// Trace-normalized boundary-layer pair
/// `(xi0 + corrector)(I + alpha0)^{-1}` together with the corrector
/// trace matrix `alpha0`.
pub fn omega_bl(flow: &ShearFlow, mode: &Mode, grid: &Grid) -> Result<(VectorProfile, Mat2)> {
    let basis = stream_basis(mode, grid)?;
    let (near0, near1) = solve_correctors(flow, mode, grid, &basis)?;
    let corrector = near0.add(&near1);
    let alpha0 = trace_matrix(grid, &corrector);
    if alpha0.spectral_norm() >= 1.0 {
        return Err(Error::SeriesDivergence {
            ratio: alpha0.spectral_norm(),
        });
    }
    let seed = basis.xi0_near0.add(&basis.xi0_near1);
    let normalizer = Mat2::identity().add(&alpha0).inverse()?;
    Ok((seed.add(&corrector).times(&normalizer), alpha0))
}

/// Solve the channel wall problem `(lambda + ik U_s) f - ik U_s'' Phi[f]
/// - f'' = R` with homogeneous Neumann rows at both walls, for several
/// right-hand sides sharing one factorization.
pub fn solve_channel_multi(
    flow: &ShearFlow,
    mode: &Mode,
    grid: &Grid,
    rhs_list: Vec<Vec<C64>>,
) -> Result<Vec<Vec<C64>>> {
    require_channel(flow, grid)?;
    mode.require_stable_half_plane()?;
    let n = grid.degree();
    let matrix = interior_operator(flow, mode, grid, true)?;
    let count = rhs_list.len();
    let mut system = ComplexSystem::new(matrix, rhs_list);
    let zero = Complex64::new(0.0, 0.0);
    let to_row = |src: &[f64]| -> Vec<C64> {
        src.iter().map(|&v| Complex64::new(v, 0.0)).collect()
    };
    let wall = to_row(grid.d1().row(0));
    system.replace_row(0, &wall, &vec![zero; count], RowKind::Boundary);
    let far = to_row(grid.d1().row(n));
    system.replace_row(n, &far, &vec![zero; count], RowKind::Boundary);
    Ok(linsolve::solve(&system)?.solutions)
}

/// Single right-hand side form of [`solve_channel_multi`].
pub fn solve_channel(
    flow: &ShearFlow,
    mode: &Mode,
    grid: &Grid,
    rhs: &[C64],
) -> Result<Vec<C64>> {
    Ok(solve_channel_multi(flow, mode, grid, vec![rhs.to_vec()])?
        .into_iter()
        .next()
        .unwrap())
}

/// Run the constructive channel pipeline up to (and including) the
/// matrix series sum.
pub fn resolvent_pieces(
    flow: &ShearFlow,
    mode: &Mode,
    grid: &Grid,
    omega_init: &[C64],
) -> Result<ChannelPieces> {
    require_channel(flow, grid)?;
    assert_eq!(omega_init.len(), grid.node_count(), "profile length mismatch");
    let basis = stream_basis(mode, grid)?;
    let (corrector_near0, corrector_near1) = solve_correctors(flow, mode, grid, &basis)?;
    let corrector = corrector_near0.add(&corrector_near1);
    let alpha0 = trace_matrix(grid, &corrector);
    if alpha0.spectral_norm() >= 1.0 {
        return Err(Error::SeriesDivergence {
            ratio: alpha0.spectral_norm(),
        });
    }
    let seed = basis.xi0_near0.add(&basis.xi0_near1);
    let normalizer = Mat2::identity().add(&alpha0).inverse()?;
    let omega_bl = seed.add(&corrector).times(&normalizer);

    let ik = mode.ik();
    let us2: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&y| flow.eval(y).map(|e| e.2))
        .collect::<Result<_>>()?;
    let stream_forcing = |col: &[C64]| -> Vec<C64> {
        grid.poisson_green(col)
            .iter()
            .zip(&us2)
            .map(|(p, &c)| c * p)
            .collect()
    };
    let solved = solve_channel_multi(
        flow,
        mode,
        grid,
        vec![
            omega_init.to_vec(),
            stream_forcing(&omega_bl.wall0),
            stream_forcing(&omega_bl.wall1),
        ],
    )?;
    let mut it = solved.into_iter();
    let omega_h0 = it.next().unwrap();
    let f_h = VectorProfile {
        wall0: it.next().unwrap(),
        wall1: it.next().unwrap(),
    };

    let m_h = trace_matrix(grid, &f_h);
    let ratio = m_h.scale(ik).spectral_norm();
    if ratio >= 1.0 {
        return Err(Error::SeriesDivergence { ratio });
    }
    let (t0, t1) = grid.stream_traces(&omega_h0);
    let lambda0 = [-t0, -t1];
    let resolvent = Mat2::identity().add(&m_h.scale(ik)).inverse()?;
    let lambda_star = resolvent.mul_vec2(lambda0);

    Ok(ChannelPieces {
        phi0: basis.phi0,
        coeffs: basis.coeffs,
        xi0_near0: basis.xi0_near0,
        xi0_near1: basis.xi0_near1,
        corrector_near0,
        corrector_near1,
        alpha0,
        omega_bl,
        f_h,
        omega_h0,
        m_h,
        lambda0,
        lambda_star,
        ratio,
    })
}

/// Constructive channel resolvent solution with the closed-form matrix
/// series sum.
pub fn assemble(
    flow: &ShearFlow,
    mode: &Mode,
    grid: &Grid,
    omega_init: &[C64],
) -> Result<ChannelSolution> {
    let pieces = resolvent_pieces(flow, mode, grid, omega_init)?;
    let omega = pieces.omega_hat(mode);
    Ok(ChannelSolution {
        omega,
        pieces: Some(pieces),
        path: Assembly::Iterative,
    })
}

/// Constructive solution with the matrix series truncated after `depth`
/// terms, for convergence studies.
pub fn assemble_partial(
    flow: &ShearFlow,
    mode: &Mode,
    grid: &Grid,
    omega_init: &[C64],
    depth: usize,
) -> Result<ChannelSolution> {
    let pieces = resolvent_pieces(flow, mode, grid, omega_init)?;
    let omega = pieces.omega_hat_partial(mode, depth);
    Ok(ChannelSolution {
        omega,
        pieces: Some(pieces),
        path: Assembly::Iterative,
    })
}

/// Monolithic solve of the channel system: vorticity collocation rows
/// with the stream kernel materialized, and mixed wall rows equating
/// the wall vorticity flux to the streamwise pressure gradient,
/// `omega'(wall) = -2ik integral(U_s Phi'[omega]) + omega(1) - omega(0)`.
/// The wall-trace constraint `U[omega] = 0` is implied, not imposed;
/// [`ChannelSolution::trace_residual`] measures how well it holds.
pub fn direct_solve(
    flow: &ShearFlow,
    mode: &Mode,
    grid: &Grid,
    omega_init: &[C64],
) -> Result<ChannelSolution> {
    require_channel(flow, grid)?;
    assert_eq!(omega_init.len(), grid.node_count(), "profile length mismatch");
    let n = grid.degree();
    let ik = mode.ik();
    let matrix = interior_operator(flow, mode, grid, true)?;
    let mut system = ComplexSystem::new(matrix, vec![omega_init.to_vec()]);

    let us: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&y| flow.eval(y).map(|e| e.0))
        .collect::<Result<_>>()?;
    let green = grid.poisson_green_matrix();
    let dgreen = grid.d1().mul_mat(&green);
    let two_ik = ik * 2.0;
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut stream_row = vec![zero; n + 1];
    for (j, entry) in stream_row.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..=n {
            acc += grid.quad_weights()[i] * us[i] * dgreen[(i, j)];
        }
        *entry = two_ik * acc;
    }
    for wall in [0, n] {
        let mut row: Vec<C64> = (0..=n)
            .map(|j| Complex64::new(grid.d1()[(wall, j)], 0.0) + stream_row[j])
            .collect();
        row[0] += one;
        row[n] -= one;
        system.replace_row(wall, &row, &[zero], RowKind::Boundary);
    }

    let out = linsolve::solve(&system)?;
    Ok(ChannelSolution {
        omega: out.solutions.into_iter().next().unwrap(),
        pieces: None,
        path: Assembly::Direct,
    })
}

/// Two evaluations of the streamwise pressure gradient `ik p` of a
/// channel solution.
#[derive(Clone, Copy, Debug)]
pub struct PressureDiagnostic {
    /// Wall formula, the same expression the direct boundary rows use.
    pub wall_form: C64,
    /// Bulk-integrated streamwise momentum balance, kept term by term
    /// without analytic simplification.
    pub bulk_form: C64,
}

impl PressureDiagnostic {
    /// Gap between the two evaluations relative to their size.
    pub fn mismatch(&self) -> f64 {
        let scale = self.wall_form.norm().max(self.bulk_form.norm());
        if scale == 0.0 {
            0.0
        } else {
            (self.wall_form - self.bulk_form).norm() / scale
        }
    }
}

/// Streamwise pressure gradient of a channel solution, evaluated two
/// ways: the wall formula that powers the direct boundary rows, and the
/// bulk-integrated momentum balance. The gap between them is a
/// consistency diagnostic; it is reported, never folded into the solve.
pub fn pressure_gradient(
    flow: &ShearFlow,
    mode: &Mode,
    grid: &Grid,
    omega: &[C64],
    omega_init: &[C64],
) -> Result<PressureDiagnostic> {
    require_channel(flow, grid)?;
    let n = grid.degree();
    let ik = mode.ik();
    let phi = grid.poisson_green(omega);
    let u = grid.d1().mul_vec_c(&phi);
    let us: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&y| flow.eval(y).map(|e| e.0))
        .collect::<Result<_>>()?;
    let us1: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&y| flow.eval(y).map(|e| e.1))
        .collect::<Result<_>>()?;
    let weighted = |values: &[C64], factors: &[f64]| -> C64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..values.len() {
            acc += grid.quad_weights()[i] * factors[i] * values[i];
        }
        acc
    };
    let advect = weighted(&u, &us);
    let jump = omega[n] - omega[0];
    let wall_form = -ik * 2.0 * advect + jump;

    let u_init = grid.d1().mul_vec_c(&grid.poisson_green(omega_init));
    let bulk_form = grid.integrate(&u_init) - mode.lambda() * grid.integrate(&u)
        - ik * advect
        + ik * weighted(&phi, &us1)
        + jump;
    Ok(PressureDiagnostic {
        wall_form,
        bulk_form,
    })
}
