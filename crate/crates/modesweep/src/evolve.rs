//! Time-domain per-mode evolution of the coupled vorticity-amplitude
//! system, contour-integral reconstruction of the same semigroup from
//! resolvent solves, and growth-exponent fitting across wavenumbers.
//!
//! The stepper integrates, for one wavenumber `k`,
//!
//! ```text
//! d/dt A      = -(ik + ik|k|) A + ik V[omega]
//! d/dt omega  = -ik V_s omega + ik U_s'' V_y[omega] + ik U_s'' y A
//!               + d^2/dy^2 omega
//! ```
//!
//! with the wall condition `d/dy omega(0) = ik|k| A` and decay at the
//! truncation boundary. Under these boundary conditions the trace
//! constraint `U[omega] = A` is propagated from compatible data, so its
//! drift is a direct measure of discretization quality and is monitored
//! every step.
//!
//! The same solution can be reconstructed at a fixed time through the
//! resolvent: the semigroup equals a contour integral of
//! `e^{t lambda} (lambda + L)^{-1}` over a wedge opening into the left
//! half-plane, evaluated here with composite Simpson quadrature and one
//! monolithic solve per node. Agreement of the two routes is the main
//! cross-check of both.

use num_complex::Complex64;

use crate::bounds::norm_h;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linsolve::{C64, CMatrix, LuFactors};
use crate::shearflow::ShearFlow;
use crate::tripledeck;

/// Relative trace-constraint drift that flags a trajectory as unstable.
pub const DRIFT_LIMIT: f64 = 1e-3;

/// Norm threshold beyond which the state is renormalized and the factor
/// moved into the logarithmic offset.
const RESCALE_THRESHOLD: f64 = 1e100;

/// Largest number of recorded samples per trajectory; intermediate
/// steps still run, they are just not stored.
const MAX_SAMPLES: usize = 256;

/// One recorded state of a trajectory. To keep exponential growth
/// representable, the stored profile and amplitude are the true state
/// times `exp(-log_offset)`; norms are kept in logarithmic form.
#[derive(Clone, Debug)]
pub struct Sample {
    /// Time of the sample.
    pub t: f64,
    /// Vorticity profile on the grid nodes, scaled by `exp(-log_offset)`.
    pub omega: Vec<C64>,
    /// Amplitude, scaled by `exp(-log_offset)`.
    pub a: C64,
    /// Natural log of the accumulated rescaling factor.
    pub log_offset: f64,
    /// `ln` of the solution-space norm of the unscaled state; minus
    /// infinity for an identically zero state.
    pub log_norm_h: f64,
}

impl Sample {
    /// Solution-space norm of the unscaled state. Overflows to infinity
    /// only past `exp(708)`.
    pub fn norm_h(&self) -> f64 {
        self.log_norm_h.exp()
    }
}

/// A completed per-mode evolution: thinned state samples at strictly
/// increasing times starting from zero, plus the constraint-drift
/// summary.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Wavenumber of the mode.
    pub k: f64,
    /// Step size actually used; the requested step is shortened so an
    /// integer number of steps lands exactly on the final time.
    pub dt: f64,
    /// Recorded states; the first is the initial data at `t = 0`, the
    /// last is the final time.
    pub samples: Vec<Sample>,
    /// Largest relative trace-constraint drift `|U[omega] - A|` over the
    /// solution norm seen at any step.
    pub max_drift: f64,
    /// Whether the drift ever exceeded [`DRIFT_LIMIT`].
    pub drift_flagged: bool,
}

impl Trajectory {
    /// The state at the final time.
    pub fn final_sample(&self) -> &Sample {
        self.samples.last().expect("trajectory has samples")
    }

    /// `ln` of the solution-norm amplification over the whole run,
    /// `ln(‖state(T)‖ / ‖state(0)‖)`; polynomial loss factors in the
    /// wavenumber can be read off from this without exponentiating.
    pub fn log_norm_ratio(&self) -> f64 {
        self.final_sample().log_norm_h - self.samples[0].log_norm_h
    }

    /// Exponential growth rate: least-squares slope of the log norm over
    /// the late-time window `[T/2, T]`, after the initial boundary-layer
    /// transient has passed. Not finite when the window contains a zero
    /// state.
    pub fn growth_rate(&self) -> f64 {
        let t_final = self.final_sample().t;
        let window: Vec<(f64, f64)> = self
            .samples
            .iter()
            .filter(|s| s.t >= 0.5 * t_final)
            .map(|s| (s.t, s.log_norm_h))
            .collect();
        slope(&window)
    }
}

/// Growth-exponent fit `sigma(k) ~ prefactor * k^exponent` over a sweep
/// of trajectories.
#[derive(Clone, Debug)]
pub struct GevreyFit {
    /// Per-wavenumber growth rates that entered the fit.
    pub rates: Vec<(f64, f64)>,
    /// Wavenumbers whose window slope was not positive; their rate is
    /// floored at zero and they are excluded from the power-law fit.
    pub excluded: Vec<f64>,
    /// Fitted exponent of the power law.
    pub exponent: f64,
    /// Fitted prefactor of the power law.
    pub prefactor: f64,
    /// Root-mean-square residual of `ln sigma` against the fitted law.
    pub residual: f64,
    /// Per-wavenumber `ln` of the norm amplification over the full run.
    pub log_norm_ratios: Vec<(f64, f64)>,
}

/// Integrate one mode from `omega_init` and `a_init` up to time
/// `t_final`.
///
/// The scheme is second order overall: trapezoidal on the diffusion,
/// two-step extrapolation on advection, stretching and the nonlocal
/// couplings, and an exact exponential on the dispersive amplitude
/// rotation, whose frequency `k + k|k|` would otherwise dominate the
/// time-discretization error at large wavenumbers. The amplitude is
/// advanced first so the wall row of the implicit solve can use its new
/// value. The implicit matrix is factored once.
///
/// The march starts with two damped backward half-steps: data that is
/// trace-compatible generally has the wrong wall slope, and stepping
/// through that adjustment undamped leaves a first-order error tail.
///
/// The requested step must satisfy the advection stability margin
/// `dt |k| max|V_s| <= 1/2` and is shortened to land exactly on
/// `t_final`. Compatible data has `a_init = U[omega_init]`; the drift
/// of that constraint is monitored every step and flags the trajectory
/// when it passes [`DRIFT_LIMIT`].
pub fn step_mode(
    flow: &ShearFlow,
    k: f64,
    grid: &Grid,
    omega_init: &[C64],
    a_init: C64,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory> {
    if k == 0.0 || !k.is_finite() {
        return Err(Error::InvalidMode(format!(
            "wavenumber must be nonzero and finite, got k = {k}"
        )));
    }
    assert_eq!(
        omega_init.len(),
        grid.node_count(),
        "profile length mismatch"
    );
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::Config(format!(
            "final time must be positive and finite, got {t_final}"
        )));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Config(format!(
            "step size must be positive and finite, got {dt}"
        )));
    }

    let n = grid.degree();
    let mut vs = vec![0.0; n + 1];
    let mut us2 = vec![0.0; n + 1];
    for (i, &y) in grid.nodes().iter().enumerate() {
        vs[i] = flow.vs(y)?;
        us2[i] = flow.eval(y)?.2;
    }
    let vs_max = vs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let margin = dt * k.abs() * vs_max;
    if margin > 0.5 * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "step size violates the advection stability margin: \
             dt |k| max|V_s| = {margin:.3e} > 1/2"
        )));
    }

    let steps = (t_final / dt - 1e-9).ceil().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let stride = steps.div_ceil(MAX_SAMPLES).max(1);

    let ik = Complex64::new(0.0, k);
    let ik_abs_k = Complex64::new(0.0, k * k.abs());
    let mu = ik + ik_abs_k;
    let inv_dt = Complex64::new(1.0 / dt, 0.0);

    // Implicit matrix: identity over dt minus half the diffusion, with
    // the wall row carrying the Neumann condition and the far row the
    // truncation decay.
    let mut matrix = CMatrix::zeros(n + 1, n + 1);
    for i in 1..n {
        for j in 0..=n {
            matrix[(i, j)] = Complex64::new(-0.5 * grid.d2()[(i, j)], 0.0);
        }
        matrix[(i, i)] += inv_dt;
    }
    for (j, &v) in grid.d1().row(0).iter().enumerate() {
        matrix[(0, j)] = Complex64::new(v, 0.0);
    }
    matrix[(n, n)] = Complex64::new(1.0, 0.0);
    let lu = LuFactors::factor(&matrix)?;

    // Startup matrix: backward half-steps carry the full diffusion
    // weight, with the same boundary rows.
    let mut startup = CMatrix::zeros(n + 1, n + 1);
    for i in 1..n {
        for j in 0..=n {
            startup[(i, j)] = Complex64::new(-grid.d2()[(i, j)], 0.0);
        }
        startup[(i, i)] += 2.0 * inv_dt;
    }
    for (j, &v) in grid.d1().row(0).iter().enumerate() {
        startup[(0, j)] = Complex64::new(v, 0.0);
    }
    startup[(n, n)] = Complex64::new(1.0, 0.0);
    let startup_lu = LuFactors::factor(&startup)?;

    // Exact amplitude propagator over a full and a half step, with the
    // moment weights that integrate a linear-in-time source against it.
    let z_full = -mu * dt;
    let (m0_full, m1_full, _) = exp_moments(z_full);
    let decay_full = z_full.exp();
    let weight_now = dt * (2.0 * m0_full - m1_full);
    let weight_old = -dt * (m0_full - m1_full);
    let z_half = -mu * (0.5 * dt);
    let (m0_half, _, _) = exp_moments(z_half);
    let decay_half = z_half.exp();
    let weight_half = 0.5 * dt * m0_half;

    // Explicit terms: advection, stretching and the amplitude coupling
    // in the vorticity equation, and the nonlocal mean driving the
    // amplitude equation.
    let explicit = |omega: &[C64], a: C64| -> (Vec<C64>, C64) {
        let vy = grid.vy(omega);
        let field = (0..=n)
            .map(|i| {
                let y = grid.nodes()[i];
                -ik * vs[i] * omega[i] + ik * us2[i] * vy[i] + ik * us2[i] * y * a
            })
            .collect();
        (field, ik * grid.mean_v(omega))
    };

    let mut omega = omega_init.to_vec();
    let mut a = a_init;
    let mut log_offset = 0.0_f64;
    let mut previous: Option<(Vec<C64>, C64)> = None;
    let mut max_drift = 0.0_f64;

    let mut samples = Vec::with_capacity(steps / stride + 2);
    let initial_norm = norm_h(grid, &omega, a);
    samples.push(Sample {
        t: 0.0,
        omega: omega.clone(),
        a,
        log_offset,
        log_norm_h: initial_norm.ln(),
    });

    for step in 1..=steps {
        if step == 1 {
            // Seed the extrapolation history at t = 0, then take the
            // two damped half-steps.
            previous = Some(explicit(&omega, a));
            for _ in 0..2 {
                let (field, mean) = explicit(&omega, a);
                a = decay_half * a + weight_half * mean;
                let mut rhs = vec![Complex64::new(0.0, 0.0); n + 1];
                for i in 1..n {
                    rhs[i] = 2.0 * inv_dt * omega[i] + field[i];
                }
                rhs[0] = ik_abs_k * a;
                omega = startup_lu.solve_vec(&rhs);
            }
        } else {
            let (field, mean) = explicit(&omega, a);
            let (prev_field, prev_mean) = previous
                .take()
                .expect("extrapolation history follows startup");
            let field_ab: Vec<C64> = field
                .iter()
                .zip(&prev_field)
                .map(|(now, old)| 1.5 * now - 0.5 * old)
                .collect();

            a = decay_full * a + weight_now * mean + weight_old * prev_mean;

            let d2_omega = grid.d2().mul_vec_c(&omega);
            let mut rhs = vec![Complex64::new(0.0, 0.0); n + 1];
            for i in 1..n {
                rhs[i] = inv_dt * omega[i] + 0.5 * d2_omega[i] + field_ab[i];
            }
            rhs[0] = ik_abs_k * a;
            omega = lu.solve_vec(&rhs);
            previous = Some((field, mean));
        }

        let mut nh = norm_h(grid, &omega, a);
        if nh > 0.0 {
            let drift = (grid.mean_u(&omega) - a).norm() / nh;
            max_drift = max_drift.max(drift);
        }
        if nh > RESCALE_THRESHOLD {
            let factor = Complex64::new(1.0 / nh, 0.0);
            for v in omega.iter_mut() {
                *v *= factor;
            }
            a *= factor;
            if let Some((field, mean)) = previous.as_mut() {
                for v in field.iter_mut() {
                    *v *= factor;
                }
                *mean *= factor;
            }
            log_offset += nh.ln();
            nh = 1.0;
        }

        if step % stride == 0 || step == steps {
            samples.push(Sample {
                t: step as f64 * dt,
                omega: omega.clone(),
                a,
                log_offset,
                log_norm_h: nh.ln() + log_offset,
            });
        }
    }

    Ok(Trajectory {
        k,
        dt,
        samples,
        max_drift,
        drift_flagged: max_drift > DRIFT_LIMIT,
    })
}

/// Contour placement and quadrature tolerances for
/// [`contour_semigroup`].
#[derive(Clone, Copy, Debug)]
pub struct ContourSettings {
    /// Height of the contour apex, `Re lambda = k_star |k|^{2/3}` at the
    /// real axis; must be to the right of the spectrum.
    pub k_star: f64,
    /// Opening slope of the wedge into the left half-plane. When absent
    /// the slope is capped so the wedge clears the advective
    /// frequencies, `|Im| <= |k| max V_s` for the vorticity and
    /// `|k| (1 + |k|)` for the amplitude, before crossing the imaginary
    /// axis; a fixed slope that ignores those bands makes the integral
    /// converge to the wrong state because part of the spectrum ends up
    /// on the wrong side of the contour.
    pub theta: Option<f64>,
    /// Relative tolerance for both the refinement loop and the tail
    /// estimate.
    pub tolerance: f64,
    /// Interval length of the coarsest mesh as a fraction of the local
    /// distance from the contour to the advective band, which is the
    /// resolvent's analyticity radius and hence its variation scale.
    pub grading: f64,
    /// Largest number of mesh doublings.
    pub max_doublings: usize,
    /// Truncation height of the contour. When absent the truncation
    /// starts at the exponential-decay estimate and is extended until
    /// the measured tail meets the tolerance; when set it is used as is.
    pub lambda_max: Option<f64>,
}

impl Default for ContourSettings {
    fn default() -> Self {
        Self {
            k_star: 10.0,
            theta: None,
            tolerance: 1e-4,
            grading: 0.15,
            max_doublings: 8,
            lambda_max: None,
        }
    }
}

/// Widest wedge opening kept when the advective band allows it.
const THETA_CAP: f64 = 0.2;

/// Fraction of the apex height still to the right of the band at its
/// deepest point; the remaining margin keeps every quadrature node away
/// from the spectrum.
const BAND_MARGIN: f64 = 0.8;

/// Largest number of truncation-height extensions before giving up.
const MAX_EXTENSIONS: usize = 16;

/// Semigroup state reconstructed by contour quadrature, with the
/// truncation diagnostics needed to judge it.
#[derive(Clone, Debug)]
pub struct ContourReconstruction {
    /// Vorticity profile at the requested time.
    pub omega: Vec<C64>,
    /// Amplitude at the requested time.
    pub a: C64,
    /// Estimate of the neglected contour tails, relative to the norm of
    /// the result.
    pub tail_estimate: f64,
    /// Quadrature intervals across both half-rays at convergence.
    pub intervals: usize,
    /// Truncation height `|Im lambda|` of the contour.
    pub lambda_max: f64,
}

/// Evaluate the semigroup at time `t` by quadrature of the resolvent
/// contour integral
///
/// ```text
/// state(t) = (2 pi i)^{-1} \int_G e^{t lambda} (lambda + L)^{-1} data dlambda
/// ```
///
/// over the wedge `Re lambda = k_star |k|^{2/3} - theta |Im lambda|`,
/// truncated at `|Im lambda| = lambda_max`. Each node is one monolithic
/// resolvent solve.
///
/// Three measures keep the node count down. The identity part of the
/// resolvent is deflated: the quadrature integrates
/// `R(lambda) data - data / lambda`, whose full-wedge integral differs
/// from the semigroup exactly by `data` (the deflated term integrates
/// to one by residue), and whose tails decay one power of `lambda`
/// faster. Each panel uses a product rule that integrates
/// `e^{t lambda}` times the quadratic interpolant of the smooth
/// resolvent factor exactly, so resolution is set by the resolvent's
/// smoothness, not by the oscillation of the exponential. And the mesh
/// is graded: intervals scale with the distance from the contour to
/// the advective band, which bounds the resolvent's variation scale,
/// and shrink near the apex where the exponential envelope amplifies
/// quadrature error relative to the reconstructed state.
///
/// Refinement halves every interval until the result moves less than
/// the tolerance, then extends the truncation until the measured tail
/// estimate meets it; exhausting either budget is a contour error.
pub fn contour_semigroup(
    flow: &ShearFlow,
    k: f64,
    grid: &Grid,
    omega_init: &[C64],
    a_init: C64,
    t: f64,
    settings: &ContourSettings,
) -> Result<ContourReconstruction> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Config(format!(
            "contour reconstruction needs a positive finite time, got {t}"
        )));
    }
    if !(settings.tolerance > 0.0)
        || !settings.tolerance.is_finite()
        || !(settings.grading > 0.0)
        || !settings.grading.is_finite()
    {
        return Err(Error::Config(format!(
            "contour tolerance and grading must be positive and finite, \
             got {} and {}",
            settings.tolerance, settings.grading
        )));
    }
    assert_eq!(
        omega_init.len(),
        grid.node_count(),
        "profile length mismatch"
    );
    let apex = settings.k_star * k.abs().powf(2.0 / 3.0);
    if t * apex > 34.0 {
        return Err(Error::Config(format!(
            "the reconstruction cancels a factor e^(t apex) = e^{:.1} \
             against an order-one state, past what double precision can \
             resolve; keep t k_star |k|^(2/3) below 34",
            t * apex
        )));
    }
    let vs_max = flow.vs(grid.y_max())?;
    // The spectrum's imaginary parts span the advective frequencies of
    // the vorticity transport, |k| V_s in [0, |k| max V_s], and of the
    // amplitude transport, |k + k|k|| = |k| (1 + |k|), which outruns
    // the vorticity band once |k| + 1 exceeds max V_s. The wedge has to
    // clear the larger of the two before it crosses into the left
    // half-plane, or the amplitude mode ends up outside the contour and
    // the integral converges to a state with that mode missing.
    let freq_max = (k.abs() * vs_max).max(k.abs() * (1.0 + k.abs()));
    let theta = settings
        .theta
        .unwrap_or_else(|| THETA_CAP.min(BAND_MARGIN * apex / freq_max));
    // The band sits on the side of the real axis opposite to the sign
    // of k.
    let band_im = if k > 0.0 {
        (-freq_max, 0.0)
    } else {
        (0.0, freq_max)
    };
    let resolvent = |lambda: C64| -> Result<NodeValue> {
        let mode = crate::mode::Mode::new(k, lambda)?;
        let solution = tripledeck::direct_solve(flow, &mode, grid, omega_init, a_init)?;
        Ok((solution.omega, solution.a))
    };
    let quad = contour_quadrature(
        apex,
        theta,
        band_im,
        t,
        settings,
        (omega_init, a_init),
        &resolvent,
    )?;
    let scale = norm_h(grid, &quad.omega, quad.a).max(f64::MIN_POSITIVE);
    Ok(ContourReconstruction {
        omega: quad.omega,
        a: quad.a,
        tail_estimate: quad.tail / scale,
        intervals: quad.intervals,
        lambda_max: quad.lambda_max,
    })
}

/// Raw output of the refinement loop.
struct QuadratureOutcome {
    omega: Vec<C64>,
    a: C64,
    tail: f64,
    intervals: usize,
    lambda_max: f64,
}

/// One resolvent evaluation: profile and amplitude.
type NodeValue = (Vec<C64>, C64);

/// Stored nodes of one half-ray: the deflated smooth factor
/// `R(lambda(s)) data - data / lambda(s)` on a graded mesh in `s`.
struct Ray {
    /// Signed slope of `lambda(s) = apex + mu s` along this ray.
    mu: C64,
    /// Orientation factor multiplying the ray sum in the full integral.
    weight: C64,
    /// Arc positions paired with node values; odd indices are the panel
    /// midpoints.
    nodes: Vec<(f64, NodeValue)>,
}

/// Moments `M_j = int_0^1 u^j e^{z u} du` for `j = 0, 1, 2`. Near
/// `z = 0` the closed forms cancel, so a short series takes over.
fn exp_moments(z: C64) -> (C64, C64, C64) {
    if z.norm() < 0.5 {
        // Series M_j = sum_n z^n / (n! (n + j + 1)).
        let mut m = [Complex64::new(0.0, 0.0); 3];
        let mut term = Complex64::new(1.0, 0.0);
        for n in 0..16 {
            for (j, acc) in m.iter_mut().enumerate() {
                *acc += term / (n + j + 1) as f64;
            }
            term *= z / (n + 1) as f64;
        }
        (m[0], m[1], m[2])
    } else {
        let ez = z.exp();
        let m0 = (ez - 1.0) / z;
        let m1 = (ez * (z - 1.0) + 1.0) / (z * z);
        let m2 = (ez * (z * z - 2.0 * z + 2.0) - 2.0) / (z * z * z);
        (m0, m1, m2)
    }
}

/// Product-rule weights for one panel: integrates `e^{z u}` against the
/// quadratic Lagrange basis on `u in [0, 1]` exactly. Reduces to
/// Simpson weights at z = 0.
fn panel_weights(z: C64) -> (C64, C64, C64) {
    let (m0, m1, m2) = exp_moments(z);
    (2.0 * m2 - 3.0 * m1 + m0, 4.0 * (m1 - m2), 2.0 * m2 - m1)
}

/// Hard cap on graded-mesh nodes per half-ray.
const MAX_MESH_NODES: usize = 4_000_000;

/// Refinement loop shared by the semigroup reconstruction and the
/// quadrature oracle tests. `datum` is the state whose identity part is
/// deflated; `resolvent` returns `R(lambda) datum`; `band_im` is the
/// interval of the imaginary axis covered by the advective band, which
/// shapes the mesh grading. Nodes are computed once and reused across
/// mesh doublings and truncation extensions.
fn contour_quadrature(
    apex: f64,
    theta: f64,
    band_im: (f64, f64),
    t: f64,
    settings: &ContourSettings,
    datum: (&[C64], C64),
    resolvent: &dyn Fn(C64) -> Result<NodeValue>,
) -> Result<QuadratureOutcome> {
    let tol = settings.tolerance;
    let (datum_omega, datum_a) = datum;
    let profile_len = datum_omega.len();
    // Tolerances are relative to the answer or to the datum, whichever
    // is larger: a strongly damped state is resolved to an absolute
    // error of tol times the data it came from, not to a vanishing
    // fraction of itself.
    let floor =
        (datum_omega.iter().map(|v| v.norm_sqr()).sum::<f64>() + datum_a.norm_sqr()).sqrt();

    let mut rays = [
        Ray {
            mu: Complex64::new(-theta, 1.0),
            weight: Complex64::new(-theta, 1.0) / Complex64::new(0.0, 2.0 * std::f64::consts::PI),
            nodes: Vec::new(),
        },
        Ray {
            mu: Complex64::new(-theta, -1.0),
            weight: Complex64::new(theta, 1.0) / Complex64::new(0.0, 2.0 * std::f64::consts::PI),
            nodes: Vec::new(),
        },
    ];

    // Deflated smooth factor at arc position s along one ray.
    let eval = |mu: C64, s: f64| -> Result<NodeValue> {
        let lambda = apex + mu * s;
        let (mut omega, mut a) = resolvent(lambda)?;
        for (v, d) in omega.iter_mut().zip(datum_omega) {
            *v -= d / lambda;
        }
        a -= datum_a / lambda;
        Ok((omega, a))
    };

    // Interval length targeted at arc position s. The resolvent varies
    // on the scale of its distance to the advective band, and near the
    // apex the exponential envelope amplifies quadrature error relative
    // to the reconstructed state, so intervals shrink there by the
    // fourth root of the amplification, floored to keep the mesh
    // finite.
    let (band_lo, band_hi) = band_im;
    let spacing = |mu: C64, s: f64, fraction: f64| -> f64 {
        let re = apex - theta * s;
        let im = mu.im * s;
        let dx = re.max(0.0);
        let dy = (im - band_hi).max(band_lo - im).max(0.0);
        let dist = dx.hypot(dy).max(f64::MIN_POSITIVE);
        let damp = (-(t * re).max(0.0) / 4.0).exp().max(1e-3);
        fraction * dist * damp
    };

    // Nodes of a graded mesh over [s_from, s_to]: panel edges
    // interleaved with midpoints, closing exactly at s_to.
    let mesh = |mu: C64, s_from: f64, s_to: f64, fraction: f64| -> Result<Vec<f64>> {
        let mut nodes = Vec::new();
        let mut s = s_from;
        loop {
            let h = spacing(mu, s, fraction);
            let remaining = s_to - s;
            if remaining <= 3.0 * h {
                nodes.push(s);
                nodes.push(s + 0.5 * remaining);
                nodes.push(s_to);
                return Ok(nodes);
            }
            nodes.push(s);
            nodes.push(s + h);
            s += 2.0 * h;
            if nodes.len() > MAX_MESH_NODES {
                return Err(Error::Contour(format!(
                    "graded mesh passed {MAX_MESH_NODES} nodes; the \
                     tolerance or grading is too aggressive for this \
                     contour"
                )));
            }
        }
    };

    // Coarse truncation from exponential decay alone; the measured tail
    // extends it when the slow-decaying part still matters.
    let pinned = settings.lambda_max.is_some();
    let mut s_end = settings
        .lambda_max
        .unwrap_or_else(|| ((t * apex + (1.0 / tol).ln() + 5.0) / (theta * t)).min(3.0 * apex / theta));
    let mut fraction = settings.grading;

    for ray in rays.iter_mut() {
        for s in mesh(ray.mu, 0.0, s_end, fraction)? {
            ray.nodes.push((s, eval(ray.mu, s)?));
        }
    }

    // Panel sum over the current node set.
    let total = |rays: &[Ray; 2]| -> NodeValue {
        let mut omega = vec![Complex64::new(0.0, 0.0); profile_len];
        let mut a = Complex64::new(0.0, 0.0);
        for ray in rays {
            let mut ray_omega = vec![Complex64::new(0.0, 0.0); profile_len];
            let mut ray_a = Complex64::new(0.0, 0.0);
            for p in 0..ray.nodes.len() / 2 {
                let start = &ray.nodes[2 * p];
                let middle = &ray.nodes[2 * p + 1];
                let end = &ray.nodes[2 * p + 2];
                let h = middle.0 - start.0;
                let (c0, cm, c1) = panel_weights(2.0 * t * h * ray.mu);
                let envelope = (t * (apex + ray.mu * start.0)).exp() * 2.0 * h;
                for (c, (node_omega, node_a)) in
                    [(c0, &start.1), (cm, &middle.1), (c1, &end.1)]
                {
                    let w = envelope * c;
                    for (o, v) in ray_omega.iter_mut().zip(node_omega) {
                        *o += w * v;
                    }
                    ray_a += w * node_a;
                }
            }
            for (o, v) in omega.iter_mut().zip(&ray_omega) {
                *o += ray.weight * v;
            }
            a += ray.weight * ray_a;
        }
        // Adding the datum restores the deflated identity part, whose
        // full-wedge integral is exactly one.
        for (o, d) in omega.iter_mut().zip(datum_omega) {
            *o += d;
        }
        a += datum_a;
        (omega, a)
    };

    // Measured tail: endpoint integrand magnitude over the phase rate,
    // one power of the oscillation gained by parts.
    let tail_of = |rays: &[Ray; 2]| -> f64 {
        rays.iter()
            .map(|ray| {
                let (s, (omega_end, a_end)) = ray.nodes.last().expect("mesh is never empty");
                let norm = (omega_end.iter().map(|v| v.norm_sqr()).sum::<f64>()
                    + a_end.norm_sqr())
                .sqrt();
                let envelope = (t * (apex + ray.mu * *s).re).exp();
                2.0 * envelope * norm * ray.mu.norm() / (2.0 * std::f64::consts::PI * t)
            })
            .sum()
    };

    let state_gap = |x: &NodeValue, y: &NodeValue| -> f64 {
        let mut gap = 0.0;
        for (a, b) in x.0.iter().zip(&y.0) {
            gap += (a - b).norm_sqr();
        }
        (gap + (x.1 - y.1).norm_sqr()).sqrt()
    };
    let state_norm = |x: &NodeValue| -> f64 {
        (x.0.iter().map(|v| v.norm_sqr()).sum::<f64>() + x.1.norm_sqr()).sqrt()
    };

    let mut doublings = 0;
    let mut extensions = 0;
    let mut answer = total(&rays);
    loop {
        // Refine in place until halving the mesh stops moving the
        // result.
        loop {
            if doublings == settings.max_doublings {
                let count: usize = rays.iter().map(|ray| ray.nodes.len() - 1).sum();
                return Err(Error::Contour(format!(
                    "refinement stalled at {count} intervals without \
                     reaching tolerance {tol:.1e}"
                )));
            }
            doublings += 1;
            fraction /= 2.0;
            for ray in rays.iter_mut() {
                let old = std::mem::take(&mut ray.nodes);
                let positions: Vec<f64> = old.iter().map(|node| node.0).collect();
                let mut refined = Vec::with_capacity(2 * old.len() - 1);
                for (j, node) in old.into_iter().enumerate() {
                    if j > 0 {
                        let s = 0.5 * (positions[j - 1] + positions[j]);
                        refined.push((s, eval(ray.mu, s)?));
                    }
                    refined.push(node);
                }
                ray.nodes = refined;
            }
            let refined_answer = total(&rays);
            let gap = state_gap(&refined_answer, &answer);
            let scale = state_norm(&refined_answer).max(floor).max(f64::MIN_POSITIVE);
            answer = refined_answer;
            if gap <= tol * scale {
                break;
            }
        }

        let tail = tail_of(&rays);
        let scale = state_norm(&answer).max(floor).max(f64::MIN_POSITIVE);
        if pinned || tail <= tol * scale {
            let (omega, a) = answer;
            return Ok(QuadratureOutcome {
                omega,
                a,
                tail,
                intervals: rays.iter().map(|ray| ray.nodes.len() - 1).sum(),
                lambda_max: s_end,
            });
        }
        if extensions == MAX_EXTENSIONS {
            return Err(Error::Contour(format!(
                "tail estimate {:.3e} still above tolerance {tol:.1e} at \
                 truncation height {s_end:.3e}",
                tail / scale,
            )));
        }
        extensions += 1;
        let extended = 1.5 * s_end;
        for ray in rays.iter_mut() {
            for s in mesh(ray.mu, s_end, extended, fraction)?.into_iter().skip(1) {
                ray.nodes.push((s, eval(ray.mu, s)?));
            }
        }
        s_end = extended;
        answer = total(&rays);
    }
}

/// Fit the growth-rate power law `sigma(k) = prefactor * k^exponent`
/// over a sweep of trajectories sharing flow and data family.
///
/// Each trajectory contributes its late-window growth rate. Rates that
/// come out non-positive or non-finite (the mode decays, or the state
/// is identically zero) are floored at zero and excluded from the
/// logarithmic fit; at least four distinct wavenumbers must survive.
pub fn fit_gevrey(trajectories: &[Trajectory]) -> Result<GevreyFit> {
    let mut rates = Vec::with_capacity(trajectories.len());
    let mut excluded = Vec::new();
    let mut log_norm_ratios = Vec::with_capacity(trajectories.len());
    let mut fit_points = Vec::new();
    for trajectory in trajectories {
        let k = trajectory.k;
        let sigma = trajectory.growth_rate();
        log_norm_ratios.push((k, trajectory.log_norm_ratio()));
        if sigma.is_finite() && sigma > 0.0 {
            rates.push((k, sigma));
            fit_points.push((k.abs().ln(), sigma.ln()));
        } else {
            rates.push((k, 0.0));
            excluded.push(k);
        }
    }

    let mut distinct: Vec<f64> = fit_points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(Error::Config(format!(
            "growth-rate fit needs at least 4 distinct wavenumbers with \
             positive rates, got {} ({} excluded)",
            distinct.len(),
            excluded.len()
        )));
    }

    let exponent = slope(&fit_points);
    let n = fit_points.len() as f64;
    let mean_x = fit_points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = fit_points.iter().map(|p| p.1).sum::<f64>() / n;
    let intercept = mean_y - exponent * mean_x;
    let residual = (fit_points
        .iter()
        .map(|&(x, y)| (y - exponent * x - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();

    Ok(GevreyFit {
        rates,
        excluded,
        exponent,
        prefactor: intercept.exp(),
        residual,
        log_norm_ratios,
    })
}

/// Least-squares slope of `y` against `x`; NaN with fewer than two
/// distinct abscissas or any non-finite ordinate.
fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return f64::NAN;
    }
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for &(x, y) in points {
        cov += (x - mean_x) * (y - mean_y);
        var += (x - mean_x) * (x - mean_x);
    }
    cov / var
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Domain;
    use crate::shearflow::FlowKind;
    use crate::tripledeck::DataFamily;

    fn half_grid(n: usize) -> Grid {
        Grid::build(Domain::HalfLine, n, 40.0, 0.12).unwrap()
    }

    fn exp_flow() -> ShearFlow {
        ShearFlow::new(FlowKind::ExpConcave)
    }

    fn default_dt(k: f64, y_max: f64) -> f64 {
        0.05 / (k * (y_max + 1.0))
    }

    fn compatible_data(grid: &Grid) -> (Vec<C64>, C64) {
        let data = DataFamily::Gaussian.profile(grid);
        let a_init = grid.mean_u(&data);
        (data, a_init)
    }

    fn state_gap(grid: &Grid, x: (&[C64], C64), y: (&[C64], C64)) -> f64 {
        let diff: Vec<C64> = x.0.iter().zip(y.0).map(|(a, b)| a - b).collect();
        norm_h(grid, &diff, x.1 - y.1)
    }

    #[test]
    fn zero_data_keeps_a_zero_trajectory() {
        let flow = exp_flow();
        let grid = half_grid(64);
        let zeros = vec![Complex64::new(0.0, 0.0); grid.node_count()];
        let trajectory = step_mode(
            &flow,
            8.0,
            &grid,
            &zeros,
            zeros[0],
            0.1,
            default_dt(8.0, 40.0),
        )
        .unwrap();
        assert_eq!(trajectory.max_drift, 0.0);
        assert!(!trajectory.drift_flagged);
        for sample in &trajectory.samples {
            assert!(sample.omega.iter().all(|v| v.norm() == 0.0));
            assert_eq!(sample.a, zeros[0]);
            assert_eq!(sample.norm_h(), 0.0);
        }
    }

    #[test]
    fn step_size_and_time_are_validated() {
        let flow = exp_flow();
        let grid = half_grid(64);
        let (data, a_init) = compatible_data(&grid);
        let too_big = 1.0 / 8.0;
        assert!(matches!(
            step_mode(&flow, 8.0, &grid, &data, a_init, 1.0, too_big),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            step_mode(&flow, 8.0, &grid, &data, a_init, -1.0, 1e-3),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            step_mode(&flow, 0.0, &grid, &data, a_init, 1.0, 1e-3),
            Err(Error::InvalidMode(_))
        ));
    }

    #[test]
    fn sample_times_increase_from_zero() {
        let flow = exp_flow();
        let grid = half_grid(64);
        let (data, a_init) = compatible_data(&grid);
        let trajectory =
            step_mode(&flow, 8.0, &grid, &data, a_init, 0.3, default_dt(8.0, 40.0)).unwrap();
        assert_eq!(trajectory.samples[0].t, 0.0);
        for pair in trajectory.samples.windows(2) {
            assert!(pair[1].t > pair[0].t);
        }
        let t_final = trajectory.final_sample().t;
        assert!((t_final - 0.3).abs() < 1e-12);
    }

    #[test]
    fn vanishing_wavenumber_limit_matches_heat_decay() {
        // At k near zero every coupling term carries a factor k, leaving
        // pure diffusion with a Neumann wall and Dirichlet far row; the
        // eigenfunctions are cos((2j-1) pi y / (2 Y)) with rates
        // ((2j-1) pi / (2 Y))^2.
        let flow = exp_flow();
        let y_max = 20.0;
        let grid = Grid::build(Domain::HalfLine, 96, y_max, 0.12).unwrap();
        let wavelength = 5.0 * std::f64::consts::PI / (2.0 * y_max);
        let data: Vec<C64> = grid
            .nodes()
            .iter()
            .map(|&y| Complex64::new((wavelength * y).cos(), 0.0))
            .collect();
        let a_init = grid.mean_u(&data);
        let t_final = 5.0;
        let trajectory =
            step_mode(&flow, 1e-8, &grid, &data, a_init, t_final, 0.01).unwrap();
        let l2 = |f: &[C64]| -> f64 {
            grid.quad_weights()
                .iter()
                .zip(f)
                .map(|(q, v)| q * v.norm_sqr())
                .sum::<f64>()
                .sqrt()
        };
        let rate = wavelength * wavelength;
        let measured = l2(&trajectory.final_sample().omega) / l2(&data);
        let exact = (-rate * t_final).exp();
        assert!(
            (measured - exact).abs() / exact < 1e-4,
            "decay {measured} vs {exact}"
        );
    }

    #[test]
    fn stepper_is_linear_in_the_data() {
        let flow = exp_flow();
        let grid = half_grid(64);
        let first = DataFamily::Gaussian.profile(&grid);
        let second = DataFamily::Rational.profile(&grid);
        let ca = Complex64::new(2.0, 0.0);
        let cb = Complex64::new(0.0, 1.0);
        let combined: Vec<C64> = first
            .iter()
            .zip(&second)
            .map(|(x, y)| ca * x + cb * y)
            .collect();
        let k = 8.0_f64;
        let dt = default_dt(k, 40.0);
        let run = |data: &[C64]| {
            let a_init = grid.mean_u(data);
            step_mode(&flow, k, &grid, data, a_init, 0.05, dt).unwrap()
        };
        let tr_first = run(&first);
        let tr_second = run(&second);
        let tr_combined = run(&combined);
        let end_first = tr_first.final_sample();
        let end_second = tr_second.final_sample();
        let end_combined = tr_combined.final_sample();
        let superposed: Vec<C64> = end_first
            .omega
            .iter()
            .zip(&end_second.omega)
            .map(|(x, y)| ca * x + cb * y)
            .collect();
        let gap = state_gap(
            &grid,
            (&end_combined.omega, end_combined.a),
            (&superposed, ca * end_first.a + cb * end_second.a),
        );
        let scale = end_combined.norm_h();
        assert!(gap < 1e-12 * scale, "linearity gap {gap} at scale {scale}");
    }

    #[test]
    fn stepper_converges_at_second_order() {
        let flow = exp_flow();
        let grid = half_grid(128);
        let (data, a_init) = compatible_data(&grid);
        let k = 32.0;
        let t_final = 0.2;
        let dt = default_dt(k, 40.0);
        let finish = |dt: f64| {
            let tr = step_mode(&flow, k, &grid, &data, a_init, t_final, dt).unwrap();
            let end = tr.final_sample();
            (end.omega.clone(), end.a)
        };
        let coarse = finish(dt);
        let medium = finish(dt / 2.0);
        let fine = finish(dt / 4.0);
        let e1 = state_gap(&grid, (&coarse.0, coarse.1), (&medium.0, medium.1));
        let e2 = state_gap(&grid, (&medium.0, medium.1), (&fine.0, fine.1));
        let order = (e1 / e2).log2();
        assert!(
            (1.7..2.6).contains(&order),
            "measured order {order} (gaps {e1}, {e2})"
        );
    }

    #[test]
    fn concave_growth_rate_is_positive_and_below_the_contour() {
        let flow = exp_flow();
        let grid = half_grid(128);
        let (data, a_init) = compatible_data(&grid);
        let k = 32.0;
        let trajectory =
            step_mode(&flow, k, &grid, &data, a_init, 1.0, default_dt(k, 40.0)).unwrap();
        assert!(!trajectory.drift_flagged, "drift {}", trajectory.max_drift);
        let sigma = trajectory.growth_rate();
        let cap = 10.0 * k.powf(2.0 / 3.0);
        assert!(
            sigma > 0.0 && sigma < cap,
            "growth rate {sigma} outside (0, {cap})"
        );
    }

    #[test]
    fn contour_quadrature_reproduces_a_residue() {
        // Scalar oracle: a single pole inside the wedge integrates to
        // its residue weight e^{t a}; a pole to the right of the apex
        // leaves only the deflated datum, which cancels to zero.
        let k = 16.0_f64;
        let t = 0.1;
        let settings = ContourSettings {
            tolerance: 1e-6,
            ..ContourSettings::default()
        };
        let apex = settings.k_star * k.powf(2.0 / 3.0);
        let datum = [Complex64::new(1.0, 0.0)];
        let run = |pole: C64| {
            let eval = move |lambda: C64| -> Result<NodeValue> {
                Ok((vec![1.0 / (lambda - pole)], Complex64::new(0.0, 0.0)))
            };
            contour_quadrature(
                apex,
                0.2,
                (0.0, 0.0),
                t,
                &settings,
                (&datum, Complex64::new(0.0, 0.0)),
                &eval,
            )
            .unwrap()
        };

        let inside = Complex64::new(0.5 * apex, 3.0);
        let got = run(inside).omega[0];
        let expect = (t * inside).exp();
        assert!(
            (got - expect).norm() / expect.norm() < 1e-5,
            "residue {got} vs {expect}"
        );

        let outside = Complex64::new(2.0 * apex, 0.0);
        let spurious = run(outside).omega[0];
        assert!(
            spurious.norm() < 1e-5 * (t * apex).exp(),
            "pole right of the contour leaked {spurious}"
        );
    }

    #[test]
    fn contour_reconstruction_is_linear_and_recovers_damped_data() {
        let flow = exp_flow();
        let grid = half_grid(64);
        let k = 8.0_f64;
        let apex = 10.0 * k.powf(2.0 / 3.0);
        let seed = DataFamily::Gaussian.profile(&grid);
        let smooth = tripledeck::direct_solve(
            &flow,
            &crate::mode::Mode::new(k, Complex64::new(apex, 0.0)).unwrap(),
            &grid,
            &seed,
            grid.mean_u(&seed),
        )
        .unwrap();

        let settings = ContourSettings::default();
        let scale = norm_h(&grid, &smooth.omega, smooth.a);
        let datum_gap = |t: f64| {
            let recon =
                contour_semigroup(&flow, k, &grid, &smooth.omega, smooth.a, t, &settings)
                    .unwrap();
            assert!(recon.tail_estimate <= settings.tolerance);
            state_gap(&grid, (&recon.omega, recon.a), (&smooth.omega, smooth.a))
        };
        // The distance to the datum is the semigroup drift, first order
        // in t; it must be modest at t = 0.01 and shrink with t.
        let at_10ms = datum_gap(0.01);
        let at_2ms = datum_gap(0.002);
        assert!(
            at_10ms < 0.3 * scale,
            "short-time reconstruction drifted by {} of the datum",
            at_10ms / scale
        );
        assert!(
            at_2ms < 0.5 * at_10ms,
            "datum gap did not shrink with t: {at_2ms} vs {at_10ms}"
        );

        let t = 0.01;
        let recon =
            contour_semigroup(&flow, k, &grid, &smooth.omega, smooth.a, t, &settings)
                .unwrap();
        let doubled: Vec<C64> = smooth.omega.iter().map(|v| 2.0 * v).collect();
        let twice =
            contour_semigroup(&flow, k, &grid, &doubled, 2.0 * smooth.a, t, &settings)
                .unwrap();
        let expected: Vec<C64> = recon.omega.iter().map(|v| 2.0 * v).collect();
        let lin_gap = state_gap(
            &grid,
            (&twice.omega, twice.a),
            (&expected, 2.0 * recon.a),
        );
        assert!(lin_gap < 1e-10 * scale, "linearity gap {lin_gap}");
    }

    #[test]
    fn contour_matches_the_stepper() {
        let flow = exp_flow();
        let grid = half_grid(128);
        let (data, a_init) = compatible_data(&grid);
        let k = 32.0;
        let t = 0.1;
        let trajectory =
            step_mode(&flow, k, &grid, &data, a_init, t, default_dt(k, 40.0)).unwrap();
        let stepped = trajectory.final_sample();
        let recon = contour_semigroup(
            &flow,
            k,
            &grid,
            &data,
            a_init,
            t,
            &ContourSettings::default(),
        )
        .unwrap();
        let gap = state_gap(
            &grid,
            (&recon.omega, recon.a),
            (&stepped.omega, stepped.a),
        );
        let scale = stepped.norm_h();
        assert!(
            gap < 1e-3 * scale,
            "contour vs stepper differ by {} relative",
            gap / scale
        );
    }

    fn synthetic_trajectory(k: f64, sigma: f64) -> Trajectory {
        let samples = (0..=16)
            .map(|j| {
                let t = j as f64 / 16.0;
                Sample {
                    t,
                    omega: Vec::new(),
                    a: Complex64::new(0.0, 0.0),
                    log_offset: 0.0,
                    log_norm_h: sigma * t,
                }
            })
            .collect();
        Trajectory {
            k,
            dt: 1.0 / 16.0,
            samples,
            max_drift: 0.0,
            drift_flagged: false,
        }
    }

    #[test]
    fn gevrey_fit_recovers_an_injected_power_law() {
        let trajectories: Vec<Trajectory> = [8.0, 16.0, 32.0, 64.0, 128.0]
            .into_iter()
            .map(|k: f64| synthetic_trajectory(k, 2.0 * k.powf(2.0 / 3.0)))
            .collect();
        let fit = fit_gevrey(&trajectories).unwrap();
        assert!((fit.exponent - 2.0 / 3.0).abs() < 1e-6);
        assert!((fit.prefactor - 2.0).abs() < 1e-6);
        assert!(fit.residual < 1e-9);
        assert!(fit.excluded.is_empty());
        assert_eq!(fit.rates.len(), 5);
    }

    #[test]
    fn gevrey_fit_excludes_decaying_modes() {
        let mut trajectories: Vec<Trajectory> = [8.0, 16.0, 32.0, 64.0]
            .into_iter()
            .map(|k: f64| synthetic_trajectory(k, 2.0 * k.powf(2.0 / 3.0)))
            .collect();
        trajectories.push(synthetic_trajectory(4.0, -1.0));
        let fit = fit_gevrey(&trajectories).unwrap();
        assert_eq!(fit.excluded, vec![4.0]);
        assert!((fit.exponent - 2.0 / 3.0).abs() < 1e-6);
        let floored = fit.rates.iter().find(|r| r.0 == 4.0).unwrap();
        assert_eq!(floored.1, 0.0);

        let too_few: Vec<Trajectory> = [8.0, 16.0, 32.0]
            .into_iter()
            .map(|k: f64| synthetic_trajectory(k, k))
            .chain(std::iter::once(synthetic_trajectory(64.0, -1.0)))
            .collect();
        assert!(matches!(fit_gevrey(&too_few), Err(Error::Config(_))));
    }
}
