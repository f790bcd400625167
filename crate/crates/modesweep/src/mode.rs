//! Spectral parameters: one Fourier-Laplace mode `(k, lambda)` with the
//! derived quantities every solver stage keeps asking for (principal
//! square root, regime tag, absorption index, verified-region test).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linsolve::C64;

/// Regime of a mode relative to the advection scale: the first case has
/// `|lambda + i k |k||` at least half of `k^2`, the second is the
/// near-resonant complement. The solver path is identical; the tag only
/// labels reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseTag {
    One,
    Two,
}

impl std::fmt::Display for CaseTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CaseTag::One => write!(f, "case1"),
            CaseTag::Two => write!(f, "case2"),
        }
    }
}

/// One spectral mode: real wavenumber `k` and complex Laplace variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode {
    k: f64,
    lambda: C64,
}

impl Mode {
    /// A mode requires a nonzero finite wavenumber and a finite Laplace
    /// variable. The real part of `lambda` may have any sign here;
    /// operations that need the stable half-plane check it themselves.
    pub fn new(k: f64, lambda: C64) -> Result<Self> {
        if k == 0.0 || !k.is_finite() {
            return Err(Error::InvalidMode(format!(
                "wavenumber must be nonzero and finite, got k = {k}"
            )));
        }
        if !lambda.re.is_finite() || !lambda.im.is_finite() {
            return Err(Error::InvalidMode(format!(
                "Laplace variable must be finite, got lambda = {lambda}"
            )));
        }
        Ok(Self { k, lambda })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn lambda(&self) -> C64 {
        self.lambda
    }

    /// Principal square root of `lambda`, the branch with nonnegative
    /// real part; strictly positive whenever `lambda` avoids the closed
    /// negative real axis.
    pub fn sqrt_lambda(&self) -> C64 {
        self.lambda.sqrt()
    }

    /// `i k` as a complex scalar.
    pub fn ik(&self) -> C64 {
        Complex64::new(0.0, self.k)
    }

    /// `i k |k|`, the dispersive term of the amplitude equation.
    pub fn ik_abs_k(&self) -> C64 {
        Complex64::new(0.0, self.k * self.k.abs())
    }

    /// Regime tag: distance of `lambda` from the resonance at
    /// `-i k |k|` measured against `k^2 / 2`.
    pub fn case(&self) -> CaseTag {
        if (self.lambda + self.ik_abs_k()).norm() >= 0.5 * self.k * self.k {
            CaseTag::One
        } else {
            CaseTag::Two
        }
    }

    /// Absorption index `|k| / |lambda|^{1/2} + k^2 / (Re lambda
    /// |lambda|^{1/2}) + |k|^3 / (Re lambda^2 |lambda|^{1/2})`: the scale
    /// of the off-diagonal energy terms that the dissipation has to
    /// absorb. Small compared to `Re lambda` inside the verified region.
    /// Infinite when `Re lambda <= 0`.
    pub fn absorption_index(&self) -> f64 {
        let re = self.lambda.re;
        if re <= 0.0 {
            return f64::INFINITY;
        }
        let root = self.lambda.norm().sqrt();
        let ka = self.k.abs();
        ka / root + ka * ka / (re * root) + ka.powi(3) / (re * re * root)
    }

    /// Whether the mode lies in the region where the constructive
    /// estimates are claimed: `|k| >= k0` and `Re lambda >= kstar
    /// |k|^{2/3}`.
    pub fn in_verified_region(&self, k0: f64, kstar: f64) -> bool {
        self.k.abs() >= k0 && self.lambda.re >= kstar * self.k.abs().powf(2.0 / 3.0)
    }

    /// Error unless `Re lambda > 0`: the boundary-layer seed and the
    /// iterative assembly live in the stable half-plane only.
    pub fn require_stable_half_plane(&self) -> Result<()> {
        if self.lambda.re > 0.0 {
            Ok(())
        } else {
            Err(Error::OutsideRegion {
                k: self.k,
                lambda: format!("{}", self.lambda),
                reason: "Re lambda must be positive".to_string(),
            })
        }
    }
}
