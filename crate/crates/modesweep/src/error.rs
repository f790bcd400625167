//! Error and result types shared across the crate.

use std::path::PathBuf;

/// Convenience alias used by all fallible operations in this crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
///
/// Variants split into two classes: configuration/usage problems (bad
/// input that a caller can fix) and numerical failures (a solve or
/// quadrature did not meet its tolerance). [`Error::exit_class`] maps
/// the class to the process exit code used by the command-line driver.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid run configuration or command usage.
    #[error("configuration error: {0}")]
    Config(String),

    /// A file could not be read.
    #[error("failed to read {path}: {source}")]
    ReadFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file could not be written.
    #[error("failed to write {path}: {source}")]
    WriteFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A configuration file did not parse.
    #[error("failed to parse {path}: {message}")]
    ParseConfig { path: PathBuf, message: String },

    /// Evaluation point outside the profile or grid domain.
    #[error("y = {y} is outside the {domain} domain")]
    OutsideDomain { y: f64, domain: &'static str },

    /// A mode parameter pair that no construction accepts.
    #[error("invalid mode: {0}")]
    InvalidMode(String),

    /// Mode outside the region where the constructive solution is valid.
    #[error("mode (k = {k}, lambda = {lambda}) outside verified region: {reason}")]
    OutsideRegion { k: f64, lambda: String, reason: String },

    /// A geometric series in the assembly has ratio at or above one.
    #[error("series diverges: |ratio| = {ratio} >= 1")]
    SeriesDivergence { ratio: f64 },

    /// The scalar amplitude equation is too close to resonance to divide.
    #[error("near-resonant amplitude denominator |{denom}| below threshold {threshold}")]
    NearResonance { denom: f64, threshold: f64 },

    /// The matrix is singular to working precision.
    #[error("matrix singular to working precision (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    /// A solve finished but its residual exceeds the accepted tolerance.
    #[error("solve residual {residual:.3e} exceeds tolerance (condition estimate {condition:.3e})")]
    Residual { residual: f64, condition: f64 },

    /// The contour quadrature tail or refinement did not converge.
    #[error("contour quadrature did not converge: {0}")]
    Contour(String),

    /// Time stepping violated its stability margin or drift bound.
    #[error("time stepping unstable: {0}")]
    Unstable(String),

    /// An inequality identifier that the bounds module does not know.
    #[error("unknown bound id: {0}")]
    UnknownBound(String),
}

impl Error {
    /// Process exit code class: 2 for usage/configuration errors, 3 for
    /// numerical failures.
    pub fn exit_class(&self) -> u8 {
        match self {
            Error::Config(_)
            | Error::ReadFile { .. }
            | Error::WriteFile { .. }
            | Error::ParseConfig { .. }
            | Error::UnknownBound(_) => 2,
            Error::OutsideDomain { .. }
            | Error::InvalidMode(_)
            | Error::OutsideRegion { .. }
            | Error::SeriesDivergence { .. }
            | Error::NearResonance { .. }
            | Error::Singular { .. }
            | Error::Residual { .. }
            | Error::Contour(_)
            | Error::Unstable(_) => 3,
        }
    }
}
