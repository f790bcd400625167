//! Per-mode resolvent solver and stability-bound verifier for linearized
//! boundary-layer and channel shear flows.
//!
//! For a background shear profile and a single Fourier–Laplace mode
//! (wavenumber `k`, complex Laplace variable `lambda`), this crate builds
//! the resolvent solution of two linearized systems in vorticity form:
//!
//! * a boundary-layer system on `[0, Y_max]` whose displacement amplitude
//!   couples to the vorticity through integral means and a dispersive
//!   `ik|k|` term, solved both by an explicit boundary-layer/hydrostatic
//!   decomposition with geometric-series assembly and by a monolithic
//!   collocation solve that serves as an oracle for the first path;
//! * a channel system on `[0, 1]` driven by the stream function of the
//!   vorticity, with a vector-valued variant of the same decomposition.
//!
//! On top of the per-mode solves sit quantitative checks: weighted-norm
//! resolvent bounds with measured implied constants, cancellation
//! identities, an energy identity, time-domain evolution with a contour
//! cross-check, and a growth-exponent fit across wavenumbers.
//!
//! # Example
//!
//! ```
//! use modesweep::{
//!     grid::{Domain, Grid},
//!     mode::Mode,
//!     shearflow::{FlowKind, ShearFlow},
//!     tripledeck,
//! };
//! use num_complex::Complex64;
//!
//! let flow = ShearFlow::new(FlowKind::ExpConcave);
//! let grid = Grid::build(Domain::HalfLine, 64, 40.0, 0.12).unwrap();
//! let mode = Mode::new(8.0, Complex64::new(40.0, 0.0)).unwrap();
//! let omega_init: Vec<Complex64> = grid
//!     .nodes()
//!     .iter()
//!     .map(|&y| Complex64::new((-(y - 2.0) * (y - 2.0)).exp(), 0.0))
//!     .collect();
//! let a_init = grid.mean_u(&omega_init);
//! let solution = tripledeck::direct_solve(&flow, &mode, &grid, &omega_init, a_init).unwrap();
//! // The mean of the vorticity equals the amplitude by construction.
//! assert!((grid.mean_u(&solution.omega) - solution.a).norm() < 1e-8);
//! ```

pub mod bounds;
pub mod config;
pub mod error;
pub mod evolve;
pub mod grid;
pub mod hydrostatic;
pub mod linsolve;
pub mod mode;
pub mod shearflow;
pub mod tripledeck;

pub use error::{Error, Result};
pub use linsolve::C64;
