//! Photonic band structure of a periodically modulated atomic ensemble and
//! its effect on the optimal storage efficiency of EIT and Raman quantum
//! memories.
//!
//! The pipeline for one lattice configuration is
//!
//! ```text
//! Scenario -> DerivedParams, Modulation, potential V(z)
//!          -> monodromy -> crystal momentum k -> BlochMode (phi, psi)
//!          -> ModeObservables (v_g, alpha, beta, mu, R)
//!          -> StorageKernel -> KernelMatrix -> SVD -> eta_opt
//!                           \-> pde::propagate (walk-off included)
//! ```
//!
//! [`sweep`] drives the pipeline over lattice constants approaching the
//! first Bragg gap and writes the resulting tables.

pub mod bessel;
pub mod bloch;
mod error;
pub mod kernel;
pub mod observables;
pub mod ode;
pub mod pde;
pub mod pulse;
pub mod quadrature;
pub mod scenario;
pub mod spline;
pub mod sweep;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
