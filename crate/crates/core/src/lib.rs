//! Numerical laboratory for the Fourier-truncated fractional cubic NLS
//!
//! ```text
//! i u_t + (-∂x²)^α u ± (|u|²u − 2(∫|u|²)u) = 0,   x ∈ 𝕋
//! ```
//!
//! under Gaussian random initial data. The crate covers the spectral
//! representation and trilinear nonlinearity ([`spectral_core`]), the
//! truncated flow ([`dynamics`]), Gaussian and weighted measures
//! ([`measures`]), the transported density ([`density`]), Fourier
//! restriction norm surrogates ([`xnorm`]) and lattice scans of the
//! deterministic bounds ([`lemma_lab`]).
//!
//! Field data is generic over [`Scalar`] (`f32` or `f64`). Model
//! parameters, times and statistics are always `f64`.

pub mod density;
pub mod dynamics;
pub mod error;
pub mod lemma_lab;
pub mod measures;
pub mod scalar;
pub mod spectral_core;
pub mod xnorm;

pub use error::{FnlsError, Result};
pub use scalar::Scalar;
pub use spectral_core::{FourierField, GridSpec, ModelParams};

/// Double precision field.
pub type Field64 = spectral_core::FourierField<f64>;
/// Single precision field.
pub type Field32 = spectral_core::FourierField<f32>;
/// Double precision trajectory.
pub type Trajectory64 = dynamics::Trajectory<f64>;
/// Single precision trajectory.
pub type Trajectory32 = dynamics::Trajectory<f32>;
