//! Numerical laboratory for a two-speed anisotropic growth model on
//! interlacing particles.
//!
//! * [`dynamics`]: exact continuous-time simulation and the height function.
//! * [`shape`]: the complex structure `Ω`, the limit shape and its PDEs.
//! * [`kernel`]: the determinantal correlation kernel and covariance sums.
//! * [`fluct`]: test functions, pairings, Monte Carlo ensembles and reports.

pub mod dynamics;
pub mod error;
pub mod fluct;
pub mod kernel;
pub mod shape;

pub use dynamics::{HeightField, JumpOutcome, ParticleConfig, RngStream};
pub use error::{Error, Result};
pub use fluct::{EnsembleParams, EnsembleRecord, Probe, TestBump};
pub use shape::{Branch, ShapeParams, ShapePoint};
