//! Exact simulation of all-optical GKP-state breeding.
//!
//! Squeezed cat states are interfered on 50/50 beam splitters and the
//! momentum quadrature of one output is measured. Post-selecting outcomes
//! near zero doubles the number of Gaussian peaks per round, producing
//! binomial approximations to GKP logical states. All states are kept as
//! finite sums of complex Gaussians and every protocol step is evaluated in
//! closed form.

pub mod breeding;
pub mod cli;
pub mod error;
pub mod gaussian;
pub mod metrics;
pub mod optics;
pub mod oracle;
pub mod quadrature;

pub use error::{Error, Result};
pub use gaussian::{Basis, GaussianTerm, TermRecord, WaveFunction, WaveFunctionRecord};

/// `√π`, half the GKP lattice spacing.
pub const SQRT_PI: f64 = 1.772_453_850_905_516;
