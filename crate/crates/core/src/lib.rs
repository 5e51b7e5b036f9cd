//! Kinetic Langevin integrators and tools for proving and measuring their
//! contraction under synchronous coupling.
//!
//! The modules run from concrete to abstract:
//!
//! - [`potentials`] and [`integrators`] hold the targets and the twelve
//!   schemes, including the high-friction-stable SES exponential integrator.
//! - [`noise`] supplies counter-based Gaussian streams so runs are reproducible.
//! - [`coupling`] runs two chains on shared noise and compares the measured
//!   decay with theorem rates in a twisted norm ([`norms`]).
//! - [`certificates`] decides whether a rate holds by checking positive
//!   definiteness of the contraction matrix on the whole curvature interval.
//! - [`gaussian`] gives exact spectra on quadratic targets, and [`glc`] the
//!   γ → ∞ limits of each scheme.
//! - [`experiment`] drives the above from JSON configs and writes CSV output.

// `!(x < y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod coupling;
pub mod error;
pub mod experiment;
pub mod format;
pub mod gaussian;
pub mod glc;
pub mod integrators;
pub mod noise;
pub mod norms;
pub mod poly;
pub mod potentials;

pub use error::{Error, Result};
pub use integrators::{step, NoiseDraw, PhaseState, SchemeId, StepParams};
pub use noise::NoiseStream;
pub use norms::WeightedNorm;
pub use potentials::{PerturbedQuadratic, Potential, QuadraticPotential};
