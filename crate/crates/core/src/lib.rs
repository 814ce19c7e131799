//! Derivatives of programs with discrete and branching randomness.
//!
//! The crate pairs a forward-mode stochastic-derivative engine with a toy
//! detector simulator whose particles lose energy or split into showers
//! when a Bernoulli interaction fires. Four estimators of
//! `d E[loss] / d theta` are provided:
//!
//! * finite differences on independent streams ([`estimators::numeric_gradient`]),
//! * the score function with and without a mini-batch baseline
//!   ([`estimators::score_gradient`]),
//! * stochastic AD, which flips one pruned discrete draw and runs the
//!   alternative program coupled to the primal ([`estimators::stochad_gradient`]).
//!
//! [`oracle`] enumerates every outcome path of small programs to give exact
//! reference gradients, and [`experiments`] holds the loss scans, gradient
//! tables and Adam-based design optimisation. Runnable walkthroughs live in
//! the crate's `examples/` directory.

pub mod cli;
pub mod config;
pub mod coupling;
pub mod dual;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod oracle;
pub mod program;
pub mod simulator;
pub mod stochastic;
pub mod toy;

pub use dual::Dual;
pub use error::{Error, Result};
pub use estimators::{Batch, EstimatorOptions, EstimatorStats, GradientSample, Method};
pub use program::{Sampler, StochasticProgram};
pub use simulator::{DetectorParams, Event, LossProgram, Mode, SimConfig};
