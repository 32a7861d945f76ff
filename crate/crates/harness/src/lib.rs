//! Experiment harness for subspace-projected adaptive system identification:
//! configuration, noisy observations, metrics, Monte Carlo trials and CSV
//! output.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod models;
pub mod observe;
pub mod trial;

pub use config::{Algorithm, ExperimentConfig};
pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentOutput};
pub use models::Models;
pub use trial::{run_trial, TrialResult};
