//! Experiment harness for the composite proximal sampler: logistic regression
//! with l1 or box priors, the Gaussian-in-a-box scaling study, reference
//! runs, and a KS check for one-dimensional RGOs.

pub mod config;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod methods;
pub mod output;
pub mod scaling;

pub use config::{load_config, parse_config, Experiment, Method, Preset};
pub use error::{BenchError, BenchResult};
