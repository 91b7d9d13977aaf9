//! Experiment runner for the adaptive stratified Monte-Carlo estimators:
//! replicated MSE sweeps, log-log rate fits, the sub-strata lower-bound check
//! and CSV/JSON emission.

pub mod bench;
pub mod config;
pub mod emit;
pub mod error;
pub mod lemma3;
pub mod rates;

pub use bench::{run_benchmark, BenchmarkReport, BenchmarkRow};
pub use config::{EstimatorKind, ExperimentConfig, OutputFormat, RawSettings};
pub use emit::{emit, parse_csv};
pub use error::{HarnessError, Result};
pub use lemma3::{verify_lemma3, Lemma3Outcome};
pub use rates::{fit_rate, RateFit};
