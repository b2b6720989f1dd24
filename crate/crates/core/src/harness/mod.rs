//! Experiment driver: configs in, metrics and plot data out.

pub mod config;
pub mod rates;
pub mod run;
pub mod verify;

pub use config::{DatasetSpec, EvaluationSpec, ExperimentConfig, KnnConfig, ModelSpec, NoiseSpec, OutputSpec, CONFIG_SCHEMA};
pub use rates::{rate_study, RateRow, RateSpec, RateTable};
pub use run::{materialize, run_experiment, run_knn_experiment, Dataset, RunOutcome};
pub use verify::{verify_suite, Check, LemmaParams, LowerBoundParams, NoiseParams, Status, Suite, VerifyReport};
