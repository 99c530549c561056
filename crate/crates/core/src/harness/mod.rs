//! Experiment harness: metrics, validity judgement, and the comparison
//! report behind the CLI.

pub mod experiment;
pub mod metrics;
pub mod validity;

pub use experiment::{
    run_experiment, run_method, run_oracle, ComparisonReport, ExperimentConfig, InitialCondition,
    MethodReport, MethodSpec, OracleSpec, QuantityReport,
};
pub use metrics::{relative_error, rms, spectral_peaks, spectrum};
pub use validity::{reduced_segments, validity_check, MIN_SEGMENT_STEPS};
