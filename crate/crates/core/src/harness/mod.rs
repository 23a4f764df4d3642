//! Monte Carlo drivers: run-length studies, p-value studies and their
//! reference distributions.

mod config;
mod experiment;
mod geometric;
mod ks;

pub use config::{DefectConfig, ExperimentConfig, NoiseConfig, PartRecipe, PhConfig, PhaseOnePolicy};
pub use experiment::{
    pvalue_power_study, read_run_lengths, run_length_experiment, severity_sweep, write_power_outputs, write_run_length_outputs,
    ChartSummary, PowerStudy, ReplicationRecord, RunLengthReport, RunLengthSummary,
};
pub use geometric::{combined_rate, geometric_arl_sdrl, geometric_reference, GeometricReference};
pub use ks::{kolmogorov_survival, ks_uniformity_test, KsResult};
