//! Monte Carlo campaigns comparing simulated spectra with limit-law
//! predictions, plus plot-ready density output.

mod config;
mod profile;
mod report;
mod runners;

pub use config::{
    ExperimentConfig, ExperimentKind, OutputPaths, QuadraticWeight, DEFAULT_EDGE_TOLERANCE, DEFAULT_KS_THRESHOLD,
};
pub use profile::{density_profile, emit_density_profile, histogram, support_path, DensityProfile};
pub use report::{median, read_records, summarize, ExperimentReport, Predicted, SizeSummary, Summary, TrialRecord, Verdict};
pub use runners::{
    linear_fit, run_edge_experiment, run_experiment, run_gap_experiment, run_lsd_experiment, run_qf_experiment,
    simulate_spectrum,
};
