//! Experiment configuration, batch runs and report files.

pub mod config;
pub mod report;
pub mod run;
pub mod seed;
pub mod stats;

pub use config::{ExperimentConfig, ExperimentSection, NoiseTarget, OptimizerSection, DEFAULT_GRID, PAPER_GRID};
pub use report::{emit_report, load_report, ExperimentReport, ReportImages, RunRecord, TracePoint};
pub use run::{run_case, run_noise_free_suite, run_noise_sweep, run_single, ExperimentSetup};
pub use seed::sub_seed;
pub use stats::{spearman, TrendStatistics};
