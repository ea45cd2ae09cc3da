//! Experiment driver: resource-manager configurations, metrics, runs and
//! CSV output.

pub mod experiment;
pub mod metrics;
pub mod results;
pub mod rm;

pub use experiment::{parameter_sweep, report, run_experiment, simulate, simulate_with, sweep, RunReport, SensitivityPoint};
pub use metrics::{antt, weighted_speedup};
pub use results::{emit_results, write_monitor_snapshot, write_sensitivity, write_summary, write_time_series};
pub use rm::{CacheMode, PrefetchMode, ResourceMode, RmConfig};
