//! Experiment driver for the subspace-VQE library: run configs, sweeps,
//! exact reference spectra and aggregate reports.

pub mod config;
pub mod error;
pub mod exact;
pub mod io;
pub mod report;
pub mod run;
pub mod sweep;

pub use config::{ExperimentConfig, FrameConfig, MetricsConfig, SCHEMA_VERSION};
pub use error::{HarnessError, Result};
pub use report::Report;
pub use run::{execute_run, run_experiment, Reference, RunSummary, TraceRow};
pub use sweep::{execute_sweep, SweepManifest, SweepOutcome};
