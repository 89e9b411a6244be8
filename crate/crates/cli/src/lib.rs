//! Experiment harness: configs, presets, reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod config;
pub mod error;
pub mod presets;
pub mod profiles;
pub mod report;

pub use checks::{Bound, Check};
pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use presets::{run_experiment, Preset, RunOutcome};
pub use report::{summary_report, Summary, Verdict};
