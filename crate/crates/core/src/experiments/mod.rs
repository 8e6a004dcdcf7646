//! Seeded Monte Carlo harness: configuration, sweeps over the figure
//! scenarios, and CSV emission.
//!
//! Every random component of trial `t` is drawn from its own ChaCha8
//! stream keyed by `(seed, t, component)`. Trials run in parallel when the
//! `parallel` feature is on; results do not depend on the worker count.

mod config;
mod output;
mod runner;

pub use config::{ExperimentConfig, RelayConfig, Scenario};
pub use output::{emit_csv, write_summary_csv, write_trials_csv, Artifacts};
pub use runner::{
    mean_and_std_err, run, run_fig1, run_fig2, run_fig3, run_nmse, trial_stream, DiagnosisRecord,
    ExperimentReport, NmseRecord, NmseRow, Records, SuccessRow,
};
