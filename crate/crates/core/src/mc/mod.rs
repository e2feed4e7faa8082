//! Monte Carlo experiments for the limit theory of realised statistics,
//! and brute-force oracles for the Gaussian constants.
//!
//! Replications run in parallel when the `parallel` feature is enabled
//! (the default) and sequentially otherwise. Reports are identical either
//! way.

mod config;
mod estimator;
mod exec;
mod experiments;
pub mod oracle;
mod report;

pub use config::{ExperimentConfig, Gates, FINE_RATIO};
pub use estimator::EstimatorSpec;
pub use experiments::{
    run_clt, run_covariation_clt, run_joint_bpv_rv, run_jump_experiment, run_lln, MIN_DISTRIBUTIONAL_REPLICATIONS,
};
pub use oracle::{moment_oracle, moment_oracle_with, OracleEstimate, OracleKind};
pub use report::{
    write_atomic, ExperimentKind, ExperimentReport, GateOutcome, MatrixComparison, RejectionRates, ReportRow,
    RunInfo, SlopeFit, ZStats,
};

/// Runs `f(0..count)` on the configured executor, preserving order.
pub fn map_replications<T, F>(count: usize, workers: Option<usize>, f: F) -> crate::Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> crate::Result<T> + Sync + Send,
{
    exec::map_indexed(count, workers, f)
}
