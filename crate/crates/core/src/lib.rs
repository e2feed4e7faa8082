//! Realised generalised bipower and multipower variation.
//!
//! The crate is split along the lines of the workflow it supports:
//!
//! * [`gaussian`] evaluates Gaussian absolute moments, expectations of test
//!   functions under a centred normal law, and every asymptotic variance
//!   constant used by the limit theory.
//! * [`realized`] turns observed log-prices into returns and computes the
//!   realised statistics (variance, covariation, power, bipower, multipower,
//!   quarticity and the determinant statistic).
//! * [`asymptotics`] builds feasible and oracle confidence intervals and the
//!   bipower-versus-variance jump test.
//! * [`sim`] simulates Brownian semimartingales with stochastic volatility,
//!   leverage and jumps, keeping the true spot variance for oracle targets.
//! * [`mc`] runs the Monte Carlo experiments (law of large numbers, CLT,
//!   jump test size/power) and the brute-force constant oracles.

pub mod asymptotics;
pub mod error;
pub mod gaussian;
pub mod mc;
pub mod realized;
pub mod sim;
pub mod stats;

mod sum;

pub use error::{Error, Result};

/// Crate version, embedded in every report written to disk.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
