use serde::{Deserialize, Serialize};

use crate::asymptotics::{JumpStatistic, Mode};
use crate::error::{Error, Result};
use crate::sim::ModelSpec;

use super::estimator::EstimatorSpec;

/// Pass/fail thresholds checked against a finished experiment. Ranges are
/// closed intervals `[lo, hi]`; rates and coverages are fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gates {
    /// Log-RMSE slope against log n.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_mean_abs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_variance: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks: Option<f64>,
    /// 95% coverage of the intervals in the configured mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage95: Option<[f64; 2]>,
    /// 95% coverage of the plug-in intervals regardless of mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasible_coverage95: Option<[f64; 2]>,
    /// Rejection rate at nominal 5% under the null model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size5: Option<[f64; 2]>,
    /// Minimum of power minus size at nominal 5%.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_margin: Option<f64>,
    /// Entrywise relative tolerance for covariance matrix comparisons.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_rel: Option<f64>,
    /// Relative tolerance of the MC mean estimate against the MC mean target.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_rel: Option<f64>,
    #[serde(default = "default_max_degenerate")]
    pub max_degenerate_fraction: f64,
}

fn default_max_degenerate() -> f64 {
    0.01
}

impl Default for Gates {
    fn default() -> Self {
        Self {
            slope: None,
            z_mean_abs: None,
            z_variance: None,
            ks: None,
            coverage95: None,
            feasible_coverage95: None,
            size5: None,
            power_margin: None,
            matrix_rel: None,
            mean_rel: None,
            max_degenerate_fraction: default_max_degenerate(),
        }
    }
}

/// One Monte Carlo experiment.
///
/// Replication `i` draws its path from `derive_seed(seed, i)`; the report
/// is therefore a function of the config alone. `workers` only affects
/// scheduling and is not echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub estimators: Vec<EstimatorSpec>,
    #[serde(default)]
    pub component: usize,
    #[serde(default = "default_t")]
    pub t: f64,
    pub n_list: Vec<usize>,
    /// Defaults to `30 * max(n_list)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_fine: Option<usize>,
    pub replications: usize,
    pub seed: u64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
    /// Alternative model for jump experiments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alternative: Option<ModelSpec>,
    #[serde(default)]
    pub jump_statistic: JumpStatistic,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gates: Option<Gates>,
}

fn default_t() -> f64 {
    1.0
}

pub const FINE_RATIO: usize = 30;

impl ExperimentConfig {
    pub fn new(model: ModelSpec, estimators: Vec<EstimatorSpec>, n_list: Vec<usize>, replications: usize, seed: u64) -> Self {
        Self {
            model,
            estimators,
            component: 0,
            t: 1.0,
            n_list,
            n_fine: None,
            replications,
            seed,
            mode: Mode::Feasible,
            workers: None,
            alternative: None,
            jump_statistic: JumpStatistic::default(),
            gates: None,
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_gates(mut self, gates: Gates) -> Self {
        self.gates = Some(gates);
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn with_alternative(mut self, model: ModelSpec) -> Self {
        self.alternative = Some(model);
        self
    }

    pub fn with_n_fine(mut self, n_fine: usize) -> Self {
        self.n_fine = Some(n_fine);
        self
    }

    pub fn resolved_n_fine(&self) -> usize {
        self.n_fine
            .unwrap_or_else(|| FINE_RATIO * self.n_list.iter().copied().max().unwrap_or(0))
    }

    /// Copy with `n_fine` filled in, as echoed into reports.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        c.n_fine = Some(self.resolved_n_fine());
        c
    }

    pub fn validate(&self, min_replications: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        self.model.validate()?;
        if let Some(alt) = &self.alternative {
            alt.validate()?;
            if alt.dim != self.model.dim {
                return bad("alternative model must have the null model's dimension".into());
            }
        }
        if self.n_list.is_empty() {
            return bad("n_list is empty".into());
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_list must be strictly increasing".into());
        }
        let n_fine = self.resolved_n_fine();
        if let Some(&n) = self.n_list.iter().find(|&&n| n == 0 || !n_fine.is_multiple_of(n)) {
            return bad(format!("n = {n} does not divide n_fine = {n_fine}"));
        }
        if self.replications < min_replications {
            return bad(format!(
                "need at least {min_replications} replications, got {}",
                self.replications
            ));
        }
        if !(self.t > 0.0 && self.t <= 1.0) {
            return bad(format!("t must lie in (0, 1], got {}", self.t));
        }
        if self.component >= self.model.dim {
            return bad(format!("component {} out of range for dimension {}", self.component, self.model.dim));
        }
        for e in &self.estimators {
            e.validate(self.model.dim)?;
        }
        Ok(())
    }
}
