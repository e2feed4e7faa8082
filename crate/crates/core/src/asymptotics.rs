//! Feasible and oracle inference for realised statistics, and the
//! bipower-versus-variance jump test.
//!
//! Every interval has the form `estimate +- q * sqrt(avar / n)` where `avar`
//! estimates the integrated asymptotic variance over `[0, t]`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::gaussian::{
    abs_moment, bipower_variance_constant, multipower_long_run_constant, power_variance_constant, theta_constant,
};
use crate::realized::{
    quarticity_quadpower, realized_covariation, realized_multipower, realized_power_variation, window_count,
    ReturnSeries,
};
use crate::stats::{normal_cdf, normal_two_sided_quantile};
use crate::sum::Compensated;

/// How the asymptotic variance was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Plug-in estimate from the same returns.
    #[default]
    Feasible,
    /// True integrated variance from the simulated volatility path.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltResult {
    pub estimate: f64,
    pub target: Option<f64>,
    pub avar_hat: f64,
    pub z: Option<f64>,
    pub ci: (f64, f64),
    pub level: f64,
    pub mode: Mode,
    /// Set when `avar_hat` is zero; the interval collapses to a point.
    pub degenerate: bool,
    pub n: usize,
}

impl CltResult {
    pub fn new(estimate: f64, avar_hat: f64, n: usize, level: f64, mode: Mode) -> Result<Self> {
        check_level(level)?;
        if !(avar_hat >= 0.0) || !avar_hat.is_finite() {
            return Err(domain(format!("asymptotic variance must be finite and >= 0, got {avar_hat}")));
        }
        let half = normal_two_sided_quantile(level) * (avar_hat / n as f64).sqrt();
        Ok(Self {
            estimate,
            target: None,
            avar_hat,
            z: None,
            ci: (estimate - half, estimate + half),
            level,
            mode,
            degenerate: avar_hat == 0.0,
            n,
        })
    }

    /// Attaches a known limit and the resulting standardised error.
    pub fn with_target(mut self, target: f64) -> Self {
        self.target = Some(target);
        self.z = (self.avar_hat > 0.0)
            .then(|| (self.n as f64).sqrt() * (self.estimate - target) / self.avar_hat.sqrt());
        self
    }

    pub fn covers(&self, value: f64) -> bool {
        self.ci.0 <= value && value <= self.ci.1
    }

    pub fn width(&self) -> f64 {
        self.ci.1 - self.ci.0
    }
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("confidence level must lie in (0, 1), got {level}")))
    }
}

/// Estimates `int_0^t sigma_j^{2q}` by multipower variation with four
/// equal powers `q / 2`, normalised by `mu_{q/2}^4`.
fn integrated_power_hat(ret: &ReturnSeries, j: usize, q: f64, t: f64) -> Result<f64> {
    let p = q / 2.0;
    Ok(realized_multipower(ret, j, &[p; 4], t)? / abs_moment(p)?.powi(4))
}

/// Interval for `n^{-1+r/2} sum |Delta|^r`, which estimates
/// `mu_r int sigma^r`.
pub fn ci_power_variation(ret: &ReturnSeries, j: usize, r: f64, t: f64, level: f64) -> Result<CltResult> {
    let estimate = realized_power_variation(ret, j, r, t)?;
    let integral = realized_power_variation(ret, j, 2.0 * r, t)? / abs_moment(2.0 * r)?;
    let avar = power_variance_constant(r)? * integral;
    CltResult::new(estimate, avar, ret.n(), level, Mode::Feasible)
}

/// Interval for bipower variation with powers `(r, s)`.
pub fn ci_bipower(ret: &ReturnSeries, j: usize, r: f64, s: f64, t: f64, level: f64) -> Result<CltResult> {
    let estimate = crate::realized::realized_bipower(ret, j, r, s, t)?;
    let avar = bipower_variance_constant(r, s)? * integrated_power_hat(ret, j, r + s, t)?;
    CltResult::new(estimate, avar, ret.n(), level, Mode::Feasible)
}

/// Interval for multipower variation with arbitrary powers.
pub fn ci_multipower(ret: &ReturnSeries, j: usize, powers: &[f64], t: f64, level: f64) -> Result<CltResult> {
    let estimate = realized_multipower(ret, j, powers, t)?;
    let total: f64 = powers.iter().sum();
    let avar = multipower_long_run_constant(powers)? * integrated_power_hat(ret, j, total, t)?;
    CltResult::new(estimate, avar, ret.n(), level, Mode::Feasible)
}

/// Element-wise intervals for the realised covariation matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariationCi {
    pub d: usize,
    /// Row-major `d x d`.
    pub entries: Vec<CltResult>,
}

impl CovariationCi {
    pub fn get(&self, j: usize, k: usize) -> &CltResult {
        &self.entries[j * self.d + k]
    }

    pub fn estimate(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.d, self.d, |j, k| self.get(j, k).estimate)
    }
}

/// Element-wise intervals for realised covariation.
///
/// The variance of entry `(j, k)` is `int (S_jj S_kk + S_jk^2)`. Diagonal
/// entries use `(2/3) n sum Delta^4`, so one dimension matches
/// [`ci_power_variation`] with `r = 2`. Off-diagonal entries use
/// `n sum x_i^2 - n sum x_i x_{i+1}` with `x_i = Delta_i^j Delta_i^k`,
/// clamped at zero.
pub fn ci_covariation(ret: &ReturnSeries, t: f64, level: f64) -> Result<CovariationCi> {
    let rc = realized_covariation(ret, t)?;
    let d = ret.dim();
    let n = ret.n();
    let upper = window_count(n, t)?;
    let mut entries = Vec::with_capacity(d * d);
    for j in 0..d {
        for k in 0..d {
            let avar = if j == k {
                power_variance_constant(2.0)? * realized_power_variation(ret, j, 4.0, t)? / abs_moment(4.0)?
            } else {
                let x = |i: usize| ret.get(i, j) * ret.get(i, k);
                let (mut sq, mut lag) = (Compensated::new(), Compensated::new());
                for i in 0..upper {
                    sq.add(x(i) * x(i));
                    if i + 1 < n {
                        lag.add(x(i) * x(i + 1));
                    }
                }
                (n as f64 * (sq.value() - lag.value())).max(0.0)
            };
            entries.push(CltResult::new(rc[(j, k)], avar, n, level, Mode::Feasible)?);
        }
    }
    Ok(CovariationCi { d, entries })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpTestResult {
    pub rv: f64,
    /// `mu_1^{-2} BPV(1,1)`.
    pub bpv_scaled: f64,
    /// Quadpower quarticity.
    pub iq_hat: f64,
    pub stat_linear: f64,
    pub stat_ratio: f64,
    /// Left-tail p-values; jumps push both statistics negative.
    pub p_linear: f64,
    pub p_ratio: f64,
    pub p_linear_two_sided: f64,
    pub p_ratio_two_sided: f64,
    /// Set when `iq_hat` is zero; statistics are reported as 0 and p as 1.
    pub degenerate: bool,
    pub n: usize,
}

/// Which jump statistic drives a rejection decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum JumpStatistic {
    Linear,
    #[default]
    Ratio,
}

impl JumpTestResult {
    pub fn p_value(&self, which: JumpStatistic) -> f64 {
        match which {
            JumpStatistic::Linear => self.p_linear,
            JumpStatistic::Ratio => self.p_ratio,
        }
    }

    pub fn rejects(&self, which: JumpStatistic, alpha: f64) -> bool {
        self.p_value(which) < alpha
    }
}

/// Bipower-versus-variance test for jumps in component `j` over `[0, t]`.
///
/// Under continuity `sqrt(n)(mu_1^{-2} BPV - RV)` is asymptotically normal
/// with variance `theta int sigma^4`.
pub fn jump_test(ret: &ReturnSeries, j: usize, t: f64) -> Result<JumpTestResult> {
    let n = ret.n();
    if n < 10 {
        return Err(domain(format!("jump test needs n >= 10, got {n}")));
    }
    let rv = realized_power_variation(ret, j, 2.0, t)?;
    if rv == 0.0 {
        return Err(Error::Undefined("realised variance is zero".into()));
    }
    let bpv_scaled = realized_multipower(ret, j, &[1.0, 1.0], t)? / abs_moment(1.0)?.powi(2);
    let iq_hat = quarticity_quadpower(ret, j, t)?;
    let theta = theta_constant();
    let sqrt_n = (n as f64).sqrt();
    let degenerate = iq_hat == 0.0;
    let (stat_linear, stat_ratio) = if degenerate {
        (0.0, 0.0)
    } else {
        (
            sqrt_n * (bpv_scaled - rv) / (theta * iq_hat).sqrt(),
            sqrt_n * (bpv_scaled / rv - 1.0) / (theta * iq_hat / (rv * rv)).sqrt(),
        )
    };
    let one = |z: f64| if degenerate { 1.0 } else { normal_cdf(z) };
    let two = |z: f64| if degenerate { 1.0 } else { (2.0 * normal_cdf(-z.abs())).min(1.0) };
    Ok(JumpTestResult {
        rv,
        bpv_scaled,
        iq_hat,
        stat_linear,
        stat_ratio,
        p_linear: one(stat_linear),
        p_ratio: one(stat_ratio),
        p_linear_two_sided: two(stat_linear),
        p_ratio_two_sided: two(stat_ratio),
        degenerate,
        n,
    })
}

/// `sqrt(n) (estimate - target) / sqrt(avar_true)`.
pub fn oracle_standardize(estimate: f64, target: f64, avar_true: f64, n: usize) -> Result<f64> {
    if !(avar_true > 0.0) {
        return Err(domain(format!("oracle variance must be positive, got {avar_true}")));
    }
    Ok((n as f64).sqrt() * (estimate - target) / avar_true.sqrt())
}
