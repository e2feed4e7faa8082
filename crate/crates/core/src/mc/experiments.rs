use std::time::Instant;

use nalgebra::DMatrix;

use super::config::{ExperimentConfig, Gates};
use super::estimator::EstimatorSpec;
use super::exec::map_indexed;
use super::report::{
    ExperimentKind, ExperimentReport, GateOutcome, MatrixComparison, RejectionRates, ReportRow, RunInfo, SlopeFit,
    ZStats,
};
use crate::asymptotics::{jump_test, Mode};
use crate::error::{Error, Result};
use crate::gaussian::{abs_moment, theta_constant};
use crate::realized::{realized_covariation, realized_multipower};
use crate::sim::rng::derive_seed;
use crate::sim::{simulate, ModelSpec, SimPath};
use crate::stats::{ks_distance_normal, moments, normal_two_sided_quantile, ols_slope, sample_covariance};
use crate::sum::sum;

pub const MIN_DISTRIBUTIONAL_REPLICATIONS: usize = 100;
const SEED_RULE: &str = "replication i uses derive_seed(seed, i)";
const FEASIBLE_LEVEL: f64 = 0.95;

fn replication_path(model: &ModelSpec, config: &ExperimentConfig, i: usize) -> Result<SimPath> {
    simulate(model, config.resolved_n_fine(), derive_seed(config.seed, i as u64))
}

fn finish(
    kind: ExperimentKind,
    config: &ExperimentConfig,
    started: Instant,
    rows: Vec<ReportRow>,
    slopes: Vec<SlopeFit>,
    matrices: Vec<MatrixComparison>,
    gates: Vec<GateOutcome>,
) -> ExperimentReport {
    let passed = gates.iter().all(|g| g.passed);
    ExperimentReport {
        tool_version: crate::VERSION.to_string(),
        kind,
        seed: config.seed,
        seed_rule: SEED_RULE.to_string(),
        config: config.resolved(),
        rows,
        slopes,
        matrices,
        gates,
        passed,
        run: RunInfo {
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            wall_time_secs: started.elapsed().as_secs_f64(),
        },
    }
}

fn mean(xs: &[f64]) -> f64 {
    sum(xs.iter().copied()) / xs.len() as f64
}

fn error_row(estimator: String, model: &str, n: usize, est: &[f64], target: &[f64]) -> ReportRow {
    let err: Vec<f64> = est.iter().zip(target).map(|(e, t)| e - t).collect();
    let sq: Vec<f64> = err.iter().map(|e| e * e).collect();
    ReportRow {
        estimator,
        model: model.to_string(),
        n,
        replications: est.len(),
        mean_estimate: mean(est),
        mean_target: mean(target),
        bias: mean(&err),
        rmse: mean(&sq).sqrt(),
        oracle: None,
        feasible: None,
        avar_ratio: None,
        rejection: None,
    }
}

fn z_stats(z: &[Option<f64>]) -> ZStats {
    let used: Vec<f64> = z.iter().flatten().copied().collect();
    let degenerate = z.len() - used.len();
    let m = moments(&used);
    let cover = |level: f64| {
        let q = normal_two_sided_quantile(level);
        used.iter().filter(|v| v.abs() <= q).count() as f64 / used.len() as f64
    };
    ZStats {
        used: used.len(),
        degenerate,
        mean: m.mean,
        variance: m.variance,
        skewness: m.skewness,
        kurtosis: m.kurtosis,
        ks: ks_distance_normal(&used),
        coverage90: cover(0.90),
        coverage95: cover(0.95),
        coverage99: cover(0.99),
    }
}

fn gates_of(config: &ExperimentConfig) -> Gates {
    config.gates.clone().unwrap_or_default()
}

/// Law-of-large-numbers experiment: bias and RMSE of each estimator
/// against its path-wise limit, and the slope of log RMSE on log n.
///
/// All sampling frequencies share one fine path per replication.
pub fn run_lln(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    config.validate(1)?;
    if config.estimators.is_empty() {
        return Err(Error::InvalidConfig("no estimators configured".into()));
    }
    let (j, t) = (config.component, config.t);
    let per_rep = map_indexed(config.replications, config.workers, |i| {
        let path = replication_path(&config.model, config, i)?;
        let rets = config
            .n_list
            .iter()
            .map(|&n| path.subsample(n))
            .collect::<Result<Vec<_>>>()?;
        let mut out = Vec::with_capacity(config.estimators.len() * rets.len());
        for e in &config.estimators {
            let target = e.target(&path, j, t)?;
            for ret in &rets {
                out.push((e.estimate(ret, j, t)?, target));
            }
        }
        Ok(out)
    })?;

    let gates = gates_of(config);
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    let mut outcomes = Vec::new();
    let k = config.n_list.len();
    for (ei, e) in config.estimators.iter().enumerate() {
        let label = e.label();
        let mut log_n = Vec::new();
        let mut log_rmse = Vec::new();
        for (ni, &n) in config.n_list.iter().enumerate() {
            let idx = ei * k + ni;
            let est: Vec<f64> = per_rep.iter().map(|r| r[idx].0).collect();
            let tgt: Vec<f64> = per_rep.iter().map(|r| r[idx].1).collect();
            let row = error_row(label.clone(), "model", n, &est, &tgt);
            if let Some(tol) = gates.mean_rel {
                let rel = (row.mean_estimate / row.mean_target - 1.0).abs();
                outcomes.push(GateOutcome::range(format!("{label} n={n} mean relative error"), rel, 0.0, tol));
            }
            log_n.push((n as f64).ln());
            log_rmse.push(row.rmse.ln());
            rows.push(row);
        }
        if let Some((slope, se)) = ols_slope(&log_n, &log_rmse) {
            if let Some([lo, hi]) = gates.slope {
                outcomes.push(GateOutcome::range(format!("{label} log-RMSE slope"), slope, lo, hi));
            }
            slopes.push(SlopeFit {
                estimator: label,
                slope,
                std_error: se,
            });
        }
    }
    Ok(finish(ExperimentKind::Lln, config, started, rows, slopes, Vec::new(), outcomes))
}

/// CLT experiment: standardised errors under both the true (oracle) and
/// the plug-in (feasible) asymptotic variance. `config.mode` selects which
/// diagnostics the gates apply to.
pub fn run_clt(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    config.validate(MIN_DISTRIBUTIONAL_REPLICATIONS)?;
    if config.estimators.is_empty() {
        return Err(Error::InvalidConfig("no estimators configured".into()));
    }
    if let Some(e) = config
        .estimators
        .iter()
        .find(|e| matches!(e, EstimatorSpec::DetRank))
    {
        return Err(Error::InvalidConfig(format!("{} has no central limit theorem here", e.label())));
    }
    let (j, t) = (config.component, config.t);

    struct Draw {
        est: f64,
        target: f64,
        z_oracle: Option<f64>,
        z_feasible: Option<f64>,
        avar_ratio: Option<f64>,
    }

    let per_rep = map_indexed(config.replications, config.workers, |i| {
        let path = replication_path(&config.model, config, i)?;
        let mut out = Vec::new();
        for e in &config.estimators {
            let target = e.target(&path, j, t)?;
            let avar_true = e.avar_true(&path, j, t)?.unwrap_or(0.0);
            for &n in &config.n_list {
                let ret = path.subsample(n)?;
                let feasible = e.feasible(&ret, j, t, FEASIBLE_LEVEL)?.with_target(target);
                let scale = (n as f64).sqrt();
                out.push(Draw {
                    est: feasible.estimate,
                    target,
                    z_oracle: (avar_true > 0.0).then(|| scale * (feasible.estimate - target) / avar_true.sqrt()),
                    z_feasible: feasible.z,
                    avar_ratio: (avar_true > 0.0).then(|| feasible.avar_hat / avar_true),
                });
            }
        }
        Ok(out)
    })?;

    let gates = gates_of(config);
    let mut rows = Vec::new();
    let mut outcomes = Vec::new();
    let k = config.n_list.len();
    for (ei, e) in config.estimators.iter().enumerate() {
        let label = e.label();
        for (ni, &n) in config.n_list.iter().enumerate() {
            let idx = ei * k + ni;
            let draws: Vec<&Draw> = per_rep.iter().map(|r| &r[idx]).collect();
            let est: Vec<f64> = draws.iter().map(|d| d.est).collect();
            let tgt: Vec<f64> = draws.iter().map(|d| d.target).collect();
            let mut row = error_row(label.clone(), "model", n, &est, &tgt);
            let zo: Vec<Option<f64>> = draws.iter().map(|d| d.z_oracle).collect();
            let zf: Vec<Option<f64>> = draws.iter().map(|d| d.z_feasible).collect();
            let ratios: Vec<f64> = draws.iter().filter_map(|d| d.avar_ratio).collect();
            let oracle = z_stats(&zo);
            let feasible = z_stats(&zf);
            row.avar_ratio = (!ratios.is_empty()).then(|| mean(&ratios));
            let primary = match config.mode {
                Mode::Oracle => oracle,
                Mode::Feasible => feasible,
            };
            let tag = format!("{label} n={n} {:?}", config.mode).to_lowercase();
            let total = config.replications as f64;
            for (name, z) in [("oracle", &oracle), ("feasible", &feasible)] {
                outcomes.push(GateOutcome::range(
                    format!("{label} n={n} {name} degenerate fraction"),
                    z.degenerate as f64 / total,
                    0.0,
                    gates.max_degenerate_fraction,
                ));
            }
            if let Some(tol) = gates.z_mean_abs {
                outcomes.push(GateOutcome::range(format!("{tag} |z mean|"), primary.mean.abs(), 0.0, tol));
            }
            if let Some([lo, hi]) = gates.z_variance {
                outcomes.push(GateOutcome::range(format!("{tag} z variance"), primary.variance, lo, hi));
            }
            if let Some(tol) = gates.ks {
                outcomes.push(GateOutcome {
                    name: format!("{tag} KS distance"),
                    value: primary.ks,
                    lo: 0.0,
                    hi: tol,
                    passed: primary.ks < tol,
                });
            }
            if let Some([lo, hi]) = gates.coverage95 {
                outcomes.push(GateOutcome::range(format!("{tag} 95% coverage"), primary.coverage95, lo, hi));
            }
            if let Some([lo, hi]) = gates.feasible_coverage95 {
                outcomes.push(GateOutcome::range(
                    format!("{label} n={n} feasible 95% coverage"),
                    feasible.coverage95,
                    lo,
                    hi,
                ));
            }
            row.oracle = Some(oracle);
            row.feasible = Some(feasible);
            rows.push(row);
        }
    }
    Ok(finish(ExperimentKind::Clt, config, started, rows, Vec::new(), Vec::new(), outcomes))
}

/// Size under `config.model` and power under `config.alternative` of the
/// one-sided jump test. Replication `i` uses the same seed under both
/// models, so the alternative differs from the null only by its jumps.
pub fn run_jump_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    config.validate(MIN_DISTRIBUTIONAL_REPLICATIONS)?;
    let alternative = config
        .alternative
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("jump experiment needs an alternative model".into()))?;
    let (j, t) = (config.component, config.t);
    let which = config.jump_statistic;
    let label = format!("jump_test({which:?})").to_lowercase();
    let gates = gates_of(config);

    let mut rows = Vec::new();
    let mut outcomes = Vec::new();
    let mut size5 = vec![f64::NAN; config.n_list.len()];
    for (name, model) in [("null", &config.model), ("alternative", alternative)] {
        let per_rep = map_indexed(config.replications, config.workers, |i| {
            let path = replication_path(model, config, i)?;
            config
                .n_list
                .iter()
                .map(|&n| {
                    let r = jump_test(&path.subsample(n)?, j, t)?;
                    Ok((r.p_value(which), r.degenerate, r.rv, r.bpv_scaled))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        for (ni, &n) in config.n_list.iter().enumerate() {
            let p: Vec<f64> = per_rep.iter().map(|r| r[ni].0).collect();
            let rv: Vec<f64> = per_rep.iter().map(|r| r[ni].2).collect();
            let bpv: Vec<f64> = per_rep.iter().map(|r| r[ni].3).collect();
            let degenerate = per_rep.iter().filter(|r| r[ni].1).count();
            let rate = |alpha: f64| p.iter().filter(|&&v| v < alpha).count() as f64 / p.len() as f64;
            let rates = RejectionRates {
                at_1: rate(0.01),
                at_5: rate(0.05),
                at_10: rate(0.10),
            };
            // estimate: scaled bipower, target: realised variance
            let mut row = error_row(label.clone(), name, n, &bpv, &rv);
            row.rejection = Some(rates);
            rows.push(row);
            outcomes.push(GateOutcome::range(
                format!("{label} {name} n={n} degenerate fraction"),
                degenerate as f64 / p.len() as f64,
                0.0,
                gates.max_degenerate_fraction,
            ));
            if name == "null" {
                size5[ni] = rates.at_5;
                if let Some([lo, hi]) = gates.size5 {
                    outcomes.push(GateOutcome::range(format!("{label} n={n} size at 5%"), rates.at_5, lo, hi));
                }
            } else if let Some(margin) = gates.power_margin {
                outcomes.push(GateOutcome::range(
                    format!("{label} n={n} power minus size at 5%"),
                    rates.at_5 - size5[ni],
                    margin,
                    f64::INFINITY,
                ));
            }
        }
    }
    Ok(finish(ExperimentKind::JumpTest, config, started, rows, Vec::new(), Vec::new(), outcomes))
}

fn compare(label: &str, n: usize, entries: Vec<String>, emp: &DMatrix<f64>, theo: &DMatrix<f64>) -> MatrixComparison {
    let rows = |m: &DMatrix<f64>| (0..m.nrows()).map(|a| m.row(a).iter().copied().collect()).collect();
    let max_rel_error = emp
        .iter()
        .zip(theo.iter())
        .map(|(e, t)| ((e - t) / t).abs())
        .fold(0.0, f64::max);
    MatrixComparison {
        label: label.to_string(),
        n,
        entries,
        empirical: rows(emp),
        theoretical: rows(theo),
        max_rel_error,
    }
}

/// Empirical covariance of `sqrt(n)(RC - int Sigma)` over the entries
/// `(j, k)`, `j <= k`, against the MC mean of
/// `int (S_jj' S_kk' + S_jk' S_kj') du`.
pub fn run_covariation_clt(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    config.validate(MIN_DISTRIBUTIONAL_REPLICATIONS)?;
    let d = config.model.dim;
    if d < 2 {
        return Err(Error::InvalidConfig("covariation experiment needs dimension >= 2".into()));
    }
    let t = config.t;
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|a| (a..d).map(move |b| (a, b))).collect();
    let m = pairs.len();
    let corr = config.model.correlation_matrix();

    let per_rep = map_indexed(config.replications, config.workers, |i| {
        let path = replication_path(&config.model, config, i)?;
        let target = path.integrated_covariance(t);
        let mut theory = DMatrix::zeros(m, m);
        for (p, &(a, b)) in pairs.iter().enumerate() {
            for (q, &(c, e)) in pairs.iter().enumerate().skip(p) {
                let s = |x: usize, y: usize, v: &[f64]| corr[(x, y)] * (v[x] * v[y]).sqrt();
                let val = path.integrate_spot(t, |v| s(a, c, v) * s(b, e, v) + s(a, e, v) * s(b, c, v));
                theory[(p, q)] = val;
                theory[(q, p)] = val;
            }
        }
        let errs = config
            .n_list
            .iter()
            .map(|&n| {
                let rc = realized_covariation(&path.subsample(n)?, t)?;
                let scale = (n as f64).sqrt();
                Ok(pairs.iter().map(|&(a, b)| scale * (rc[(a, b)] - target[(a, b)])).collect::<Vec<f64>>())
            })
            .collect::<Result<Vec<_>>>()?;
        let est: Vec<f64> = pairs.iter().map(|&(a, b)| target[(a, b)]).collect();
        Ok((errs, theory, est))
    })?;

    let entries: Vec<String> = pairs.iter().map(|(a, b)| format!("S({a},{b})")).collect();
    let mut theory = DMatrix::zeros(m, m);
    for r in &per_rep {
        theory += &r.1;
    }
    theory /= per_rep.len() as f64;
    let gates = gates_of(config);
    let mut rows = Vec::new();
    let mut matrices = Vec::new();
    let mut outcomes = Vec::new();
    for (ni, &n) in config.n_list.iter().enumerate() {
        let data: Vec<Vec<f64>> = per_rep.iter().map(|r| r.0[ni].clone()).collect();
        let emp = sample_covariance(&data);
        for (p, name) in entries.iter().enumerate() {
            let scale = (n as f64).sqrt();
            let tgt: Vec<f64> = per_rep.iter().map(|r| r.2[p]).collect();
            let est: Vec<f64> = data.iter().zip(&tgt).map(|(e, t)| t + e[p] / scale).collect();
            rows.push(error_row(format!("covariation {name}"), "model", n, &est, &tgt));
        }
        let cmp = compare("sqrt(n)(RC - int Sigma)", n, entries.clone(), &emp, &theory);
        if let Some(tol) = gates.matrix_rel {
            outcomes.push(GateOutcome::range(
                format!("covariation n={n} max relative error"),
                cmp.max_rel_error,
                0.0,
                tol,
            ));
        }
        matrices.push(cmp);
    }
    Ok(finish(ExperimentKind::CovariationClt, config, started, rows, Vec::new(), matrices, outcomes))
}

/// Empirical covariance of the `sqrt(n)`-scaled errors of bipower
/// variation `(1,1)` and realised variance, against
/// `[[mu1^4 (2 + theta), 2 mu1^2], [2 mu1^2, 2]] * int sigma^4`.
pub fn run_joint_bpv_rv(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    config.validate(MIN_DISTRIBUTIONAL_REPLICATIONS)?;
    let (j, t) = (config.component, config.t);
    let mu1 = abs_moment(1.0)?;
    let per_rep = map_indexed(config.replications, config.workers, |i| {
        let path = replication_path(&config.model, config, i)?;
        let iv = path.integrated_power_component(j, 2.0, t);
        let iq = path.integrated_power_component(j, 4.0, t);
        let errs = config
            .n_list
            .iter()
            .map(|&n| {
                let ret = path.subsample(n)?;
                let scale = (n as f64).sqrt();
                let bpv = realized_multipower(&ret, j, &[1.0, 1.0], t)?;
                let rv = realized_multipower(&ret, j, &[2.0], t)?;
                Ok(vec![scale * (bpv - mu1 * mu1 * iv), scale * (rv - iv)])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((errs, iv, iq))
    })?;
    let iq = mean(&per_rep.iter().map(|r| r.2).collect::<Vec<_>>());
    let theory = DMatrix::from_row_slice(
        2,
        2,
        &[mu1.powi(4) * (2.0 + theta_constant()), 2.0 * mu1 * mu1, 2.0 * mu1 * mu1, 2.0],
    ) * iq;
    let entries = vec!["bipower(1,1)".to_string(), "rv".to_string()];
    let gates = gates_of(config);
    let mut rows = Vec::new();
    let mut matrices = Vec::new();
    let mut outcomes = Vec::new();
    for (ni, &n) in config.n_list.iter().enumerate() {
        let data: Vec<Vec<f64>> = per_rep.iter().map(|r| r.0[ni].clone()).collect();
        let scale = (n as f64).sqrt();
        for (p, (name, factor)) in [("bipower(1,1)", mu1 * mu1), ("rv", 1.0)].into_iter().enumerate() {
            let tgt: Vec<f64> = per_rep.iter().map(|r| factor * r.1).collect();
            let est: Vec<f64> = data.iter().zip(&tgt).map(|(e, t)| t + e[p] / scale).collect();
            rows.push(error_row(name.to_string(), "model", n, &est, &tgt));
        }
        let cmp = compare("sqrt(n)(estimate - limit)", n, entries.clone(), &sample_covariance(&data), &theory);
        if let Some(tol) = gates.matrix_rel {
            outcomes.push(GateOutcome::range(
                format!("joint bipower/rv n={n} max relative error"),
                cmp.max_rel_error,
                0.0,
                tol,
            ));
        }
        matrices.push(cmp);
    }
    Ok(finish(ExperimentKind::JointBpvRv, config, started, rows, Vec::new(), matrices, outcomes))
}
