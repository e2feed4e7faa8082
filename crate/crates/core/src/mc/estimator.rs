use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{ci_bipower, ci_covariation, ci_multipower, ci_power_variation, CltResult};
use crate::error::{Error, Result};
use crate::gaussian::{abs_moment, multipower_long_run_constant};
use crate::realized::{det_rank_statistic, realized_covariation, realized_multipower, ReturnSeries};
use crate::sim::SimPath;

/// The statistic a Monte Carlo experiment tracks. All univariate
/// statistics act on the configured component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorSpec {
    RealizedVariance,
    PowerVariation { r: f64 },
    Bipower { r: f64, s: f64 },
    Multipower { powers: Vec<f64> },
    QuarticityRv,
    QuarticityTripower,
    QuarticityQuadpower,
    DetRank,
    CovariationEntry { j: usize, k: usize },
}

impl EstimatorSpec {
    pub fn label(&self) -> String {
        let list = |p: &[f64]| p.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match self {
            Self::RealizedVariance => "rv".into(),
            Self::PowerVariation { r } => format!("power({r})"),
            Self::Bipower { r, s } => format!("bipower({r},{s})"),
            Self::Multipower { powers } => format!("multipower({})", list(powers)),
            Self::QuarticityRv => "quarticity_rv".into(),
            Self::QuarticityTripower => "quarticity_tripower".into(),
            Self::QuarticityQuadpower => "quarticity_quadpower".into(),
            Self::DetRank => "det_rank".into(),
            Self::CovariationEntry { j, k } => format!("covariation({j},{k})"),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if let Some((powers, _)) = self.as_multipower()? {
            if powers.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
                return bad(format!("{}: powers must be positive", self.label()));
            }
        }
        match self {
            Self::CovariationEntry { j, k } if *j >= dim || *k >= dim => {
                bad(format!("{}: index out of range for dimension {dim}", self.label()))
            }
            _ => Ok(()),
        }
    }

    /// Powers and normaliser when the statistic is `multipower(powers) / norm`.
    fn as_multipower(&self) -> Result<Option<(Vec<f64>, f64)>> {
        let t = 4.0 / 3.0;
        Ok(Some(match self {
            Self::RealizedVariance => (vec![2.0], 1.0),
            Self::PowerVariation { r } => (vec![*r], 1.0),
            Self::Bipower { r, s } => (vec![*r, *s], 1.0),
            Self::Multipower { powers } => {
                if powers.is_empty() {
                    return Err(Error::InvalidConfig("multipower needs at least one power".into()));
                }
                (powers.clone(), 1.0)
            }
            Self::QuarticityRv => (vec![4.0], 3.0),
            Self::QuarticityTripower => (vec![t; 3], abs_moment(t)?.powi(3)),
            Self::QuarticityQuadpower => (vec![1.0; 4], abs_moment(1.0)?.powi(4)),
            Self::DetRank | Self::CovariationEntry { .. } => return Ok(None),
        }))
    }

    pub fn estimate(&self, ret: &ReturnSeries, j: usize, t: f64) -> Result<f64> {
        if let Some((powers, norm)) = self.as_multipower()? {
            return Ok(realized_multipower(ret, j, &powers, t)? / norm);
        }
        match self {
            Self::DetRank => det_rank_statistic(ret, t),
            Self::CovariationEntry { j, k } => Ok(realized_covariation(ret, t)?[(*j, *k)]),
            _ => unreachable!(),
        }
    }

    /// Probability limit on the simulated path.
    pub fn target(&self, path: &SimPath, j: usize, t: f64) -> Result<f64> {
        if let Some((powers, norm)) = self.as_multipower()? {
            let mut m = 1.0;
            for &p in &powers {
                m *= abs_moment(p)?;
            }
            let total: f64 = powers.iter().sum();
            return Ok(m / norm * path.integrated_power_component(j, total, t));
        }
        match self {
            Self::DetRank => Ok(path.integrated_det(t)),
            Self::CovariationEntry { j, k } => Ok(integrated_cov_product(path, t, |s| s[(*j, *k)])),
            _ => unreachable!(),
        }
    }

    /// Integrated asymptotic variance on the simulated path, when the
    /// statistic has a known CLT.
    pub fn avar_true(&self, path: &SimPath, j: usize, t: f64) -> Result<Option<f64>> {
        if let Some((powers, norm)) = self.as_multipower()? {
            let total: f64 = powers.iter().sum();
            let c = multipower_long_run_constant(&powers)?;
            return Ok(Some(c / (norm * norm) * path.integrated_power_component(j, 2.0 * total, t)));
        }
        match self {
            Self::DetRank => Ok(None),
            Self::CovariationEntry { j, k } => {
                let (j, k) = (*j, *k);
                Ok(Some(integrated_cov_product(path, t, |s| {
                    s[(j, j)] * s[(k, k)] + s[(j, k)] * s[(j, k)]
                })))
            }
            _ => unreachable!(),
        }
    }

    /// Plug-in interval built from the returns alone.
    pub fn feasible(&self, ret: &ReturnSeries, j: usize, t: f64, level: f64) -> Result<CltResult> {
        if let Some((powers, norm)) = self.as_multipower()? {
            let raw = match powers.len() {
                1 => ci_power_variation(ret, j, powers[0], t, level)?,
                2 => ci_bipower(ret, j, powers[0], powers[1], t, level)?,
                _ => ci_multipower(ret, j, &powers, t, level)?,
            };
            return Ok(CltResult {
                estimate: raw.estimate / norm,
                avar_hat: raw.avar_hat / (norm * norm),
                ci: (raw.ci.0 / norm, raw.ci.1 / norm),
                ..raw
            });
        }
        match self {
            Self::CovariationEntry { j, k } => Ok(ci_covariation(ret, t, level)?.get(*j, *k).clone()),
            _ => Err(Error::Undefined(format!("{} has no feasible interval", self.label()))),
        }
    }
}

/// `int_0^t f(Sigma_u) du` with `Sigma_u` the spot covariance.
fn integrated_cov_product<F: Fn(&DMatrix<f64>) -> f64>(path: &SimPath, t: f64, f: F) -> f64 {
    let corr = path.model().correlation_matrix();
    let d = path.dim();
    let mut s = DMatrix::zeros(d, d);
    path.integrate_spot(t, |v| {
        for a in 0..d {
            for b in 0..d {
                s[(a, b)] = corr[(a, b)] * (v[a] * v[b]).sqrt();
            }
        }
        f(&s)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::theta_constant;
    use crate::sim::{simulate, ModelSpec};

    #[test]
    fn targets_on_constant_volatility() {
        let p = simulate(&ModelSpec::constant_vol(2.0), 100, 1).unwrap();
        let mu1 = abs_moment(1.0).unwrap();
        let rv = EstimatorSpec::RealizedVariance;
        assert_eq!(rv.target(&p, 0, 1.0).unwrap(), 4.0);
        assert_eq!(rv.avar_true(&p, 0, 1.0).unwrap(), Some(32.0));
        let bpv = EstimatorSpec::Bipower { r: 1.0, s: 1.0 };
        assert!((bpv.target(&p, 0, 1.0).unwrap() - mu1 * mu1 * 4.0).abs() < 1e-12);
        let c = bpv.avar_true(&p, 0, 1.0).unwrap().unwrap();
        assert!((c - mu1.powi(4) * (2.0 + theta_constant()) * 16.0).abs() < 1e-10);
        let q = EstimatorSpec::QuarticityQuadpower;
        assert!((q.target(&p, 0, 1.0).unwrap() - 16.0).abs() < 1e-12);
        assert_eq!(EstimatorSpec::DetRank.avar_true(&p, 0, 1.0).unwrap(), None);
    }

    #[test]
    fn covariation_targets() {
        let m = ModelSpec::constant_vol(1.0).with_correlation(vec![vec![1.0, 0.5], vec![0.5, 1.0]]);
        let p = simulate(&m, 100, 1).unwrap();
        let e = EstimatorSpec::CovariationEntry { j: 0, k: 1 };
        assert!((e.target(&p, 0, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((e.avar_true(&p, 0, 1.0).unwrap().unwrap() - 1.25).abs() < 1e-12);
        assert!(EstimatorSpec::CovariationEntry { j: 0, k: 2 }.validate(2).is_err());
    }

    #[test]
    fn feasible_rescales_normalised_statistics() {
        let ret = ReturnSeries::univariate((0..50).map(|i| ((i % 7) as f64 - 3.0) / 40.0).collect()).unwrap();
        let q = EstimatorSpec::QuarticityRv;
        let ci = q.feasible(&ret, 0, 1.0, 0.95).unwrap();
        assert!((ci.estimate - q.estimate(&ret, 0, 1.0).unwrap()).abs() < 1e-15);
        assert!(ci.covers(ci.estimate));
        assert!(EstimatorSpec::DetRank.feasible(&ret, 0, 1.0, 0.95).is_err());
    }

    #[test]
    fn serde_shape() {
        let e: EstimatorSpec = serde_json::from_str(r#"{"kind":"bipower","r":1,"s":1}"#).unwrap();
        assert_eq!(e, EstimatorSpec::Bipower { r: 1.0, s: 1.0 });
        assert_eq!(e.label(), "bipower(1,1)");
    }
}
