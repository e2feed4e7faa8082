use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spot-variance dynamics of each price component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum VolModel {
    /// Brownian motion with drift `a` and volatility `sigma`.
    ConstantVol { a: f64, sigma: f64 },
    /// Square-root variance
    /// `dv = kappa (theta - v) dt + xi sqrt(v) dB`, `corr(dW, dB) = rho_leverage`.
    MeanRevertingVolLeverage {
        kappa: f64,
        theta: f64,
        xi: f64,
        rho_leverage: f64,
        v0: f64,
        a: f64,
    },
    /// Variance following an OU process driven by a compound Poisson
    /// subordinator: `dv = -decay v dt + dJ`, jumps at rate `lambda_vol`
    /// with exponential sizes of mean `jump_mean`.
    OuJumpVol {
        lambda_vol: f64,
        jump_mean: f64,
        decay: f64,
        v0: f64,
        a: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum JumpArrivals {
    /// Poisson number of jumps on `[0, 1]`.
    Poisson { lambda: f64 },
    /// Exactly `count` jumps at uniform times.
    Fixed { count: usize },
}

/// Additive price jumps with `N(0, jump_sd^2)` sizes (independent across
/// components). Paths with price jumps are outside the continuous model
/// class and exist to drive the jump test's alternative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceJumps {
    pub arrivals: JumpArrivals,
    pub jump_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub vol: VolModel,
    #[serde(default = "one")]
    pub dim: usize,
    /// Constant correlation of the price shocks across components.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_jumps: Option<PriceJumps>,
}

fn one() -> usize {
    1
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("{name} must be positive, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("{name} must be finite")))
    }
}

impl ModelSpec {
    pub fn constant_vol(sigma: f64) -> Self {
        Self::univariate(VolModel::ConstantVol { a: 0.0, sigma })
    }

    pub fn univariate(vol: VolModel) -> Self {
        Self {
            vol,
            dim: 1,
            correlation: None,
            price_jumps: None,
        }
    }

    /// Square-root stochastic volatility with leverage, mean-reverting fast
    /// enough that the variance stays well inside the Feller region.
    pub fn heston_leverage(rho_leverage: f64) -> Self {
        Self::univariate(VolModel::MeanRevertingVolLeverage {
            kappa: 5.0,
            theta: 1.0,
            xi: 0.5,
            rho_leverage,
            v0: 1.0,
            a: 0.0,
        })
    }

    pub fn with_correlation(mut self, corr: Vec<Vec<f64>>) -> Self {
        self.dim = corr.len();
        self.correlation = Some(corr);
        self
    }

    pub fn with_price_jumps(mut self, jumps: PriceJumps) -> Self {
        self.price_jumps = Some(jumps);
        self
    }

    pub fn drift(&self) -> f64 {
        match self.vol {
            VolModel::ConstantVol { a, .. }
            | VolModel::MeanRevertingVolLeverage { a, .. }
            | VolModel::OuJumpVol { a, .. } => a,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidModel("dimension must be >= 1".into()));
        }
        match self.vol {
            VolModel::ConstantVol { a, sigma } => {
                finite("a", a)?;
                positive("sigma", sigma)?;
            }
            VolModel::MeanRevertingVolLeverage {
                kappa,
                theta,
                xi,
                rho_leverage,
                v0,
                a,
            } => {
                positive("kappa", kappa)?;
                positive("theta", theta)?;
                positive("xi", xi)?;
                positive("v0", v0)?;
                finite("a", a)?;
                if !(-1.0..=1.0).contains(&rho_leverage) {
                    return Err(Error::InvalidModel(format!("rho_leverage must lie in [-1, 1], got {rho_leverage}")));
                }
            }
            VolModel::OuJumpVol {
                lambda_vol,
                jump_mean,
                decay,
                v0,
                a,
            } => {
                positive("lambda_vol", lambda_vol)?;
                positive("jump_mean", jump_mean)?;
                positive("decay", decay)?;
                positive("v0", v0)?;
                finite("a", a)?;
            }
        }
        if let Some(j) = &self.price_jumps {
            positive("jump_sd", j.jump_sd)?;
            if let JumpArrivals::Poisson { lambda } = j.arrivals {
                positive("lambda_jump", lambda)?;
            }
        }
        self.correlation_factor().map(|_| ())
    }

    /// Lower Cholesky factor of the price-shock correlation (identity when
    /// none is given).
    pub fn correlation_factor(&self) -> Result<DMatrix<f64>> {
        let d = self.dim;
        let Some(rows) = &self.correlation else {
            return Ok(DMatrix::identity(d, d));
        };
        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidModel(format!("correlation must be {d}x{d}")));
        }
        let c = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
        for i in 0..d {
            if (c[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidModel("correlation diagonal must be 1".into()));
            }
            for j in 0..i {
                if (c[(i, j)] - c[(j, i)]).abs() > 1e-12 || c[(i, j)].abs() > 1.0 {
                    return Err(Error::InvalidModel("correlation must be symmetric with entries in [-1, 1]".into()));
                }
            }
        }
        // semi-definite matrices get a tiny ridge so the factor exists
        let ridge = DMatrix::identity(d, d) * 1e-14;
        Cholesky::new(c.clone() + ridge)
            .map(|ch| ch.l())
            .ok_or_else(|| Error::InvalidModel("correlation matrix is not positive semi-definite".into()))
    }

    pub fn correlation_matrix(&self) -> DMatrix<f64> {
        let d = self.dim;
        match &self.correlation {
            Some(rows) => DMatrix::from_fn(d, d, |i, j| rows[i][j]),
            None => DMatrix::identity(d, d),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rules() {
        assert!(ModelSpec::constant_vol(1.0).validate().is_ok());
        assert!(ModelSpec::constant_vol(0.0).validate().is_err());
        assert!(ModelSpec::heston_leverage(-0.7).validate().is_ok());
        assert!(ModelSpec::heston_leverage(-1.2).validate().is_err());
        let bad = ModelSpec::constant_vol(1.0).with_correlation(vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(bad.validate().is_err());
        let bad = ModelSpec::constant_vol(1.0).with_correlation(vec![vec![1.0, 0.5], vec![0.4, 1.0]]);
        assert!(bad.validate().is_err());
        let ok = ModelSpec::constant_vol(1.0).with_correlation(vec![vec![1.0, 0.5], vec![0.5, 1.0]]);
        assert!(ok.validate().is_ok());
        let ou = ModelSpec::univariate(VolModel::OuJumpVol {
            lambda_vol: 0.0,
            jump_mean: 1.0,
            decay: 1.0,
            v0: 1.0,
            a: 0.0,
        });
        assert!(ou.validate().is_err());
    }

    #[test]
    fn json_shape() {
        let m = ModelSpec::heston_leverage(-0.7).with_price_jumps(PriceJumps {
            arrivals: JumpArrivals::Fixed { count: 1 },
            jump_sd: 0.1,
        });
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"type\":\"mean_reverting_vol_leverage\""));
        let back: ModelSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let minimal: ModelSpec = serde_json::from_str(r#"{"vol":{"type":"constant_vol","a":0,"sigma":2}}"#).unwrap();
        assert_eq!(minimal, ModelSpec::constant_vol(2.0));
    }
}
