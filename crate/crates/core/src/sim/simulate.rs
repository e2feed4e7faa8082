use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Exp, Normal, StandardNormal};

use super::model::{JumpArrivals, ModelSpec, VolModel};
use super::rng::{stream, PRICE_JUMP_STREAM, PRICE_STREAM, VOL_JUMP_STREAM, VOL_STREAM};
use crate::error::{Error, Result};
use crate::realized::{LogPricePath, ReturnSeries};
use crate::sum::Compensated;

#[derive(Debug, Clone, PartialEq)]
pub struct PriceJump {
    pub time: f64,
    /// Fine-grid step whose increment carries the jump (1-based).
    pub step: usize,
    pub sizes: Vec<f64>,
}

/// A simulated path on `{k / n_fine}` with its true spot variance.
#[derive(Debug, Clone)]
pub struct SimPath {
    n_fine: usize,
    d: usize,
    /// Row-major `(n_fine + 1) x d` log-prices, starting at 0.
    y: Vec<f64>,
    /// Row-major `(n_fine + 1) x d`; row `k` drives increment `k + 1`.
    spot_var: Vec<f64>,
    price_jumps: Vec<PriceJump>,
    vol_jump_count: usize,
    seed: u64,
    model: ModelSpec,
}

/// Euler scheme on the fine grid. Deterministic in `(model, n_fine, seed)`.
///
/// The square-root variance uses full truncation: the state is kept signed
/// and floored at zero wherever it enters a coefficient. The OU variance is
/// advanced exactly between jumps.
pub fn simulate(model: &ModelSpec, n_fine: usize, seed: u64) -> Result<SimPath> {
    model.validate()?;
    if n_fine < 100 {
        return Err(Error::InvalidModel(format!("n_fine must be >= 100, got {n_fine}")));
    }
    let d = model.dim;
    let chol = model.correlation_factor()?;
    let dt = 1.0 / n_fine as f64;
    let sq = dt.sqrt();
    let a = model.drift();

    let mut price_rng = stream(seed, PRICE_STREAM);
    let mut vol_rng = stream(seed, VOL_STREAM);

    let mut y = vec![0.0; (n_fine + 1) * d];
    let mut spot = vec![0.0; (n_fine + 1) * d];
    let mut state: Vec<f64> = vec![
        match model.vol {
            VolModel::ConstantVol { sigma, .. } => sigma * sigma,
            VolModel::MeanRevertingVolLeverage { v0, .. } | VolModel::OuJumpVol { v0, .. } => v0,
        };
        d
    ];
    spot[..d].copy_from_slice(&state);

    let vol_jumps = match model.vol {
        VolModel::OuJumpVol {
            lambda_vol, jump_mean, ..
        } => vol_jump_schedule(seed, d, lambda_vol, jump_mean),
        _ => vec![Vec::new(); d],
    };
    let vol_jump_count = vol_jumps.iter().map(Vec::len).sum();
    let mut next_vol_jump = vec![0usize; d];
    let price_jumps = price_jump_schedule(model, n_fine, seed)?;
    let mut next_price_jump = 0usize;

    let mut z = vec![0.0; d];
    let mut xi = vec![0.0; d];
    for k in 1..=n_fine {
        for zc in z.iter_mut() {
            *zc = price_rng.sample(StandardNormal);
        }
        for (r, x) in xi.iter_mut().enumerate() {
            *x = (0..=r).map(|c| chol[(r, c)] * z[c]).sum();
        }
        let t_now = k as f64 * dt;
        for c in 0..d {
            let prev = spot[(k - 1) * d + c];
            y[k * d + c] = y[(k - 1) * d + c] + a * dt + prev.sqrt() * sq * xi[c];
            match model.vol {
                VolModel::ConstantVol { .. } => {}
                VolModel::MeanRevertingVolLeverage {
                    kappa,
                    theta,
                    xi: vol_of_vol,
                    rho_leverage,
                    ..
                } => {
                    let e: f64 = vol_rng.sample(StandardNormal);
                    let eta = rho_leverage * xi[c] + (1.0 - rho_leverage * rho_leverage).sqrt() * e;
                    state[c] += kappa * (theta - prev) * dt + vol_of_vol * prev.sqrt() * sq * eta;
                }
                VolModel::OuJumpVol { decay, .. } => {
                    state[c] *= (-decay * dt).exp();
                    let jumps = &vol_jumps[c];
                    while next_vol_jump[c] < jumps.len() && jumps[next_vol_jump[c]].0 <= t_now {
                        let (tau, size) = jumps[next_vol_jump[c]];
                        state[c] += size * (-decay * (t_now - tau)).exp();
                        next_vol_jump[c] += 1;
                    }
                }
            }
            spot[k * d + c] = state[c].max(0.0);
        }
        while next_price_jump < price_jumps.len() && price_jumps[next_price_jump].step == k {
            for (c, s) in price_jumps[next_price_jump].sizes.iter().enumerate() {
                y[k * d + c] += s;
            }
            next_price_jump += 1;
        }
    }

    Ok(SimPath {
        n_fine,
        d,
        y,
        spot_var: spot,
        price_jumps,
        vol_jump_count,
        seed,
        model: model.clone(),
    })
}

/// Jump times (sorted) and exponential sizes on `[0, 1]` per component.
fn vol_jump_schedule(seed: u64, d: usize, rate: f64, mean: f64) -> Vec<Vec<(f64, f64)>> {
    let mut rng = stream(seed, VOL_JUMP_STREAM);
    let gaps = Exp::new(rate).expect("validated rate");
    let sizes = Exp::new(1.0 / mean).expect("validated mean");
    (0..d)
        .map(|_| {
            let mut out = Vec::new();
            let mut t: f64 = rng.sample(gaps);
            while t <= 1.0 {
                out.push((t, rng.sample(sizes)));
                t += rng.sample(gaps);
            }
            out
        })
        .collect()
}

fn price_jump_schedule(model: &ModelSpec, n_fine: usize, seed: u64) -> Result<Vec<PriceJump>> {
    let Some(spec) = model.price_jumps else {
        return Ok(Vec::new());
    };
    let mut rng = stream(seed, PRICE_JUMP_STREAM);
    let mut times: Vec<f64> = match spec.arrivals {
        JumpArrivals::Fixed { count } => (0..count).map(|_| 1.0 - rng.random::<f64>()).collect(),
        JumpArrivals::Poisson { lambda } => {
            let gaps = Exp::new(lambda).map_err(|e| Error::InvalidModel(e.to_string()))?;
            let mut out = Vec::new();
            let mut t: f64 = rng.sample(gaps);
            while t <= 1.0 {
                out.push(t);
                t += rng.sample(gaps);
            }
            out
        }
    };
    times.sort_by(f64::total_cmp);
    let size = Normal::new(0.0, spec.jump_sd).map_err(|e| Error::InvalidModel(e.to_string()))?;
    Ok(times
        .into_iter()
        .map(|time| PriceJump {
            time,
            step: ((time * n_fine as f64).ceil() as usize).clamp(1, n_fine),
            sizes: (0..model.dim).map(|_| rng.sample(size)).collect(),
        })
        .collect())
}

impl SimPath {
    pub fn n_fine(&self) -> usize {
        self.n_fine
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn price_jumps(&self) -> &[PriceJump] {
        &self.price_jumps
    }

    pub fn has_price_jumps(&self) -> bool {
        !self.price_jumps.is_empty()
    }

    pub fn vol_jump_count(&self) -> usize {
        self.vol_jump_count
    }

    pub fn y(&self, k: usize, c: usize) -> f64 {
        self.y[k * self.d + c]
    }

    pub fn spot_var(&self, k: usize, c: usize) -> f64 {
        self.spot_var[k * self.d + c]
    }

    pub fn y_row(&self, k: usize) -> &[f64] {
        &self.y[k * self.d..(k + 1) * self.d]
    }

    pub fn spot_var_row(&self, k: usize) -> &[f64] {
        &self.spot_var[k * self.d..(k + 1) * self.d]
    }

    /// Left-point Riemann sum of `f(spot variances)` over `[0, t]`.
    pub fn integrate_spot<F: FnMut(&[f64]) -> f64>(&self, t: f64, mut f: F) -> f64 {
        let steps = ((self.n_fine as f64 * t + 1e-9).floor() as usize).min(self.n_fine);
        let mut acc = Compensated::new();
        for k in 0..steps {
            acc.add(f(self.spot_var_row(k)));
        }
        acc.value() / self.n_fine as f64
    }

    /// `int_0^t sigma_{0,u}^p du` for the first component.
    pub fn integrated_power(&self, p: f64, t: f64) -> f64 {
        self.integrated_power_component(0, p, t)
    }

    pub fn integrated_power_component(&self, j: usize, p: f64, t: f64) -> f64 {
        let half = p / 2.0;
        if half == 0.5 {
            self.integrate_spot(t, |v| v[j].sqrt())
        } else if half == 1.0 {
            self.integrate_spot(t, |v| v[j])
        } else if half == 2.0 {
            self.integrate_spot(t, |v| v[j] * v[j])
        } else {
            self.integrate_spot(t, |v| v[j].powf(half))
        }
    }

    /// Spot covariance `Sigma_u` at fine step `k`.
    pub fn spot_covariance(&self, k: usize) -> DMatrix<f64> {
        let corr = self.model.correlation_matrix();
        let v = self.spot_var_row(k);
        DMatrix::from_fn(self.d, self.d, |a, b| corr[(a, b)] * (v[a] * v[b]).sqrt())
    }

    pub fn integrated_covariance(&self, t: f64) -> DMatrix<f64> {
        let corr = self.model.correlation_matrix();
        let d = self.d;
        let mut out = DMatrix::zeros(d, d);
        for a in 0..d {
            for b in 0..d {
                out[(a, b)] = corr[(a, b)] * self.integrate_spot(t, |v| (v[a] * v[b]).sqrt());
            }
        }
        out
    }

    /// `int_0^t det(Sigma_u) du`.
    pub fn integrated_det(&self, t: f64) -> f64 {
        let det_corr = self.model.correlation_matrix().determinant();
        det_corr * self.integrate_spot(t, |v| v.iter().product())
    }

    /// Coarse returns on `{i/n}`; `n` must divide `n_fine`.
    pub fn subsample(&self, n: usize) -> Result<ReturnSeries> {
        if n == 0 || !self.n_fine.is_multiple_of(n) {
            return Err(Error::InvalidConfig(format!("n = {n} does not divide n_fine = {}", self.n_fine)));
        }
        let m = self.n_fine / n;
        let d = self.d;
        let mut deltas = Vec::with_capacity(n * d);
        for i in 1..=n {
            for c in 0..d {
                deltas.push(self.y(i * m, c) - self.y((i - 1) * m, c));
            }
        }
        ReturnSeries::new(d, deltas)
    }

    pub fn log_price_path(&self) -> Result<LogPricePath> {
        let times = (0..=self.n_fine).map(|k| k as f64 / self.n_fine as f64).collect();
        LogPricePath::from_flat(times, self.y.clone(), self.d)
    }
}
