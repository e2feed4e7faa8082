//! Brute-force Monte Carlo estimates of the Gaussian constants, used as an
//! independent check on the closed forms.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::exec::map_indexed;
use crate::error::{domain, Result};
use crate::sim::rng::{derive_seed, stream, ORACLE_STREAM};
use crate::sum::Compensated;

pub const MIN_DRAWS: usize = 100_000;
const CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleKind {
    /// `E|u|^r`.
    AbsMoment { r: f64 },
    /// `Var(|u|^r)`.
    PowerVariance { r: f64 },
    /// Long-run variance of bipower products `|u_i|^r |u_{i+1}|^s`.
    BipowerConst { r: f64, s: f64 },
    /// Long-run variance of `prod_{k<I} |u_{i+k}|^{2/I}`.
    Omega { terms: usize },
    /// Long-run variance of `prod_k |u_{i+k}|^{p_k}`.
    Multipower { powers: Vec<f64> },
}

impl OracleKind {
    fn powers(&self) -> Option<Vec<f64>> {
        match self {
            Self::AbsMoment { .. } => None,
            Self::PowerVariance { r } => Some(vec![*r]),
            Self::BipowerConst { r, s } => Some(vec![*r, *s]),
            Self::Omega { terms } => Some(vec![2.0 / *terms as f64; *terms]),
            Self::Multipower { powers } => Some(powers.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Clone, Copy, Default)]
struct Sums {
    n: f64,
    q: f64,
    p: f64,
    qq: f64,
    pp: f64,
    qp: f64,
}

impl Sums {
    fn merge(&mut self, o: &Sums) {
        self.n += o.n;
        self.q += o.q;
        self.p += o.p;
        self.qq += o.qq;
        self.pp += o.pp;
        self.qp += o.qp;
    }
}

/// Monte Carlo estimate of a Gaussian constant from `draws` independent
/// blocks of i.i.d. standard normals, with its standard error.
///
/// For a long-run variance of `P_i = prod_k |u_{i+k}|^{p_k}` with `I`
/// factors, each block holds `2I - 1` normals and yields
/// `Q = P_0^2 + 2 sum_{0<j<I} P_0 P_j` and `P_0`; the estimate is
/// `mean(Q) - (2I - 1) mean(P)^2` with a delta-method standard error.
/// Draws are split into fixed chunks with derived seeds, so results do not
/// depend on the number of worker threads.
pub fn moment_oracle(kind: &OracleKind, draws: usize, seed: u64) -> Result<OracleEstimate> {
    moment_oracle_with(kind, draws, seed, None)
}

pub fn moment_oracle_with(kind: &OracleKind, draws: usize, seed: u64, workers: Option<usize>) -> Result<OracleEstimate> {
    if draws < MIN_DRAWS {
        return Err(domain(format!("oracle needs at least {MIN_DRAWS} draws, got {draws}")));
    }
    let powers = kind.powers();
    if let Some(p) = &powers {
        if p.is_empty() || p.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(domain("oracle powers must be positive"));
        }
    }
    let r_abs = match kind {
        OracleKind::AbsMoment { r } if !(r.is_finite() && *r > -1.0) => {
            return Err(domain(format!("absolute moment needs r > -1, got {r}")))
        }
        OracleKind::AbsMoment { r } => *r,
        _ => 0.0,
    };
    let chunks = draws.div_ceil(CHUNK);
    let parts = map_indexed(chunks, workers, |c| {
        let size = CHUNK.min(draws - c * CHUNK);
        let mut rng = stream(derive_seed(seed, c as u64), ORACLE_STREAM);
        Ok(match &powers {
            None => chunk_abs(&mut rng, size, r_abs),
            Some(p) => chunk_long_run(&mut rng, size, p),
        })
    })?;
    let mut total = Sums::default();
    for p in &parts {
        total.merge(p);
    }
    let n = total.n;
    let (mq, mp) = (total.q / n, total.p / n);
    let var_q = (total.qq / n - mq * mq) * n / (n - 1.0);
    let var_p = (total.pp / n - mp * mp) * n / (n - 1.0);
    let cov_qp = (total.qp / n - mq * mp) * n / (n - 1.0);
    Ok(match &powers {
        None => OracleEstimate {
            estimate: mp,
            std_error: (var_p / n).sqrt(),
        },
        Some(p) => {
            let lags = (2 * p.len() - 1) as f64;
            let c = 2.0 * lags * mp;
            let var_psi = var_q - 2.0 * c * cov_qp + c * c * var_p;
            OracleEstimate {
                estimate: mq - lags * mp * mp,
                std_error: (var_psi.max(0.0) / n).sqrt(),
            }
        }
    })
}

fn normal_abs<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = rng.sample(StandardNormal);
    u.abs()
}

fn pow(x: f64, r: f64) -> f64 {
    if r == 1.0 {
        x
    } else if r == 2.0 {
        x * x
    } else if r == 0.5 {
        x.sqrt()
    } else {
        x.powf(r)
    }
}

fn chunk_abs<R: Rng>(rng: &mut R, size: usize, r: f64) -> Sums {
    let (mut p, mut pp) = (Compensated::new(), Compensated::new());
    for _ in 0..size {
        let v = pow(normal_abs(rng), r);
        p.add(v);
        pp.add(v * v);
    }
    Sums {
        n: size as f64,
        p: p.value(),
        pp: pp.value(),
        ..Sums::default()
    }
}

fn chunk_long_run<R: Rng>(rng: &mut R, size: usize, powers: &[f64]) -> Sums {
    let width = powers.len();
    let len = 2 * width - 1;
    let mut u = vec![0.0; len];
    let mut prods = vec![0.0; width];
    let mut acc = [Compensated::new(); 5];
    for _ in 0..size {
        for x in u.iter_mut() {
            *x = normal_abs(rng);
        }
        for (lag, out) in prods.iter_mut().enumerate() {
            *out = powers.iter().enumerate().map(|(k, &p)| pow(u[lag + k], p)).product();
        }
        let p0 = prods[0];
        let q = p0 * p0 + 2.0 * p0 * prods[1..].iter().sum::<f64>();
        for (a, v) in acc.iter_mut().zip([q, p0, q * q, p0 * p0, q * p0]) {
            a.add(v);
        }
    }
    Sums {
        n: size as f64,
        q: acc[0].value(),
        p: acc[1].value(),
        qq: acc[2].value(),
        pp: acc[3].value(),
        qp: acc[4].value(),
    }
}
