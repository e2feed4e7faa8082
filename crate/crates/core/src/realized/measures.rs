use nalgebra::DMatrix;

use super::path::ReturnSeries;
use crate::error::{domain, Error, Result};
use crate::gaussian::{abs_moment, GHFunction};
use crate::sum::Compensated;

/// `floor(n t)` for `0 < t <= 1`; `t` values within rounding of a grid
/// point `k/n` land on `k`.
pub fn window_count(n: usize, t: f64) -> Result<usize> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(domain(format!("evaluation time must lie in (0, 1], got {t}")));
    }
    Ok(((n as f64 * t + 1e-9).floor() as usize).min(n))
}

#[inline]
fn abs_pow(x: f64, r: f64) -> f64 {
    if r == 1.0 {
        x.abs()
    } else if r == 2.0 {
        x * x
    } else if r == 4.0 {
        let s = x * x;
        s * s
    } else {
        x.abs().powf(r)
    }
}

fn check_power(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("powers must be positive, got {r}")))
    }
}

/// `(1/n) sum g(sqrt(n) Delta_i) h(sqrt(n) Delta_{i+1})`.
///
/// The sum runs to `min(floor(nt), n-1)` since `Delta_{n+1}` does not
/// exist; when `h` ignores its argument no lagged return is needed and the
/// sum runs to `floor(nt)`.
pub fn generalized_bipower(ret: &ReturnSeries, g: &GHFunction, h: &GHFunction, t: f64) -> Result<DMatrix<f64>> {
    g.validate()?;
    h.validate()?;
    let (rows, inner) = g.shape();
    let (inner_h, cols) = h.shape();
    if inner != inner_h {
        return Err(Error::Shape(format!("g is {rows}x{inner}, h is {inner_h}x{cols}")));
    }
    let need = g.input_dim().max(h.input_dim());
    if need > ret.dim() {
        return Err(Error::DimensionMismatch {
            expected: ret.dim(),
            got: need,
        });
    }
    let n = ret.n();
    let mut upper = window_count(n, t)?;
    if !h.is_constant() {
        upper = upper.min(n - 1);
    }
    let scale = (n as f64).sqrt();
    let scaled = |i: usize| -> Vec<f64> { ret.row(i).iter().map(|v| v * scale).collect() };

    let mut acc: Vec<Compensated> = vec![Compensated::new(); rows * cols];
    let h_const = h.is_constant().then(|| h.eval(&[]));
    for i in 0..upper {
        let gv = g.eval(&scaled(i));
        let hv = match &h_const {
            Some(c) => c.clone(),
            None => h.eval(&scaled(i + 1)),
        };
        let prod = gv * hv;
        for (a, v) in acc.iter_mut().zip(prod.iter()) {
            a.add(*v);
        }
    }
    // nalgebra iterates column-major, matching from_iterator
    Ok(DMatrix::from_iterator(rows, cols, acc.iter().map(|a| a.value() / n as f64)))
}

/// `sum_{i <= floor(nt)} (Delta_i Y^j)^2`.
pub fn realized_variance(ret: &ReturnSeries, j: usize, t: f64) -> Result<f64> {
    realized_power_variation(ret, j, 2.0, t)
}

/// `sum_{i <= floor(nt)} Delta_i Y (Delta_i Y)'`.
pub fn realized_covariation(ret: &ReturnSeries, t: f64) -> Result<DMatrix<f64>> {
    let upper = window_count(ret.n(), t)?;
    let d = ret.dim();
    let mut acc = vec![Compensated::new(); d * d];
    for i in 0..upper {
        let x = ret.row(i);
        for a in 0..d {
            for b in a..d {
                acc[a * d + b].add(x[a] * x[b]);
            }
        }
    }
    Ok(DMatrix::from_fn(d, d, |a, b| {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        acc[lo * d + hi].value()
    }))
}

/// `n^{-1+r/2} sum_{i <= floor(nt)} |Delta_i Y^j|^r`.
pub fn realized_power_variation(ret: &ReturnSeries, j: usize, r: f64, t: f64) -> Result<f64> {
    realized_multipower(ret, j, &[r], t)
}

/// `n^{-1+(r+s)/2} sum |Delta_i Y^j|^r |Delta_{i+1} Y^j|^s`, summed to
/// `min(floor(nt), n-1)`.
pub fn realized_bipower(ret: &ReturnSeries, j: usize, r: f64, s: f64, t: f64) -> Result<f64> {
    realized_multipower(ret, j, &[r, s], t)
}

/// `n^{-1+(p_1+...+p_I)/2} sum_i prod_k |Delta_{i+k-1} Y^j|^{p_k}` over
/// forward windows of length `I`, summed to `min(floor(nt), n-I+1)`.
pub fn realized_multipower(ret: &ReturnSeries, j: usize, powers: &[f64], t: f64) -> Result<f64> {
    if powers.is_empty() {
        return Err(domain("multipower needs at least one power"));
    }
    for &p in powers {
        check_power(p)?;
    }
    ret.check_component(j)?;
    let n = ret.n();
    let width = powers.len();
    let upper = window_count(n, t)?.min((n + 1).saturating_sub(width));
    let x: Vec<f64> = ret.component(j).collect();
    let mut acc = Compensated::new();
    for i in 0..upper {
        let mut prod = 1.0;
        for (k, &p) in powers.iter().enumerate() {
            prod *= abs_pow(x[i + k], p);
        }
        acc.add(prod);
    }
    let total: f64 = powers.iter().sum();
    let exponent = -1.0 + total / 2.0;
    let scale = if exponent == 0.0 { 1.0 } else { (n as f64).powf(exponent) };
    Ok(scale * acc.value())
}

/// Integrated quarticity from fourth powers: `(1/3) n sum |Delta|^4`.
pub fn quarticity_rv(ret: &ReturnSeries, j: usize, t: f64) -> Result<f64> {
    Ok(realized_power_variation(ret, j, 4.0, t)? / abs_moment(4.0)?)
}

/// Integrated quarticity from tripower variation with powers `4/3`.
pub fn quarticity_tripower(ret: &ReturnSeries, j: usize, t: f64) -> Result<f64> {
    let p = 4.0 / 3.0;
    Ok(realized_multipower(ret, j, &[p, p, p], t)? / abs_moment(p)?.powi(3))
}

/// Integrated quarticity from quadpower variation with unit powers.
pub fn quarticity_quadpower(ret: &ReturnSeries, j: usize, t: f64) -> Result<f64> {
    Ok(realized_multipower(ret, j, &[1.0; 4], t)? / abs_moment(1.0)?.powi(4))
}

/// `(n^{d-1}/d!) sum_i det(zeta_i)` with
/// `zeta_i = sum_{k<d} Delta_{i+k} Delta_{i+k}'`; estimates
/// `int det(Sigma_u) du`.
pub fn det_rank_statistic(ret: &ReturnSeries, t: f64) -> Result<f64> {
    let n = ret.n();
    let d = ret.dim();
    let upper = window_count(n, t)?.min((n + 1).saturating_sub(d));
    let mut acc = Compensated::new();
    let mut zeta = DMatrix::<f64>::zeros(d, d);
    for i in 0..upper {
        let det = match d {
            1 => ret.get(i, 0).powi(2),
            2 => {
                let (a, b) = (ret.row(i), ret.row(i + 1));
                let cross = a[0] * b[1] - a[1] * b[0];
                cross * cross
            }
            _ => {
                zeta.fill(0.0);
                for k in 0..d {
                    let x = ret.row(i + k);
                    for a in 0..d {
                        for b in 0..d {
                            zeta[(a, b)] += x[a] * x[b];
                        }
                    }
                }
                zeta.determinant()
            }
        };
        acc.add(det);
    }
    let factorial: f64 = (1..=d).map(|k| k as f64).product();
    Ok((n as f64).powi(d as i32 - 1) / factorial * acc.value())
}
