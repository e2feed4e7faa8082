use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observation times closer than this are treated as equal when aligning to
/// the sampling grid.
const TIME_EPS: f64 = 1e-12;

/// A `d`-dimensional log-price path observed at increasing times in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogPricePath {
    times: Vec<f64>,
    /// Row-major, one row of `d` values per observation.
    values: Vec<f64>,
    d: usize,
}

impl LogPricePath {
    pub fn new(times: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if d == 0 {
            return Err(Error::InvalidPath("path needs at least one component".into()));
        }
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidPath("ragged observation rows".into()));
        }
        Self::from_flat(times, rows.into_iter().flatten().collect(), d)
    }

    pub fn univariate(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::from_flat(times, values, 1)
    }

    pub fn from_flat(times: Vec<f64>, values: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 || values.len() != times.len() * d {
            return Err(Error::InvalidPath(format!(
                "{} values do not fill {} observations of dimension {d}",
                values.len(),
                times.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::InvalidPath("need at least 2 observations".into()));
        }
        if times[0] < 0.0 || *times.last().unwrap() > 1.0 {
            return Err(Error::InvalidPath("observation times must lie in [0, 1]".into()));
        }
        if let Some(k) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidPath(format!("times not strictly increasing at index {}", k + 1)));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPath("non-finite log-price".into()));
        }
        Ok(Self { times, values, d })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.d..(k + 1) * self.d]
    }

    /// Adds `c` to every log-price level.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            times: self.times.clone(),
            values: self.values.iter().map(|v| v + c).collect(),
            d: self.d,
        }
    }
}

/// Equispaced returns `Delta_i^n Y = Y_{i/n} - Y_{(i-1)/n}`, `i = 1..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    n: usize,
    d: usize,
    /// Row-major `n x d`.
    deltas: Vec<f64>,
    /// Set when the sampling frequency exceeds the observation density.
    sparse: bool,
}

impl ReturnSeries {
    pub fn new(d: usize, deltas: Vec<f64>) -> Result<Self> {
        if d == 0 || deltas.is_empty() || !deltas.len().is_multiple_of(d) {
            return Err(Error::InvalidPath("returns must form a non-empty n x d table".into()));
        }
        if deltas.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPath("non-finite return".into()));
        }
        Ok(Self {
            n: deltas.len() / d,
            d,
            deltas,
            sparse: false,
        })
    }

    pub fn univariate(deltas: Vec<f64>) -> Result<Self> {
        Self::new(1, deltas)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// True when fewer than one observation per interval was available, so
    /// some intervals reuse the last seen value.
    pub fn is_sparse(&self) -> bool {
        self.sparse
    }

    /// Return vector of interval `i` (0-based: `row(0)` is `Delta_1`).
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.deltas[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.deltas[i * self.d + j]
    }

    pub fn component(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.deltas.iter().skip(j).step_by(self.d).copied()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.deltas
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            deltas: self.deltas.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }

    pub(crate) fn check_component(&self, j: usize) -> Result<()> {
        if j >= self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: j + 1,
            });
        }
        Ok(())
    }
}

/// Aligns `path` to the grid `{i/n}` by previous-tick interpolation and
/// differences it.
///
/// Grid points before the first observation take the first observed value.
pub fn returns_from_path(path: &LogPricePath, n: usize) -> Result<ReturnSeries> {
    if n < 2 {
        return Err(Error::InvalidPath(format!("need n >= 2, got {n}")));
    }
    let d = path.dim();
    let times = path.times();
    let mut cursor = 0usize;
    let mut prev: Vec<f64> = path.row(0).to_vec();
    let mut deltas = Vec::with_capacity(n * d);
    for i in 1..=n {
        let tau = i as f64 / n as f64;
        while cursor + 1 < times.len() && times[cursor + 1] <= tau + TIME_EPS {
            cursor += 1;
        }
        let level = path.row(cursor);
        deltas.extend(level.iter().zip(&prev).map(|(a, b)| a - b));
        prev.copy_from_slice(level);
    }
    let mut out = ReturnSeries::new(d, deltas)?;
    out.sparse = n + 1 > path.len();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_differencing_on_exact_grid() {
        let p = LogPricePath::univariate(vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0], vec![0.0, 0.1, -0.1, 0.2]).unwrap();
        let r = returns_from_path(&p, 3).unwrap();
        let expect = [0.1, -0.2, 0.3];
        for (a, b) in r.as_slice().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(!r.is_sparse());
    }

    #[test]
    fn constant_path_gives_zero_returns() {
        let times: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let p = LogPricePath::univariate(times, vec![4.2; 11]).unwrap();
        let r = returns_from_path(&p, 5).unwrap();
        assert!(r.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn previous_tick_on_irregular_times() {
        let p = LogPricePath::univariate(vec![0.0, 0.2, 0.55, 0.9], vec![1.0, 2.0, 4.0, 8.0]).unwrap();
        let r = returns_from_path(&p, 4).unwrap();
        // grid 0.25 -> 2, 0.5 -> 2, 0.75 -> 4, 1.0 -> 8
        assert_eq!(r.as_slice(), &[1.0, 0.0, 2.0, 4.0]);
        assert!(r.is_sparse());
    }

    #[test]
    fn rejects_bad_paths() {
        assert!(LogPricePath::univariate(vec![0.0], vec![1.0]).is_err());
        assert!(LogPricePath::univariate(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(LogPricePath::univariate(vec![0.0, 1.5], vec![1.0, 2.0]).is_err());
        assert!(LogPricePath::univariate(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
        let p = LogPricePath::univariate(vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        assert!(returns_from_path(&p, 1).is_err());
    }
}
