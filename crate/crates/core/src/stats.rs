//! Small statistical helpers shared by the inference and Monte Carlo code.

use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::sum::{sum, Compensated};

pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Two-sided critical value: `Phi^{-1}((1 + level) / 2)`.
pub fn normal_two_sided_quantile(level: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 * (1.0 + level))
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    sum(xs.iter().copied()) / xs.len() as f64
}

/// Mean, variance (denominator `n - 1`), skewness and kurtosis (not excess).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

pub fn moments(xs: &[f64]) -> Moments {
    let n = xs.len() as f64;
    let m = mean(xs);
    let (mut s2, mut s3, mut s4) = (Compensated::new(), Compensated::new(), Compensated::new());
    for &x in xs {
        let d = x - m;
        let d2 = d * d;
        s2.add(d2);
        s3.add(d2 * d);
        s4.add(d2 * d2);
    }
    let m2 = s2.value() / n;
    Moments {
        mean: m,
        variance: s2.value() / (n - 1.0),
        skewness: (s3.value() / n) / m2.powf(1.5),
        kurtosis: (s4.value() / n) / (m2 * m2),
    }
}

/// Kolmogorov-Smirnov distance between the empirical law of `xs` and the
/// standard normal.
pub fn ks_distance_normal(xs: &[f64]) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Least-squares slope of `y` on `x` with its standard error.
pub fn ols_slope(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx = sum(x.iter().map(|v| (v - mx).powi(2)));
    if sxx == 0.0 {
        return None;
    }
    let sxy = sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    let slope = sxy / sxx;
    let se = if n > 2 {
        let intercept = my - slope * mx;
        let rss = sum(x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)));
        (rss / (n - 2) as f64 / sxx).sqrt()
    } else {
        f64::NAN
    };
    Some((slope, se))
}

/// Sample covariance matrix of the rows of `data` (each row one draw).
pub fn sample_covariance(data: &[Vec<f64>]) -> DMatrix<f64> {
    let k = data.first().map_or(0, Vec::len);
    let n = data.len() as f64;
    let means: Vec<f64> = (0..k).map(|c| sum(data.iter().map(|r| r[c])) / n).collect();
    DMatrix::from_fn(k, k, |a, b| {
        sum(data.iter().map(|r| (r[a] - means[a]) * (r[b] - means[b]))) / (n - 1.0)
    })
}
