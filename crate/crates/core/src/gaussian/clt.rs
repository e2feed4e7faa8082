use nalgebra::DMatrix;

use super::expectation::{check_conformable, expect, rho_product_with, rho_with};
use super::functions::{GHFunction, SpotCov};
use super::quadrature::QuadratureOptions;
use crate::error::{Error, Result};

/// The four-index array `A^{jk,j'k'}` of the bipower CLT, with
/// `j, j' < d1` and `k, k' < d3`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceArray {
    d1: usize,
    d3: usize,
    data: Vec<f64>,
}

impl CovarianceArray {
    fn zeros(d1: usize, d3: usize) -> Self {
        Self {
            d1,
            d3,
            data: vec![0.0; d1 * d3 * d1 * d3],
        }
    }

    fn offset(&self, j: usize, k: usize, jp: usize, kp: usize) -> usize {
        ((j * self.d3 + k) * self.d1 + jp) * self.d3 + kp
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d1, self.d3)
    }

    pub fn get(&self, j: usize, k: usize, jp: usize, kp: usize) -> f64 {
        self.data[self.offset(j, k, jp, kp)]
    }

    /// Flattens to a `(d1 d3) x (d1 d3)` matrix, row index `j * d3 + k`.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let m = self.d1 * self.d3;
        DMatrix::from_row_slice(m, m, &self.data)
    }
}

/// Scalar asymptotic variance
/// `rho(gg) rho(hh) + 2 rho(g) rho(h) rho(gh) - 3 {rho(g) rho(h)}^2`.
pub fn clt_variance_scalar(g: &GHFunction, h: &GHFunction, cov: &SpotCov) -> Result<f64> {
    if g.shape() != (1, 1) || h.shape() != (1, 1) {
        return Err(Error::Shape("scalar CLT variance needs 1x1 g and h".into()));
    }
    let opts = QuadratureOptions::default();
    let rg = rho_with(g, cov, &opts)?[(0, 0)];
    let rh = rho_with(h, cov, &opts)?[(0, 0)];
    let rgg = rho_product_with(g, g, cov, &opts)?[(0, 0)];
    let rhh = rho_product_with(h, h, cov, &opts)?[(0, 0)];
    let rgh = rho_product_with(g, h, cov, &opts)?[(0, 0)];
    Ok(rgg * rhh + 2.0 * rg * rh * rgh - 3.0 * (rg * rh).powi(2))
}

/// Full quadratic form `A(sigma, g, h)^{jk,j'k'}`.
pub fn clt_covariance_general(g: &GHFunction, h: &GHFunction, cov: &SpotCov) -> Result<CovarianceArray> {
    check_conformable(g, h)?;
    let opts = QuadratureOptions::default();
    let (d1, d2) = g.shape();
    let d3 = h.shape().1;
    let rg = rho_with(g, cov, &opts)?;
    let rh = rho_with(h, cov, &opts)?;

    // pairwise expectations, indexed by flattened entry positions
    let pair = |a: &GHFunction, ai: (usize, usize), b: &GHFunction, bi: (usize, usize)| {
        expect(&a.entry(ai.0, ai.1).times(&b.entry(bi.0, bi.1)), cov, &opts)
    };
    let gg = table(d1 * d2, d1 * d2, |x, y| pair(g, (x / d2, x % d2), g, (y / d2, y % d2)))?;
    let hh = table(d2 * d3, d2 * d3, |x, y| pair(h, (x / d3, x % d3), h, (y / d3, y % d3)))?;
    let gh = table(d1 * d2, d2 * d3, |x, y| pair(g, (x / d2, x % d2), h, (y / d3, y % d3)))?;

    let gi = |j: usize, l: usize| j * d2 + l;
    let hi = |l: usize, k: usize| l * d3 + k;
    let mut out = CovarianceArray::zeros(d1, d3);
    for j in 0..d1 {
        for k in 0..d3 {
            for jp in 0..d1 {
                for kp in 0..d3 {
                    let mut acc = 0.0;
                    for l in 0..d2 {
                        for lp in 0..d2 {
                            let (g1, g2) = (rg[(j, l)], rg[(jp, lp)]);
                            let (h1, h2) = (rh[(l, k)], rh[(lp, kp)]);
                            acc += gg[(gi(j, l), gi(jp, lp))] * hh[(hi(l, k), hi(lp, kp))]
                                + g1 * h2 * gh[(gi(jp, lp), hi(l, k))]
                                + g2 * h1 * gh[(gi(j, l), hi(lp, kp))]
                                - 3.0 * g1 * g2 * h1 * h2;
                        }
                    }
                    let at = out.offset(j, k, jp, kp);
                    out.data[at] = acc;
                }
            }
        }
    }
    Ok(out)
}

fn table<F>(rows: usize, cols: usize, mut f: F) -> Result<DMatrix<f64>>
where
    F: FnMut(usize, usize) -> Result<f64>,
{
    let mut m = DMatrix::zeros(rows, cols);
    for x in 0..rows {
        for y in 0..cols {
            m[(x, y)] = f(x, y)?;
        }
    }
    Ok(m)
}
