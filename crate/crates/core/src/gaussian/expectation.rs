use nalgebra::{Cholesky, DMatrix};

use super::functions::{Entry, GHFunction, SpotCov};
use super::moments::abs_moment;
use super::quadrature::{gaussian_1d, gaussian_qmc, QuadratureOptions};
use crate::error::{Error, Result};

const MAX_CONDITION: f64 = 1e12;

/// `rho_sigma(f) = E f(X)` with `X ~ N(0, Sigma)`.
pub fn rho(f: &GHFunction, cov: &SpotCov) -> Result<DMatrix<f64>> {
    rho_with(f, cov, &QuadratureOptions::default())
}

pub fn rho_with(f: &GHFunction, cov: &SpotCov, opts: &QuadratureOptions) -> Result<DMatrix<f64>> {
    f.validate()?;
    check_dims(f, cov)?;
    let (rows, cols) = f.shape();
    let mut out = DMatrix::zeros(rows, cols);
    for j in 0..rows {
        for k in 0..cols {
            out[(j, k)] = expect(&f.entry(j, k), cov, opts)?;
        }
    }
    Ok(out)
}

/// `rho_sigma(gh) = E{g(X) h(X)}` (matrix product inside the expectation).
pub fn rho_product(g: &GHFunction, h: &GHFunction, cov: &SpotCov) -> Result<DMatrix<f64>> {
    rho_product_with(g, h, cov, &QuadratureOptions::default())
}

pub fn rho_product_with(
    g: &GHFunction,
    h: &GHFunction,
    cov: &SpotCov,
    opts: &QuadratureOptions,
) -> Result<DMatrix<f64>> {
    g.validate()?;
    h.validate()?;
    check_conformable(g, h)?;
    check_dims(g, cov)?;
    check_dims(h, cov)?;
    let (rows, inner) = g.shape();
    let cols = h.shape().1;
    let mut out = DMatrix::zeros(rows, cols);
    for j in 0..rows {
        for k in 0..cols {
            let mut acc = 0.0;
            for l in 0..inner {
                acc += expect(&g.entry(j, l).times(&h.entry(l, k)), cov, opts)?;
            }
            out[(j, k)] = acc;
        }
    }
    Ok(out)
}

/// `E{a^{ij}(X) b^{kl}(X)}` for single entries of two test functions.
pub fn expect_entry_product(
    a: &GHFunction,
    a_idx: (usize, usize),
    b: &GHFunction,
    b_idx: (usize, usize),
    cov: &SpotCov,
    opts: &QuadratureOptions,
) -> Result<f64> {
    let e = a.entry(a_idx.0, a_idx.1).times(&b.entry(b_idx.0, b_idx.1));
    expect(&e, cov, opts)
}

pub(crate) fn check_conformable(g: &GHFunction, h: &GHFunction) -> Result<()> {
    let (gs, hs) = (g.shape(), h.shape());
    if gs.1 != hs.0 {
        return Err(Error::Shape(format!(
            "g is {}x{} but h is {}x{}",
            gs.0, gs.1, hs.0, hs.1
        )));
    }
    Ok(())
}

fn check_dims(f: &GHFunction, cov: &SpotCov) -> Result<()> {
    let need = f.input_dim();
    let custom_mismatch = matches!(f, GHFunction::Custom(c) if c.input_dim() != cov.dim());
    if need > cov.dim() || custom_mismatch {
        return Err(Error::DimensionMismatch {
            expected: cov.dim(),
            got: need,
        });
    }
    if cov.dim() > 1 {
        let cond = cov.condition_number();
        if cond > MAX_CONDITION {
            return Err(Error::NearSingular(cond));
        }
    }
    Ok(())
}

/// Expectation of a single (product) entry under `N(0, Sigma)`.
pub(crate) fn expect(e: &Entry, cov: &SpotCov, opts: &QuadratureOptions) -> Result<f64> {
    if e.is_zero() {
        return Ok(0.0);
    }
    if e.input_dim() > cov.dim() {
        return Err(Error::DimensionMismatch {
            expected: cov.dim(),
            got: e.input_dim(),
        });
    }
    if !e.custom.is_empty() {
        return if cov.dim() == 1 {
            gaussian_1d(|x| e.eval(&[x]), cov.sd(0), opts)
        } else {
            let chol = cholesky(cov.cov())?;
            gaussian_qmc(|x| e.eval(x), &chol, opts)
        };
    }

    let comps = e.components();
    if comps.is_empty() {
        return Ok(e.coef);
    }
    let degree: u32 = e.int_pow.iter().map(|p| p.1).sum();
    if degree % 2 == 1 {
        // odd under x -> -x
        return Ok(0.0);
    }
    let abs_of = |c: usize| e.abs_pow.iter().filter(|p| p.0 == c).map(|p| p.1).sum::<f64>();
    let int_of = |c: usize| e.int_pow.iter().filter(|p| p.0 == c).map(|p| p.1).sum::<u32>();

    let uncorrelated = comps
        .iter()
        .enumerate()
        .all(|(i, &a)| comps[i + 1..].iter().all(|&b| cov.cov()[(a, b)] == 0.0));
    if uncorrelated {
        let mut v = e.coef;
        for &c in &comps {
            let m = int_of(c);
            if m % 2 == 1 {
                return Ok(0.0);
            }
            let order = abs_of(c) + f64::from(m);
            v *= abs_moment(order)? * cov.sd(c).powf(order);
        }
        return Ok(v);
    }
    if e.abs_pow.iter().all(|p| p.1 == 0.0) {
        let mut idx = Vec::new();
        for &(c, m) in &e.int_pow {
            idx.extend(std::iter::repeat_n(c, m as usize));
        }
        return Ok(e.coef * isserlis(&idx, cov.cov()));
    }

    // correlated absolute powers: integrate over the touched components only
    let sub = DMatrix::from_fn(comps.len(), comps.len(), |a, b| cov.cov()[(comps[a], comps[b])]);
    let chol = cholesky(&sub)?;
    let mut local = e.clone();
    for p in &mut local.abs_pow {
        p.0 = comps.binary_search(&p.0).unwrap();
    }
    for p in &mut local.int_pow {
        p.0 = comps.binary_search(&p.0).unwrap();
    }
    gaussian_qmc(|x| local.eval(x), &chol, opts)
}

fn cholesky(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Cholesky::new(cov.clone())
        .map(|c| c.l())
        .ok_or(Error::NearSingular(f64::INFINITY))
}

/// `E prod x_{idx[k]}` by summing over perfect pairings.
fn isserlis(idx: &[usize], cov: &DMatrix<f64>) -> f64 {
    if idx.is_empty() {
        return 1.0;
    }
    if idx.len() % 2 == 1 {
        return 0.0;
    }
    let first = idx[0];
    let rest = &idx[1..];
    let mut total = 0.0;
    for k in 0..rest.len() {
        let mut remaining = rest.to_vec();
        let partner = remaining.remove(k);
        total += cov[(first, partner)] * isserlis(&remaining, cov);
    }
    total
}
