use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{domain, Error, Result};

/// Declared symmetry of a user-supplied scalar function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    Neither,
}

type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A user-supplied scalar test function on `R^d`.
///
/// The parity flag and polynomial growth exponent are trusted as declared;
/// [`CustomFn::parity_holds`] spot-checks the parity claim.
#[derive(Clone)]
pub struct CustomFn {
    name: String,
    input_dim: usize,
    parity: Parity,
    growth: f64,
    f: Arc<ScalarFn>,
}

impl CustomFn {
    pub fn new<F>(name: impl Into<String>, input_dim: usize, parity: Parity, growth: f64, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            input_dim,
            parity,
            growth,
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn growth(&self) -> f64 {
        self.growth
    }

    #[inline]
    pub fn call(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    /// Checks the declared parity on the given points (and their negations).
    pub fn parity_holds(&self, points: &[Vec<f64>], tol: f64) -> bool {
        points.iter().all(|x| {
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            let (a, b) = (self.call(x), self.call(&neg));
            let scale = a.abs().max(b.abs()).max(1.0);
            match self.parity {
                Parity::Even => (a - b).abs() <= tol * scale,
                Parity::Odd => (a + b).abs() <= tol * scale,
                Parity::Neither => true,
            }
        })
    }
}

impl fmt::Debug for CustomFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFn")
            .field("name", &self.name)
            .field("input_dim", &self.input_dim)
            .field("parity", &self.parity)
            .field("growth", &self.growth)
            .finish()
    }
}

/// A matrix-valued test function `g` or `h` applied to scaled returns.
#[derive(Debug, Clone)]
pub enum GHFunction {
    /// The constant 1 (1x1).
    One,
    /// `|y_j|^r`, scalar.
    AbsPower { r: f64, component: usize },
    /// `(y_j)^2`, scalar.
    SignedSquare { component: usize },
    /// `y y'`, `dim x dim`.
    OuterProduct { dim: usize },
    /// The identity matrix, `dim x dim`.
    Identity { dim: usize },
    /// Diagonal matrix whose entries are the given scalar functions.
    Diagonal(Vec<GHFunction>),
    /// Column vector of scalar functions.
    Column(Vec<GHFunction>),
    /// User-supplied scalar function.
    Custom(CustomFn),
}

impl GHFunction {
    pub fn abs_power(r: f64, component: usize) -> Self {
        Self::AbsPower { r, component }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            Self::One | Self::AbsPower { .. } | Self::SignedSquare { .. } | Self::Custom(_) => (1, 1),
            Self::OuterProduct { dim } | Self::Identity { dim } => (*dim, *dim),
            Self::Diagonal(v) => (v.len(), v.len()),
            Self::Column(v) => (v.len(), 1),
        }
    }

    /// Smallest input dimension the function can be evaluated on.
    pub fn input_dim(&self) -> usize {
        match self {
            Self::One | Self::Identity { .. } => 0,
            Self::AbsPower { component, .. } | Self::SignedSquare { component } => component + 1,
            Self::OuterProduct { dim } => *dim,
            Self::Diagonal(v) | Self::Column(v) => v.iter().map(Self::input_dim).max().unwrap_or(0),
            Self::Custom(c) => c.input_dim,
        }
    }

    /// True when the function ignores its argument.
    pub fn is_constant(&self) -> bool {
        match self {
            Self::One | Self::Identity { .. } => true,
            Self::Diagonal(v) | Self::Column(v) => v.iter().all(Self::is_constant),
            _ => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::AbsPower { r, .. } if !(r.is_finite() && *r > 0.0) => {
                Err(domain(format!("AbsPower needs r > 0, got {r}")))
            }
            Self::OuterProduct { dim: 0 } | Self::Identity { dim: 0 } => {
                Err(domain("matrix-valued function with zero dimension"))
            }
            Self::Diagonal(v) | Self::Column(v) => {
                if v.is_empty() {
                    return Err(domain("Diagonal/Column need at least one entry"));
                }
                for f in v {
                    f.validate()?;
                    if f.shape() != (1, 1) {
                        return Err(Error::Shape("Diagonal/Column entries must be scalar".into()));
                    }
                }
                Ok(())
            }
            Self::Custom(c) if c.input_dim == 0 => Err(domain("custom function needs input_dim >= 1")),
            _ => Ok(()),
        }
    }

    pub(crate) fn entry(&self, row: usize, col: usize) -> Entry {
        match self {
            Self::One => Entry::constant(1.0),
            Self::AbsPower { r, component } => Entry::abs_power(*component, *r),
            Self::SignedSquare { component } => Entry::monomial(&[(*component, 2)]),
            Self::OuterProduct { .. } => {
                if row == col {
                    Entry::monomial(&[(row, 2)])
                } else {
                    Entry::monomial(&[(row, 1), (col, 1)])
                }
            }
            Self::Identity { .. } => Entry::constant(if row == col { 1.0 } else { 0.0 }),
            Self::Diagonal(v) => {
                if row == col {
                    v[row].entry(0, 0)
                } else {
                    Entry::constant(0.0)
                }
            }
            Self::Column(v) => v[row].entry(0, 0),
            Self::Custom(c) => Entry::custom(c.clone()),
        }
    }

    /// Evaluates the function at `x`.
    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let (rows, cols) = self.shape();
        match self {
            Self::OuterProduct { dim } => DMatrix::from_fn(*dim, *dim, |j, k| x[j] * x[k]),
            Self::Identity { dim } => DMatrix::identity(*dim, *dim),
            _ => DMatrix::from_fn(rows, cols, |j, k| self.entry(j, k).eval(x)),
        }
    }
}

/// One scalar entry of a test function (or a product of entries):
/// `coef * prod |x_c|^{a_c} * prod x_c^{m_c} * prod custom(x)`.
#[derive(Debug, Clone)]
pub(crate) struct Entry {
    pub(crate) coef: f64,
    pub(crate) abs_pow: Vec<(usize, f64)>,
    pub(crate) int_pow: Vec<(usize, u32)>,
    pub(crate) custom: Vec<CustomFn>,
}

impl Entry {
    pub(crate) fn constant(c: f64) -> Self {
        Self {
            coef: c,
            abs_pow: Vec::new(),
            int_pow: Vec::new(),
            custom: Vec::new(),
        }
    }

    fn abs_power(component: usize, r: f64) -> Self {
        Self {
            abs_pow: vec![(component, r)],
            ..Self::constant(1.0)
        }
    }

    fn monomial(powers: &[(usize, u32)]) -> Self {
        let mut e = Self::constant(1.0);
        for &(c, m) in powers {
            e.push_int(c, m);
        }
        e
    }

    fn custom(f: CustomFn) -> Self {
        Self {
            custom: vec![f],
            ..Self::constant(1.0)
        }
    }

    fn push_int(&mut self, c: usize, m: u32) {
        match self.int_pow.iter_mut().find(|(k, _)| *k == c) {
            Some((_, e)) => *e += m,
            None => self.int_pow.push((c, m)),
        }
    }

    fn push_abs(&mut self, c: usize, a: f64) {
        match self.abs_pow.iter_mut().find(|(k, _)| *k == c) {
            Some((_, e)) => *e += a,
            None => self.abs_pow.push((c, a)),
        }
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.coef == 0.0
    }

    pub(crate) fn times(&self, other: &Entry) -> Entry {
        let mut out = self.clone();
        out.coef *= other.coef;
        for &(c, a) in &other.abs_pow {
            out.push_abs(c, a);
        }
        for &(c, m) in &other.int_pow {
            out.push_int(c, m);
        }
        out.custom.extend(other.custom.iter().cloned());
        out
    }

    /// Components the monomial part touches, sorted.
    pub(crate) fn components(&self) -> Vec<usize> {
        let mut cs: Vec<usize> = self
            .abs_pow
            .iter()
            .map(|p| p.0)
            .chain(self.int_pow.iter().map(|p| p.0))
            .collect();
        cs.sort_unstable();
        cs.dedup();
        cs
    }

    pub(crate) fn input_dim(&self) -> usize {
        let mono = self.components().last().map_or(0, |c| c + 1);
        self.custom.iter().map(|c| c.input_dim).fold(mono, usize::max)
    }

    #[inline]
    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        if self.coef == 0.0 {
            return 0.0;
        }
        let mut v = self.coef;
        for &(c, a) in &self.abs_pow {
            v *= x[c].abs().powf(a);
        }
        for &(c, m) in &self.int_pow {
            v *= x[c].powi(m as i32);
        }
        for f in &self.custom {
            v *= f.call(x);
        }
        v
    }
}

/// Spot covolatility `sigma` together with `Sigma = sigma sigma'`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpotCov {
    sigma: DMatrix<f64>,
    cov: DMatrix<f64>,
}

impl SpotCov {
    pub fn scalar(sigma: f64) -> Self {
        Self {
            sigma: DMatrix::from_element(1, 1, sigma),
            cov: DMatrix::from_element(1, 1, sigma * sigma),
        }
    }

    pub fn from_sigma(sigma: DMatrix<f64>) -> Result<Self> {
        if sigma.nrows() == 0 || sigma.iter().any(|v| !v.is_finite()) {
            return Err(domain("sigma must be a non-empty finite matrix"));
        }
        let cov = &sigma * sigma.transpose();
        Ok(Self { sigma, cov })
    }

    /// Builds from a symmetric positive semi-definite covariance; `sigma` is
    /// the symmetric square root.
    pub fn from_covariance(cov: DMatrix<f64>) -> Result<Self> {
        let d = cov.nrows();
        if d == 0 || cov.ncols() != d {
            return Err(Error::Shape("covariance must be square and non-empty".into()));
        }
        let scale = cov.amax().max(f64::MIN_POSITIVE);
        for j in 0..d {
            for k in 0..j {
                if (cov[(j, k)] - cov[(k, j)]).abs() > 1e-12 * scale {
                    return Err(domain("covariance is not symmetric"));
                }
            }
        }
        let eig = cov.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l < -1e-12 * scale) {
            return Err(domain("covariance is not positive semi-definite"));
        }
        let root = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
        let sigma = &eig.eigenvectors * root * eig.eigenvectors.transpose();
        Ok(Self { sigma, cov })
    }

    pub fn dim(&self) -> usize {
        self.cov.nrows()
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// `sigma_j = sqrt(Sigma^{jj})`.
    pub fn sd(&self, j: usize) -> f64 {
        self.cov[(j, j)].sqrt()
    }

    /// Ratio of extreme eigenvalues of `Sigma` (infinite when singular).
    pub fn condition_number(&self) -> f64 {
        let eig = self.cov.clone().symmetric_eigenvalues();
        let max = eig.iter().cloned().fold(f64::MIN, f64::max);
        let min = eig.iter().cloned().fold(f64::MAX, f64::min);
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_constancy() {
        assert_eq!(GHFunction::One.shape(), (1, 1));
        assert_eq!(GHFunction::OuterProduct { dim: 3 }.shape(), (3, 3));
        let g = GHFunction::Diagonal(vec![GHFunction::abs_power(1.0, 0), GHFunction::One]);
        assert_eq!(g.shape(), (2, 2));
        assert!(!g.is_constant());
        assert!(GHFunction::Identity { dim: 2 }.is_constant());
        let h = GHFunction::Column(vec![GHFunction::abs_power(1.0, 1), GHFunction::SignedSquare { component: 0 }]);
        assert_eq!(h.shape(), (2, 1));
        assert_eq!(h.input_dim(), 2);
    }

    #[test]
    fn validation() {
        assert!(GHFunction::abs_power(0.0, 0).validate().is_err());
        assert!(GHFunction::abs_power(-1.0, 0).validate().is_err());
        assert!(GHFunction::Diagonal(vec![]).validate().is_err());
        assert!(GHFunction::Column(vec![GHFunction::OuterProduct { dim: 2 }]).validate().is_err());
        assert!(GHFunction::abs_power(0.5, 0).validate().is_ok());
    }

    #[test]
    fn evaluation() {
        let x = [0.5, -2.0];
        let outer = GHFunction::OuterProduct { dim: 2 }.eval(&x);
        assert_eq!(outer, DMatrix::from_row_slice(2, 2, &[0.25, -1.0, -1.0, 4.0]));
        let g = GHFunction::Diagonal(vec![GHFunction::abs_power(1.0, 1), GHFunction::One]);
        assert_eq!(g.eval(&x), DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]));
        assert_eq!(GHFunction::SignedSquare { component: 1 }.eval(&x)[(0, 0)], 4.0);
    }

    #[test]
    fn entry_products_merge_exponents() {
        let a = GHFunction::abs_power(1.0, 0).entry(0, 0);
        let b = GHFunction::SignedSquare { component: 0 }.entry(0, 0);
        let p = a.times(&b).times(&a);
        assert_eq!(p.abs_pow, vec![(0, 2.0)]);
        assert_eq!(p.int_pow, vec![(0, 2)]);
        assert_eq!(p.eval(&[-3.0]), 81.0);
    }

    #[test]
    fn custom_parity_spot_check() {
        let even = CustomFn::new("abs", 1, Parity::Even, 1.0, |x| x[0].abs());
        let lying = CustomFn::new("shifted", 1, Parity::Even, 1.0, |x| (x[0] - 1.0).abs());
        let pts: Vec<Vec<f64>> = [-2.5, -0.3, 0.0, 0.7, 4.0].iter().map(|&v| vec![v]).collect();
        assert!(even.parity_holds(&pts, 1e-14));
        assert!(!lying.parity_holds(&pts, 1e-14));
    }

    #[test]
    fn spot_cov_roundtrip() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 0.8]);
        let sc = SpotCov::from_sigma(sigma.clone()).unwrap();
        let back = SpotCov::from_covariance(sc.cov().clone()).unwrap();
        let rebuilt = back.sigma() * back.sigma().transpose();
        assert!((rebuilt - sc.cov()).amax() < 1e-12);
        assert!(SpotCov::from_covariance(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
        assert!(SpotCov::from_covariance(DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.2, 1.0])).is_err());
        assert_eq!(SpotCov::scalar(2.0).sd(0), 2.0);
    }
}
