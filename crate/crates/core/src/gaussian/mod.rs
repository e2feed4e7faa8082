//! Gaussian moment functionals and asymptotic variance constants.
//!
//! Everything here is a pure function of its arguments. Expectations of the
//! built-in test functions are evaluated in closed form; user-supplied
//! functions go through [`quadrature`].

mod clt;
mod expectation;
mod functions;
mod moments;
pub mod quadrature;

pub use clt::{clt_covariance_general, clt_variance_scalar, CovarianceArray};
pub use expectation::{expect_entry_product, rho, rho_product, rho_product_with, rho_with};
pub use functions::{CustomFn, GHFunction, Parity, SpotCov};
pub use moments::{
    abs_moment, bipower_variance_constant, multipower_long_run_constant, multipower_variance_constant,
    power_variance_constant, theta_constant,
};
pub use quadrature::QuadratureOptions;
