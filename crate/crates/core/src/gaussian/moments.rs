use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};

/// `E|u|^r` for a standard normal `u`, defined for `r > -1`.
///
/// Integer orders use the exact recursions (`(2k-1)!!` for even orders,
/// `2^k k! sqrt(2/pi)` for odd ones); everything else goes through
/// `2^{r/2} Gamma((r+1)/2) / Gamma(1/2)` evaluated in log space.
pub fn abs_moment(r: f64) -> Result<f64> {
    if !r.is_finite() || r <= -1.0 {
        return Err(domain(format!("absolute moment needs r > -1, got {r}")));
    }
    if r >= 0.0 && r.fract() == 0.0 && r <= 170.0 {
        let k = r as u32;
        return Ok(if k.is_multiple_of(2) {
            (1..k).step_by(2).map(f64::from).product()
        } else {
            let half = (k - 1) / 2;
            let fact: f64 = (1..=half).map(f64::from).product();
            2f64.powi(half as i32) * fact * (2.0 / PI).sqrt()
        });
    }
    let log = 0.5 * r * 2f64.ln() + ln_gamma(0.5 * (r + 1.0)) - 0.5 * PI.ln();
    Ok(log.exp())
}

/// `pi^2/4 + pi - 5`, the constant in the bipower CLT variance.
pub fn theta_constant() -> f64 {
    PI * PI / 4.0 + PI - 5.0
}

/// `Var(|u|^r) = mu_{2r} - mu_r^2`.
pub fn power_variance_constant(r: f64) -> Result<f64> {
    check_positive("r", r)?;
    let m = abs_moment(r)?;
    Ok(abs_moment(2.0 * r)? - m * m)
}

/// Asymptotic variance constant of bipower variation with powers `(r, s)`:
/// `mu_{2r} mu_{2s} + 2 mu_{r+s} mu_r mu_s - 3 mu_r^2 mu_s^2`.
pub fn bipower_variance_constant(r: f64, s: f64) -> Result<f64> {
    check_positive("r", r)?;
    check_positive("s", s)?;
    let (mr, ms) = (abs_moment(r)?, abs_moment(s)?);
    Ok(abs_moment(2.0 * r)? * abs_moment(2.0 * s)? + 2.0 * abs_moment(r + s)? * mr * ms
        - 3.0 * mr * mr * ms * ms)
}

/// Long-run variance constant of equal-power multipower variation with `I`
/// factors of `|u|^{2/I}`.
///
/// Two windows at lag `j < I` share `I - j` factors, each contributing
/// `mu_{4/I}`, while the `2j` unshared factors contribute `mu_{2/I}` each.
pub fn multipower_variance_constant(terms: usize) -> Result<f64> {
    if terms < 1 {
        return Err(domain("multipower variance needs at least one factor"));
    }
    let p = 2.0 / terms as f64;
    let m1 = abs_moment(p)?;
    let m2 = abs_moment(2.0 * p)?;
    let i = terms as i32;
    let base = m1.powi(2 * i);
    let mut total = m2.powi(i) - base;
    for lag in 1..i {
        total += 2.0 * (m2.powi(i - lag) * m1.powi(2 * lag) - base);
    }
    Ok(total)
}

/// Long-run variance constant of multipower variation with arbitrary
/// powers `p_1..p_I`: `Var(P_0) + 2 sum_{j<I} Cov(P_0, P_j)` where
/// `P_i = prod_k |u_{i+k}|^{p_k}` over i.i.d. standard normals.
///
/// Multiplying by `int sigma^{2 (p_1+...+p_I)}` gives the asymptotic
/// variance of the unscaled multipower statistic.
pub fn multipower_long_run_constant(powers: &[f64]) -> Result<f64> {
    if powers.is_empty() {
        return Err(domain("multipower needs at least one power"));
    }
    for &p in powers {
        check_positive("power", p)?;
    }
    let width = powers.len();
    let mut mean = 1.0;
    for &p in powers {
        mean *= abs_moment(p)?;
    }
    let mut total = 0.0;
    for lag in 0..width {
        let mut cross = 1.0;
        for pos in 0..width + lag {
            let mut order = 0.0;
            if pos < width {
                order += powers[pos];
            }
            if pos >= lag && pos - lag < width {
                order += powers[pos - lag];
            }
            cross *= abs_moment(order)?;
        }
        let cov = cross - mean * mean;
        total += if lag == 0 { cov } else { 2.0 * cov };
    }
    Ok(total)
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} must be positive, got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_moments() {
        assert!((abs_moment(1.0).unwrap() - 0.797_884_560_802_865).abs() < 1e-15);
        assert_eq!(abs_moment(2.0).unwrap(), 1.0);
        assert_eq!(abs_moment(4.0).unwrap(), 3.0);
        assert_eq!(abs_moment(0.0).unwrap(), 1.0);
        let mu3 = abs_moment(3.0).unwrap();
        assert!((mu3 - 2.0 * (2.0 / PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn even_orders_are_double_factorials() {
        for (k, df) in [(1, 1.0), (2, 3.0), (3, 15.0), (4, 105.0)] {
            assert_eq!(abs_moment(2.0 * k as f64).unwrap(), df);
        }
    }

    #[test]
    fn gamma_route_agrees_with_integer_route_nearby() {
        // continuity across the integer special case
        for r in [1.0f64, 2.0, 3.0, 4.0] {
            let exact = abs_moment(r).unwrap();
            let near = abs_moment(r + 1e-9).unwrap();
            assert!((exact - near).abs() < 1e-8 * exact.max(1.0));
        }
        // recursion mu_{r+2} = (r+1) mu_r holds for fractional orders
        for r in [-0.5, 0.3, 2.0 / 3.0, 4.0 / 3.0, 1.7] {
            let lhs = abs_moment(r + 2.0).unwrap();
            let rhs = (r + 1.0) * abs_moment(r).unwrap();
            assert!((lhs - rhs).abs() < 1e-13 * lhs, "r={r}");
        }
    }

    #[test]
    fn rejects_non_integrable_orders() {
        assert!(abs_moment(-1.0).is_err());
        assert!(abs_moment(-2.5).is_err());
        assert!(abs_moment(f64::NAN).is_err());
    }

    #[test]
    fn theta_value_and_identity() {
        let theta = theta_constant();
        assert!((theta - 0.608_993_753_862_132_6).abs() < 1e-15);
        assert!(theta > 0.0);
        let mu1 = abs_moment(1.0).unwrap();
        let lhs = mu1.powi(4) * (2.0 + theta);
        let rhs = 1.0 + 2.0 * mu1 * mu1 - 3.0 * mu1.powi(4);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn power_variance_values() {
        assert_eq!(power_variance_constant(2.0).unwrap(), 2.0);
        assert!((power_variance_constant(1.0).unwrap() - (1.0 - 2.0 / PI)).abs() < 1e-15);
        for r in [0.1, 0.5, 1.0, 4.0 / 3.0, 3.0] {
            assert!(power_variance_constant(r).unwrap() > 0.0);
        }
        assert!(power_variance_constant(0.0).is_err());
    }

    #[test]
    fn bipower_constant_values() {
        let c = bipower_variance_constant(1.0, 1.0).unwrap();
        assert!((c - 1.057_40).abs() < 2e-5);
        let mu1 = abs_moment(1.0).unwrap();
        assert!((c - mu1.powi(4) * (2.0 + theta_constant())).abs() < 1e-12);
        for (r, s) in [(0.5, 1.5), (1.0, 2.0), (4.0 / 3.0, 2.0 / 3.0)] {
            let a = bipower_variance_constant(r, s).unwrap();
            let b = bipower_variance_constant(s, r).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn multipower_constants_match_expansions() {
        assert_eq!(multipower_variance_constant(1).unwrap(), 2.0);
        let mu1 = abs_moment(1.0).unwrap();
        let two = multipower_variance_constant(2).unwrap();
        assert!((two - (1.0 + 2.0 * mu1 * mu1 - 3.0 * mu1.powi(4))).abs() < 1e-12);
        assert!((two - bipower_variance_constant(1.0, 1.0).unwrap()).abs() < 1e-12);

        let a = abs_moment(4.0 / 3.0).unwrap();
        let b = abs_moment(2.0 / 3.0).unwrap();
        let three = (a.powi(3) - b.powi(6))
            + 2.0 * (a * a * b * b - b.powi(6))
            + 2.0 * (a * b.powi(4) - b.powi(6));
        assert!((multipower_variance_constant(3).unwrap() - three).abs() < 1e-12);
        assert!(multipower_variance_constant(0).is_err());
    }

    #[test]
    fn long_run_constant_generalizes_the_named_ones() {
        for i in 1..=6 {
            let p = 2.0 / i as f64;
            let a = multipower_long_run_constant(&vec![p; i]).unwrap();
            let b = multipower_variance_constant(i).unwrap();
            assert!((a - b).abs() < 1e-12, "I={i}");
        }
        for (r, s) in [(1.0, 1.0), (0.5, 1.5), (2.0, 1.0)] {
            let a = multipower_long_run_constant(&[r, s]).unwrap();
            assert!((a - bipower_variance_constant(r, s).unwrap()).abs() < 1e-12);
        }
        for r in [0.5, 1.0, 2.0] {
            let a = multipower_long_run_constant(&[r]).unwrap();
            assert!((a - power_variance_constant(r).unwrap()).abs() < 1e-12);
        }
        assert!(multipower_long_run_constant(&[]).is_err());
    }
}
