use proptest::prelude::*;
use rvlab::asymptotics::jump_test;
use rvlab::gaussian::{clt_covariance_general, GHFunction, SpotCov};
use rvlab::realized::{
    generalized_bipower, realized_bipower, realized_multipower, realized_variance, returns_from_path, LogPricePath,
    ReturnSeries,
};

fn returns(min: usize, max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.2f64..0.2, min..max)
}

fn power() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(2.0), 0.1f64..3.0]
}

proptest! {
    #[test]
    fn accumulation_is_monotone_in_t(v in returns(5, 80), t1 in 0.05f64..1.0, t2 in 0.05f64..1.0, r in power(), s in power()) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let ret = ReturnSeries::univariate(v).unwrap();
        prop_assert!(realized_variance(&ret, 0, lo).unwrap() <= realized_variance(&ret, 0, hi).unwrap());
        prop_assert!(realized_bipower(&ret, 0, r, s, lo).unwrap() <= realized_bipower(&ret, 0, r, s, hi).unwrap());
        let p = [r, s, 1.0];
        prop_assert!(realized_multipower(&ret, 0, &p, lo).unwrap() <= realized_multipower(&ret, 0, &p, hi).unwrap());
    }

    #[test]
    fn generalized_bipower_matches_realized_bipower(v in returns(3, 60), r in power(), s in power(), t in 0.05f64..1.0) {
        let ret = ReturnSeries::univariate(v).unwrap();
        let g = generalized_bipower(&ret, &GHFunction::abs_power(r, 0), &GHFunction::abs_power(s, 0), t).unwrap()[(0, 0)];
        let b = realized_bipower(&ret, 0, r, s, t).unwrap();
        prop_assert!((g - b).abs() <= 1e-14 * b.abs().max(1e-300) + 1e-300, "{g} vs {b}");
    }

    #[test]
    fn multipower_is_scale_equivariant(v in returns(4, 60), c in prop_oneof![Just(0.5), Just(2.0), Just(4.0)], p in prop::collection::vec(prop_oneof![Just(1.0), Just(2.0), Just(0.5)], 1..4)) {
        // powers of two keep the scaling exact in floating point
        let ret = ReturnSeries::univariate(v).unwrap();
        let total: f64 = p.iter().sum();
        let a = realized_multipower(&ret.scaled(c), 0, &p, 1.0).unwrap();
        let b = c.powf(total) * realized_multipower(&ret, 0, &p, 1.0).unwrap();
        prop_assert!((a - b).abs() <= 1e-13 * b.abs(), "{a} vs {b}");
    }

    #[test]
    fn swapping_bipower_powers_equals_reversing_the_returns(v in returns(3, 60), r in power(), s in power()) {
        let rev: Vec<f64> = v.iter().rev().copied().collect();
        let a = realized_bipower(&ReturnSeries::univariate(v).unwrap(), 0, r, s, 1.0).unwrap();
        let b = realized_bipower(&ReturnSeries::univariate(rev).unwrap(), 0, s, r, 1.0).unwrap();
        prop_assert!((a - b).abs() <= 1e-13 * a.abs(), "{a} vs {b}");
    }

    #[test]
    fn log_level_shift_leaves_statistics_unchanged(v in prop::collection::vec(-0.25f64..0.25, 12..60), k in -8i32..8) {
        // dyadic increments and shifts keep every difference exact
        let levels: Vec<f64> = v.iter().scan(0.0, |acc, x| { *acc += (x * 1024.0).round() / 1024.0; Some(*acc) }).collect();
        let n = levels.len() - 1;
        let times: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let path = LogPricePath::univariate(times, levels).unwrap();
        let shift = f64::from(k) * 0.5;
        let a = returns_from_path(&path, n).unwrap();
        let b = returns_from_path(&path.shifted(shift), n).unwrap();
        prop_assert_eq!(a.as_slice(), b.as_slice());
        if a.as_slice().iter().any(|x| *x != 0.0) {
            let ja = jump_test(&a, 0, 1.0).unwrap();
            let jb = jump_test(&b, 0, 1.0).unwrap();
            prop_assert_eq!(ja, jb);
        }
    }

    #[test]
    fn covariation_array_is_symmetric_with_nonnegative_diagonal(
        a in 0.2f64..2.0, b in 0.2f64..2.0, rho in -0.9f64..0.9
    ) {
        let cov = nalgebra::DMatrix::from_row_slice(2, 2, &[a * a, rho * a * b, rho * a * b, b * b]);
        let s = SpotCov::from_covariance(cov).unwrap();
        let arr = clt_covariance_general(&GHFunction::Identity { dim: 2 }, &GHFunction::OuterProduct { dim: 2 }, &s).unwrap();
        for j in 0..2 { for k in 0..2 { for jp in 0..2 { for kp in 0..2 {
            let x = arr.get(j, k, jp, kp);
            let y = arr.get(jp, kp, j, k);
            prop_assert!((x - y).abs() < 1e-9 * (1.0 + x.abs()));
        }}}}
        for j in 0..2 { for k in 0..2 {
            prop_assert!(arr.get(j, k, j, k) >= -1e-12);
        }}
    }
}

#[test]
fn linear_jump_statistic_is_zero_when_scaled_bipower_equals_rv() {
    // Returns (x, y, x, y, ...) of even length 2m have RV = m (x^2 + y^2) and
    // BPV = (2m - 1) |x y|, so pick y to solve mu1^{-2} (2m - 1) x y = m (x^2 + y^2).
    let mu1sq = 2.0 / std::f64::consts::PI;
    let m = 10usize;
    let k = (2 * m - 1) as f64 / (m as f64 * mu1sq);
    let x = 0.1f64;
    let y = x * (k - (k * k - 4.0).sqrt()) / 2.0;
    let v: Vec<f64> = (0..2 * m).map(|i| if i % 2 == 0 { x } else { y }).collect();
    let ret = ReturnSeries::univariate(v).unwrap();
    let jt = jump_test(&ret, 0, 1.0).unwrap();
    assert!((jt.bpv_scaled - jt.rv).abs() < 1e-15);
    assert!(jt.stat_linear.abs() < 1e-10, "{}", jt.stat_linear);
}
