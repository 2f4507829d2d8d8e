#![allow(clippy::excessive_precision)]

use fracbin::hurst::{normalizing_constant, rho, rho_sq_sum, solve_critical_hurst, Autocovariance};
use fracbin::special::riemann_zeta;
use fracbin::{Error, HurstParams};

// Reference values from tests/oracle/golden.py (30-digit mpmath).
const SUM_SQ_07: f64 = 0.464_314_919_091_897_88;
const H_C: f64 = 0.676_569_756_603_895_6;
const HURST_C: f64 = 0.853_139_513_207_791_1;

#[test]
fn derived_constants() {
    let p = HurstParams::new(0.75, 2.0).unwrap();
    assert_eq!(p.h(), 0.625);
    assert_eq!(p.alpha(), 0.25);
    assert_eq!(p.beta(), 0.75);
    assert!((p.kernel_constant() - p.c_h() * 0.25).abs() < 1e-16);
    assert!((p.g_limit() - 2.0 * p.c_h() / 1.25).abs() < 1e-15);
    for bad in [0.5, 1.0, 0.2, f64::NAN] {
        assert!(matches!(HurstParams::new(bad, 1.0), Err(Error::Domain(_))));
    }
    assert!(HurstParams::new(0.7, 0.0).is_err());
}

#[test]
fn normalizing_constant_limits() {
    assert!((normalizing_constant(0.5 + 1e-9).unwrap() - 1.0).abs() < 1e-6);
    assert!(normalizing_constant(1.0 - 1e-9).unwrap() < 1e-3);
    for i in 1..50 {
        assert!(normalizing_constant(0.5 + i as f64 / 100.0).unwrap() > 0.0);
    }
}

#[test]
fn first_lag_and_boundary() {
    for h in [0.55, 0.6, 0.7, 0.74] {
        assert!((rho(h, 1).unwrap() - (2f64.powf(2.0 * h) - 2.0) / 2.0).abs() < 1e-15);
    }
    let flat = Autocovariance::with_boundary(0.5).unwrap();
    for k in [1, 2, 10, 1000, 1_000_000] {
        assert_eq!(flat.at(k), 0.0);
    }
    assert!(rho(0.5, 3).is_err());
}

#[test]
fn large_lag_asymptotics() {
    let h: f64 = 0.7;
    let k: f64 = 1e6;
    let ratio = rho(h, 1_000_000).unwrap() / (h * (2.0 * h - 1.0) * k.powf(2.0 * h - 2.0));
    assert!((ratio - 1.0).abs() < 1e-3);
}

#[test]
fn monotone_in_h_and_above_lower_bound() {
    let hs: Vec<f64> = (0..22).map(|i| 0.505 + 0.24 * i as f64 / 21.0).collect();
    let acovs: Vec<_> = hs
        .iter()
        .map(|&h| Autocovariance::new(h).unwrap())
        .collect();
    for k in 1..=10_000u64 {
        let vals: Vec<f64> = acovs.iter().map(|a| a.at(k)).collect();
        for w in vals.windows(2) {
            assert!(w[0] < w[1], "k = {k}");
        }
        for (&h, &v) in hs.iter().zip(&vals) {
            let lower = h * (2.0 * h - 1.0) / (2.0 * (k as f64).powf(2.0 - 2.0 * h));
            assert!(v >= lower, "h = {h}, k = {k}");
        }
    }
}

#[test]
fn squared_sum_golden_and_sandwich() {
    let s = rho_sq_sum(0.7, 1e-10).unwrap();
    let (lo, hi) = s.total_bracket();
    assert!(lo <= SUM_SQ_07 && SUM_SQ_07 <= hi);
    assert!((s.total() - SUM_SQ_07).abs() <= 1e-10);
    assert!(s.tail.upper <= s.tail_bound);
    assert!(s.partial_sum_sq <= s.partial_sum_sq + s.tail_bound);
    let coarse = rho_sq_sum(0.7, 1e-4).unwrap();
    assert!(coarse.k <= s.k && coarse.partial_sum_sq <= s.partial_sum_sq);
    assert!(coarse.tail_bound >= s.tail_bound);
}

#[test]
fn squared_sum_lower_bound_and_small_h() {
    for h in [0.55, 0.6, 0.65, 0.7, 0.74] {
        let s = rho_sq_sum(h, 1e-8).unwrap();
        let bound = h * h * (2.0 * h - 1.0).powi(2) * riemann_zeta(4.0 - 4.0 * h).unwrap() / 4.0;
        assert!(s.partial_sum_sq + s.tail_bound >= bound, "h = {h}");
    }
    let tiny = Autocovariance::new(0.5001).unwrap();
    let near: f64 = (1..=1000).map(|k| tiny.at(k).powi(2)).sum();
    assert!(near < 1e-6);
}

#[test]
fn plain_sum_diverges() {
    for h in [0.55, 0.7] {
        let a = Autocovariance::new(h).unwrap();
        let mut sum = 0.0;
        let mut k = 0u64;
        for cut in [1_000u64, 10_000, 100_000, 1_000_000] {
            while k < cut {
                k += 1;
                sum += a.at(k);
            }
            // sum_{k<=K} rho_h(k) = ((K+1)^{2h} - K^{2h} - 1) / 2 grows like h K^{2h-1}
            let shape = h * (cut as f64).powf(2.0 * h - 1.0);
            assert!(sum >= 0.5 * shape - 1.0, "h = {h}, K = {cut}");
        }
        assert!(sum > if h > 0.6 { 50.0 } else { 1.0 });
    }
}

#[test]
fn critical_parameter_golden() {
    let c = solve_critical_hurst(1e-8).unwrap();
    assert!(c.h_c > 0.5 && c.h_c < 0.75);
    assert!(c.hurst_c > 0.5 && c.hurst_c < 1.0);
    assert_eq!(c.hurst_c, 2.0 * c.h_c - 0.5);
    assert!(c.residual <= 1e-8 + c.sum.tail_bound);
    assert!((c.h_c - H_C).abs() < 5e-7);
    assert!((c.hurst_c - HURST_C).abs() < 1e-6);
}

#[test]
fn solver_rejects_bad_tolerance() {
    assert!(solve_critical_hurst(0.0).is_err());
    assert!(rho_sq_sum(0.7, -1.0).is_err());
}
