use serde::Serialize;

use super::kernel::{inner_config, power_span, weight_mass, Nested};
use crate::error::{domain, Result};
use crate::hurst::HurstParams;
use crate::quadrature::{integrate_stretched, Endpoint, Estimate, QuadratureConfig};

fn check_level(n: usize, i: usize) -> Result<()> {
    if n < 2 {
        return domain(format!("past coefficients need level n >= 2, got {n}"));
    }
    if !(1..n).contains(&i) {
        return domain(format!(
            "coefficient index must lie in [1, {}], got {i}",
            n - 1
        ));
    }
    Ok(())
}

/// `sum_{i=lo+1}^{hi} j_n^H(i)` as a single integral over `x in [lo, hi]`,
/// `0 <= lo < hi <= n - 1`.
pub fn j_range(
    params: &HurstParams,
    n: usize,
    lo: usize,
    hi: usize,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    cfg.validate()?;
    if n < 2 || lo >= hi || hi > n - 1 {
        return domain(format!(
            "coefficient range needs 0 <= lo < hi <= n - 1, got lo = {lo}, hi = {hi}, n = {n}"
        ));
    }
    let alpha = params.alpha();
    let (t1, t2) = ((n - 1) as f64, n as f64);
    let (a, b) = (lo as f64, hi as f64);
    // x^-alpha at zero; psi_n(x) has a (n-1-x)^alpha kink at the last index
    let left = if lo == 0 {
        Endpoint::weight(-alpha)
    } else {
        Endpoint::Regular
    };
    let right = if hi == n - 1 {
        Endpoint::kink(alpha)
    } else {
        Endpoint::Regular
    };
    let inner = inner_config(cfg);
    let nested = Nested::new();
    let outer = integrate_stretched(
        |x: f64| x.powf(-alpha) * nested.take(power_span(alpha, x, t1, t2, &inner)),
        a,
        b,
        left,
        right,
        cfg,
    );
    let est = nested.finish(outer, weight_mass(alpha, a, b))?;
    Ok(est.scale(params.sigma() * params.kernel_constant()))
}

/// `j_n^H(i) = sigma C_H int_{i-1}^{i} x^(1/2-H) int_0^1 (v+n-1)^(H-1/2) (v+n-1-x)^(H-3/2) dv dx`.
pub fn j_coeff(
    params: &HurstParams,
    n: usize,
    i: usize,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    check_level(n, i)?;
    j_range(params, n, i - 1, i, cfg)
}

/// `g_n^H = sigma C_H int_{n-1}^{n} x^(1/2-H) int_x^n u^(H-1/2) (u-x)^(H-3/2) du dx`.
pub fn g_coeff(params: &HurstParams, n: usize, cfg: &QuadratureConfig) -> Result<Estimate> {
    cfg.validate()?;
    if n < 1 {
        return domain("current coefficient needs level n >= 1");
    }
    let alpha = params.alpha();
    let (a, b) = ((n - 1) as f64, n as f64);
    let left = if n == 1 {
        Endpoint::weight(-alpha)
    } else {
        Endpoint::Regular
    };
    let inner = inner_config(cfg);
    let nested = Nested::new();
    let outer = integrate_stretched(
        |x: f64| x.powf(-alpha) * nested.take(power_span(alpha, x, x, b, &inner)),
        a,
        b,
        left,
        Endpoint::kink(alpha),
        cfg,
    );
    let est = nested.finish(outer, weight_mass(alpha, a, b))?;
    Ok(est.scale(params.sigma() * params.kernel_constant()))
}

/// `phi_n(x) = (n - x)^alpha - (n - 1 - x)^alpha` for `x <= n - 1`, without
/// cancellation when `n - 1 - x` is large.
pub fn phi(alpha: f64, n: usize, x: f64) -> f64 {
    let d = (n - 1) as f64 - x;
    if d >= 1.0 {
        d.powf(alpha) * (alpha * (1.0 / d).ln_1p()).exp_m1()
    } else {
        (d + 1.0).powf(alpha) - d.max(0.0).powf(alpha)
    }
}

/// `I_n(i) = int_{i-1}^{i} x^(1/2-H) phi_n(x) dx`.
pub fn i_weight(
    params: &HurstParams,
    n: usize,
    i: usize,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    cfg.validate()?;
    check_level(n, i)?;
    let alpha = params.alpha();
    let left = if i == 1 {
        Endpoint::weight(-alpha)
    } else {
        Endpoint::Regular
    };
    let right = if i == n - 1 {
        Endpoint::kink(alpha)
    } else {
        Endpoint::Regular
    };
    integrate_stretched(
        |x: f64| x.powf(-alpha) * phi(alpha, n, x),
        (i - 1) as f64,
        i as f64,
        left,
        right,
        cfg,
    )
}

/// Lower and upper bracket of `j_n^H(i)`:
/// `sigma c_H (n-1)^(H-1/2) I_n(i)` and `sigma c_H n^(H-1/2) I_n(i)`.
pub fn j_bracket(params: &HurstParams, n: usize, i_n: Estimate) -> (f64, f64) {
    let alpha = params.alpha();
    let base = params.sigma() * params.c_h();
    let lo = base * ((n - 1) as f64).powf(alpha);
    let hi = base * (n as f64).powf(alpha);
    (lo * (i_n.value - i_n.error), hi * (i_n.value + i_n.error))
}

/// Lower and upper bracket of `g_n^H`: `g_H` and `g_H (1 + 1/(n-1))^(H-1/2)`;
/// the upper bound is infinite at `n = 1`.
pub fn g_bracket(params: &HurstParams, n: usize) -> (f64, f64) {
    let g = params.g_limit();
    if n <= 1 {
        return (g, f64::INFINITY);
    }
    (
        g,
        g * (params.alpha() * (1.0 / (n - 1) as f64).ln_1p()).exp(),
    )
}

/// Turning point of `I_n`: the index splitting the level into a decreasing and
/// an increasing run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TurningPoint {
    /// `x_n`.
    pub x: f64,
    /// `i_n = floor(x_n) + 1`, clamped into `[1, n - 1]`.
    pub index: usize,
}

/// `x_n = n - 1 - 1 / ((1 + 1/(n-1))^(2/(3-2H)) - 1)`.
pub fn turning_point(hurst: f64, n: usize) -> Result<TurningPoint> {
    if !(hurst > 0.5 && hurst < 1.0) {
        return domain(format!("Hurst parameter must lie in (1/2, 1), got {hurst}"));
    }
    if n < 2 {
        return domain(format!("turning point needs n >= 2, got {n}"));
    }
    let m = (n - 1) as f64;
    let growth = (2.0 / (3.0 - 2.0 * hurst) * (1.0 / m).ln_1p()).exp_m1();
    let x = m - 1.0 / growth;
    let index = if x < 0.0 {
        1
    } else {
        (x.floor() as usize + 1).clamp(1, n - 1)
    };
    Ok(TurningPoint { x, index })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn phi_forms_agree() {
        for x in [0.0, 3.5, 8.999, 9.0, 9.5] {
            let direct = (11.0f64 - x).powf(0.3) - (10.0f64 - x).powf(0.3);
            assert_relative_eq!(phi(0.3, 11, x), direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn range_is_additive() {
        let p = HurstParams::new(0.7, 1.0).unwrap();
        let cfg = QuadratureConfig::default();
        let whole = j_range(&p, 9, 0, 8, &cfg).unwrap();
        let parts: Estimate = (1..9).map(|i| j_coeff(&p, 9, i, &cfg).unwrap()).sum();
        assert!((whole.value - parts.value).abs() <= whole.error + parts.error + 1e-12);
    }

    #[test]
    fn turning_point_degenerate_level() {
        let tp = turning_point(0.7, 2).unwrap();
        assert_eq!(tp.index, 1);
        assert!(turning_point(0.7, 1).is_err());
        assert!(turning_point(1.0, 5).is_err());
    }

    #[test]
    fn rejects_bad_indices() {
        let p = HurstParams::new(0.7, 1.0).unwrap();
        let cfg = QuadratureConfig::default();
        assert!(j_coeff(&p, 1, 1, &cfg).is_err());
        assert!(j_coeff(&p, 5, 0, &cfg).is_err());
        assert!(j_coeff(&p, 5, 5, &cfg).is_err());
        assert!(g_coeff(&p, 0, &cfg).is_err());
    }
}
