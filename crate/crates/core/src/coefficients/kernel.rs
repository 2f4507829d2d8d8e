use std::cell::{Cell, RefCell};

use crate::error::{domain, Error, Result};
use crate::hurst::HurstParams;
use crate::quadrature::{integrate, integrate_stretched, Endpoint, Estimate, QuadratureConfig};

/// Tolerances for integrals nested inside another integrand.
pub(crate) fn inner_config(cfg: &QuadratureConfig) -> QuadratureConfig {
    QuadratureConfig {
        abs_tol: (cfg.abs_tol * 1e-3).max(1e-16),
        rel_tol: (cfg.rel_tol * 1e-3).max(1e-13),
        max_subdivisions: cfg.max_subdivisions,
    }
}

/// `int_{t1}^{t2} u^alpha (u - s)^(alpha - 1) du` for `0 <= s <= t1 < t2`.
///
/// Far from the singularity at `u = s` the integrand is analytic on the
/// interval and is integrated as is. Otherwise `w = (u - s)^alpha` turns it
/// into `(1/alpha) int (s + w^(1/alpha))^alpha dw`, which is bounded.
pub(crate) fn power_span(
    alpha: f64,
    s: f64,
    t1: f64,
    t2: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let gap = t1 - s;
    let len = t2 - t1;
    if gap >= len {
        return integrate(
            |u: f64| u.powf(alpha) * (u - s).powf(alpha - 1.0),
            t1,
            t2,
            cfg,
        );
    }
    let lo = if gap > 0.0 { gap.powf(alpha) } else { 0.0 };
    let hi = (t2 - s).powf(alpha);
    let inv = 1.0 / alpha;
    let scaled = cfg.scaled(alpha);
    integrate(|w: f64| (s + w.powf(inv)).powf(alpha), lo, hi, &scaled).map(|e| e.scale(inv))
}

/// Outer integral whose integrand is itself an integral: records the largest
/// inner error and the first inner failure.
pub(crate) struct Nested {
    max_error: Cell<f64>,
    failure: RefCell<Option<Error>>,
}

impl Nested {
    pub(crate) fn new() -> Self {
        Self {
            max_error: Cell::new(0.0),
            failure: RefCell::new(None),
        }
    }

    pub(crate) fn take(&self, inner: Result<Estimate>) -> f64 {
        match inner {
            Ok(e) => {
                if e.error > self.max_error.get() {
                    self.max_error.set(e.error);
                }
                e.value
            }
            Err(err) => {
                self.failure.borrow_mut().get_or_insert(err);
                0.0
            }
        }
    }

    /// Combine with the outer result; `weight_mass` bounds the integral of the
    /// absolute outer weight that multiplies the inner values.
    pub(crate) fn finish(self, outer: Result<Estimate>, weight_mass: f64) -> Result<Estimate> {
        if let Some(err) = self.failure.into_inner() {
            return Err(err);
        }
        let outer = outer?;
        Ok(Estimate::new(
            outer.value,
            outer.error + self.max_error.get() * weight_mass,
        ))
    }
}

/// `int_a^b x^-alpha dx`.
pub(crate) fn weight_mass(alpha: f64, a: f64, b: f64) -> f64 {
    (b.powf(1.0 - alpha) - a.powf(1.0 - alpha)) / (1.0 - alpha)
}

/// `k_H(t, s) = C_H s^(1/2-H) int_s^t u^(H-1/2) (u-s)^(H-3/2) du` for `0 < s < t`.
pub fn kernel(params: &HurstParams, t: f64, s: f64, cfg: &QuadratureConfig) -> Result<Estimate> {
    cfg.validate()?;
    if !(s > 0.0 && s.is_finite()) {
        return domain(format!("kernel needs s > 0, got {s}"));
    }
    if !(t > s && t.is_finite()) {
        return domain(format!("kernel needs t > s, got t = {t}, s = {s}"));
    }
    let alpha = params.alpha();
    let factor = params.kernel_constant() * s.powf(-alpha);
    Ok(power_span(alpha, s, s, t, cfg)?.scale(factor))
}

/// `J_n^(N,H)(i) = sigma sqrt(N) int_{(i-1)/N}^{i/N} (k_H(n/N, u) - k_H((n-1)/N, u)) du`,
/// integrated directly on the `N`-grid. The kernel difference is taken as one
/// integral over `[(n-1)/N, n/N]` so no cancellation occurs.
pub fn j_unscaled(
    params: &HurstParams,
    big_n: usize,
    n: usize,
    i: usize,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    cfg.validate()?;
    if !(1 <= i && i < n && n <= big_n) {
        return domain(format!(
            "unscaled coefficient needs 1 <= i < n <= N, got i = {i}, n = {n}, N = {big_n}"
        ));
    }
    let alpha = params.alpha();
    let nf = big_n as f64;
    let (t1, t2) = ((n - 1) as f64 / nf, n as f64 / nf);
    let (a, b) = ((i - 1) as f64 / nf, i as f64 / nf);
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
    let inner = inner_config(cfg);
    let nested = Nested::new();
    let outer = integrate_stretched(
        |u: f64| u.powf(-alpha) * nested.take(power_span(alpha, u, t1, t2, &inner)),
        a,
        b,
        left,
        right,
        &cfg.scaled(1.0 / nf.sqrt()),
    );
    let est = nested.finish(outer, weight_mass(alpha, a, b))?;
    Ok(est.scale(params.sigma() * nf.sqrt() * params.kernel_constant()))
}

/// `g_n^(N,H) = sigma sqrt(N) int_{(n-1)/N}^{n/N} k_H(n/N, u) du`, integrated directly.
pub fn g_unscaled(
    params: &HurstParams,
    big_n: usize,
    n: usize,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    cfg.validate()?;
    if !(1 <= n && n <= big_n) {
        return domain(format!(
            "unscaled coefficient needs 1 <= n <= N, got n = {n}, N = {big_n}"
        ));
    }
    let alpha = params.alpha();
    let nf = big_n as f64;
    let (a, b) = ((n - 1) as f64 / nf, n as f64 / nf);
    let left = if n == 1 {
        Endpoint::weight(-alpha)
    } else {
        Endpoint::Regular
    };
    let inner = inner_config(cfg);
    let nested = Nested::new();
    let outer = integrate_stretched(
        |u: f64| u.powf(-alpha) * nested.take(power_span(alpha, u, u, b, &inner)),
        a,
        b,
        left,
        Endpoint::kink(alpha),
        &cfg.scaled(1.0 / nf.sqrt()),
    );
    let est = nested.finish(outer, weight_mass(alpha, a, b))?;
    Ok(est.scale(params.sigma() * nf.sqrt() * params.kernel_constant()))
}
