use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::special::{hurwitz_zeta, Neumaier};

/// Default cap on the truncation index of autocovariance sums.
pub const DEFAULT_K_CAP: u64 = 100_000_000;

/// Autocovariance `rho_h(k) = ((k+1)^{2h} + (k-1)^{2h} - 2 k^{2h}) / 2` of
/// fractional Gaussian noise with Hurst index `h`.
///
/// For `k >= 2` the value is evaluated from the binomial expansion
/// `rho_h(k) = k^{2h} sum_{m>=1} C(2h, 2m) k^{-2m}`, whose terms are all
/// non-negative for `1 <= 2h <= 2`, so no cancellation occurs at any lag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Autocovariance {
    h: f64,
    two_h: f64,
}

impl Autocovariance {
    /// `h` must lie in the open interval `(1/2, 3/4)`.
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.5 && h < 0.75) {
            return domain(format!(
                "autocovariance index h must lie in (1/2, 3/4), got {h}"
            ));
        }
        Ok(Self { h, two_h: 2.0 * h })
    }

    /// Like [`Autocovariance::new`] but admits the closed interval `[1/2, 3/4]`.
    pub fn with_boundary(h: f64) -> Result<Self> {
        if !(0.5..=0.75).contains(&h) {
            return domain(format!(
                "autocovariance index h must lie in [1/2, 3/4], got {h}"
            ));
        }
        Ok(Self { h, two_h: 2.0 * h })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Decay exponent `beta = 2 - 2h`.
    pub fn beta(&self) -> f64 {
        2.0 - self.two_h
    }

    /// Leading asymptotic coefficient `h (2h - 1)`.
    pub fn leading(&self) -> f64 {
        self.h * (self.two_h - 1.0)
    }

    /// Second expansion coefficient `C(2h, 4)`.
    fn second(&self) -> f64 {
        let a = self.two_h;
        a * (a - 1.0) * (a - 2.0) * (a - 3.0) / 24.0
    }

    /// `rho_h(k)` for `k >= 1`.
    pub fn at(&self, k: u64) -> f64 {
        assert!(k >= 1, "autocovariance lag must be at least 1");
        if k == 1 {
            // 2^{2h-1} - 1
            return ((self.two_h - 1.0) * std::f64::consts::LN_2).exp_m1();
        }
        let kf = k as f64;
        self.envelope(k) * kf.powf(-self.beta())
    }

    /// `rho_h(k) k^beta = sum_{m>=1} C(2h, 2m) k^{2-2m}`, non-increasing in `k`
    /// and tending to [`Autocovariance::leading`].
    pub fn envelope(&self, k: u64) -> f64 {
        assert!(k >= 1, "autocovariance lag must be at least 1");
        if k == 1 {
            return self.at(1);
        }
        let a = self.two_h;
        let inv_k2 = 1.0 / (k as f64 * k as f64);
        let mut binom = 1.0;
        let mut power = 1.0;
        let mut sum = 0.0;
        for m in 1..200 {
            let mf = m as f64;
            binom *= (a - 2.0 * mf + 2.0) * (a - 2.0 * mf + 1.0) / ((2.0 * mf - 1.0) * (2.0 * mf));
            let term = binom * power;
            sum += term;
            if term <= 1e-17 * sum {
                break;
            }
            power *= inv_k2;
        }
        sum
    }

    /// Certified bracket for `sum_{k > cut} rho_h(k)^p`, `p >= 2`, `cut >= 1`.
    ///
    /// Writes `rho_h(k) = k^-beta (c1 + r(k))` with
    /// `c2 k^-2 <= r(k) <= R k^-2` for `k > cut`, where `R` is read off the
    /// envelope at `cut + 1`, and sums each binomial term with Hurwitz zeta.
    pub fn power_tail(&self, p: u32, cut: u64) -> Result<TailBracket> {
        if p < 2 {
            return domain("power tail needs p >= 2 for convergence");
        }
        if cut < 1 {
            return domain("power tail needs a cut of at least 1");
        }
        let c1 = self.leading();
        let c2 = self.second();
        let first = cut + 1;
        let ff = first as f64;
        let big_r = (self.envelope(first) - c1) * ff * ff;
        let beta = self.beta();
        let mut lower = 0.0;
        let mut upper = 0.0;
        let mut slack = 0.0;
        let mut binom = 1.0;
        for j in 0..=p {
            if j > 0 {
                binom *= (p - j + 1) as f64 / j as f64;
            }
            let z = hurwitz_zeta(p as f64 * beta + 2.0 * j as f64, ff)?;
            let lo_coef = binom * c1.powi((p - j) as i32) * c2.powi(j as i32);
            let hi_coef = binom * c1.powi((p - j) as i32) * big_r.max(c2).powi(j as i32);
            lower += lo_coef * z.value;
            upper += hi_coef * z.value;
            slack += hi_coef * z.error;
        }
        let lower = (lower - slack) * (1.0 - 8.0 * f64::EPSILON);
        let upper = (upper + slack) * (1.0 + 8.0 * f64::EPSILON);
        Ok(TailBracket {
            lower: lower.max(0.0),
            upper,
        })
    }

    /// Envelope bound on `sum_{k > cut} rho_h(k)^2`:
    /// `b^2 cut^{1-2 beta} / (2 beta - 1)` with `b = sup_{k > cut} rho_h(k) k^beta`.
    pub fn envelope_tail_sq(&self, cut: u64) -> f64 {
        let b = self.envelope(cut + 1);
        let beta = self.beta();
        b * b * (cut as f64).powf(1.0 - 2.0 * beta) / (2.0 * beta - 1.0)
    }
}

/// Closed interval known to contain a tail sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBracket {
    pub lower: f64,
    pub upper: f64,
}

impl TailBracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `rho_h(k)` with the domain check of [`Autocovariance::new`].
pub fn rho(h: f64, k: u64) -> Result<f64> {
    if k < 1 {
        return domain("autocovariance lag must be at least 1");
    }
    Ok(Autocovariance::new(h)?.at(k))
}

/// Truncated sum of squared autocovariances with certified tail information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoTailSum {
    pub h: f64,
    /// Truncation index `K`.
    pub k: u64,
    /// `sum_{k <= K} rho_h(k)^2`.
    pub partial_sum_sq: f64,
    /// Envelope upper bound on `sum_{k > K} rho_h(k)^2`.
    pub tail_bound: f64,
    /// Certified bracket for `sum_{k > K} rho_h(k)^2`.
    pub tail: TailBracket,
}

impl RhoTailSum {
    /// Best estimate of the full series `sum_{k >= 1} rho_h(k)^2`.
    pub fn total(&self) -> f64 {
        self.partial_sum_sq + self.tail.midpoint()
    }

    /// Half-width of the certified interval around [`RhoTailSum::total`].
    pub fn total_error(&self) -> f64 {
        0.5 * self.tail.width() + 4.0 * self.k as f64 * f64::EPSILON * self.partial_sum_sq
    }

    /// Certified interval for the full series.
    pub fn total_bracket(&self) -> (f64, f64) {
        let e = self.total_error();
        (self.total() - e, self.total() + e)
    }

    /// Evaluate at a fixed truncation index.
    pub fn at_cut(acov: &Autocovariance, k: u64) -> Result<Self> {
        let partial: Neumaier = (1..=k).map(|i| acov.at(i).powi(2)).collect();
        Self::from_parts(acov, k, partial.total())
    }

    fn from_parts(acov: &Autocovariance, k: u64, partial: f64) -> Result<Self> {
        Ok(Self {
            h: acov.h(),
            k,
            partial_sum_sq: partial,
            tail_bound: acov.envelope_tail_sq(k),
            tail: acov.power_tail(2, k)?,
        })
    }
}

/// `sum_k rho_h(k)^2` truncated at the smallest power-of-two `K >= 64` whose
/// certified uncertainty on the full series is at most `target`.
pub fn rho_sq_sum(h: f64, target: f64) -> Result<RhoTailSum> {
    rho_sq_sum_with_cap(h, target, DEFAULT_K_CAP)
}

pub fn rho_sq_sum_with_cap(h: f64, target: f64, cap: u64) -> Result<RhoTailSum> {
    if !(target > 0.0) {
        return domain(format!("target tail must be positive, got {target}"));
    }
    let acov = Autocovariance::new(h)?;
    let mut partial = Neumaier::default();
    let mut done = 0u64;
    let mut k = 64u64.min(cap.max(1));
    loop {
        for i in done + 1..=k {
            partial.add(acov.at(i).powi(2));
        }
        done = k;
        let sum = RhoTailSum::from_parts(&acov, k, partial.total())?;
        let achieved = 2.0 * sum.total_error();
        if achieved <= target {
            return Ok(sum);
        }
        if k >= cap {
            return Err(Error::Infeasible {
                target,
                achieved,
                cap,
            });
        }
        k = (k * 2).min(cap);
    }
}
