use serde::Serialize;

use super::rho::{Autocovariance, RhoTailSum};
use crate::error::{domain, Error, Result};

/// Stop width of the bisection in `h`.
pub const BISECTION_WIDTH: f64 = 1e-10;

/// Truncation index used when evaluating `sum rho_h^2` inside the bisection.
const CUT: u64 = 4096;

/// Critical index `h_c` with `sum_k rho_{h_c}(k)^2 = 1/4`, and `H_c = 2 h_c - 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalHurst {
    pub h_c: f64,
    pub hurst_c: f64,
    /// `|sum rho_{h_c}^2 - 1/4|` at the returned root.
    pub residual: f64,
    /// The series evaluation at the root.
    pub sum: RhoTailSum,
    pub iterations: u32,
}

fn excess(h: f64) -> Result<(f64, RhoTailSum)> {
    let acov = Autocovariance::new(h)?;
    let sum = RhoTailSum::at_cut(&acov, CUT)?;
    Ok((sum.total() - 0.25, sum))
}

/// Bisection for `h_c`. Each `rho_h(k)` is increasing in `h`, so the series is
/// strictly increasing and the root is unique.
pub fn solve_critical_hurst(tol: f64) -> Result<CriticalHurst> {
    if !(tol > 0.0) {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    let mut lo = 0.51;
    let mut hi = 0.74;
    let (f_lo, _) = excess(lo)?;
    let (f_hi, _) = excess(hi)?;
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return Err(Error::Bracket { lo, hi });
    }
    let mut iterations = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        let (f_mid, sum) = excess(mid)?;
        iterations += 1;
        if (hi - lo <= BISECTION_WIDTH && f_mid.abs() <= tol) || f_mid == 0.0 || iterations >= 200 {
            return Ok(CriticalHurst {
                h_c: mid,
                hurst_c: 2.0 * mid - 0.5,
                residual: f_mid.abs(),
                sum,
                iterations,
            });
        }
        if f_mid < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_is_inside_range() {
        let c = solve_critical_hurst(1e-8).unwrap();
        assert!(c.h_c > 0.5 && c.h_c < 0.75);
        assert!(c.hurst_c > 0.5 && c.hurst_c < 1.0);
        assert!(c.residual <= 1e-8);
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        assert!(solve_critical_hurst(0.0).is_err());
    }
}
