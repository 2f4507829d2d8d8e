use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::hurst::HurstParams;
use crate::special::Neumaier;

/// Default cap on the number of explicit factors.
pub const DEFAULT_CF_CAP: u64 = 1 << 26;

/// Characteristic function value with its certified error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CfValue {
    pub v: f64,
    pub value: f64,
    /// `ln |F_H(v)|`, finite even where `value` underflows.
    pub log_abs: f64,
    /// Bound on `|F_H(v) - value|`.
    pub error: f64,
    /// Certified interval for `ln |F_H(v)|` (when the head product is nonzero).
    pub log_bracket: [f64; 2],
    /// Number of explicit factors.
    #[serde(rename = "K")]
    pub k: u64,
}

enum Stop {
    Absolute(f64),
    Log(f64),
}

/// `F_H(v) = prod_{k>=1} cos(2 v g_H rho_h(k))` with `|error| <= tol`.
///
/// Beyond `K`, with every `x_k = 2 v g_H rho_h(k) <= 1`,
/// `-x^2/2 - x^4/12 - x^6/25 <= ln cos x <= -x^2/2 - x^4/12`, and the
/// power sums of `rho_h` over `k > K` are bracketed, which bounds the tail
/// of the product from both sides.
pub fn characteristic_function(params: &HurstParams, v: f64, tol: f64) -> Result<CfValue> {
    if !(tol > 0.0) {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    evaluate(params, v, Stop::Absolute(tol), DEFAULT_CF_CAP)
}

/// As [`characteristic_function`], stopping once the bracket on
/// `ln |F_H(v)|` is narrower than `log_tol`.
pub fn log_characteristic_function(params: &HurstParams, v: f64, log_tol: f64) -> Result<CfValue> {
    if !(log_tol > 0.0) {
        return domain(format!("tolerance must be positive, got {log_tol}"));
    }
    evaluate(params, v, Stop::Log(log_tol), DEFAULT_CF_CAP)
}

fn evaluate(params: &HurstParams, v: f64, stop: Stop, cap: u64) -> Result<CfValue> {
    if !v.is_finite() {
        return domain(format!("argument must be finite, got {v}"));
    }
    if v == 0.0 {
        return Ok(CfValue {
            v,
            value: 1.0,
            log_abs: 0.0,
            error: 0.0,
            log_bracket: [0.0, 0.0],
            k: 0,
        });
    }
    let acov = params.autocovariance();
    let u = 2.0 * params.g_limit() * v.abs();
    let mut log_sum = Neumaier::default();
    let mut negative = false;
    let mut done = 0u64;
    let mut k = 64u64;
    loop {
        for i in done + 1..=k {
            let c = (u * acov.at(i)).cos();
            if c == 0.0 {
                return Ok(CfValue {
                    v,
                    value: 0.0,
                    log_abs: f64::NEG_INFINITY,
                    error: 0.0,
                    log_bracket: [f64::NEG_INFINITY, f64::NEG_INFINITY],
                    k: i,
                });
            }
            negative ^= c < 0.0;
            log_sum.add(c.abs().ln());
        }
        done = k;
        if u * acov.at(k + 1) <= 1.0 {
            let s2 = acov.power_tail(2, k)?;
            let s4 = acov.power_tail(4, k)?;
            let s6 = acov.power_tail(6, k)?;
            let (u2, u4, u6) = (u * u, u.powi(4), u.powi(6));
            let head = log_sum.total();
            let rounding = 4.0 * k as f64 * f64::EPSILON * (1.0 + head.abs());
            let hi = head - u2 / 2.0 * s2.lower - u4 / 12.0 * s4.lower + rounding;
            let lo =
                head - u2 / 2.0 * s2.upper - u4 / 12.0 * s4.upper - u6 / 25.0 * s6.upper - rounding;
            let sign = if negative { -1.0 } else { 1.0 };
            // midpoint of [e^lo, e^hi] in log form
            let log_abs = hi + ((1.0 + (lo - hi).exp()) / 2.0).ln();
            let value = sign * log_abs.exp();
            let error = (hi.exp() - lo.exp()) / 2.0;
            let met = match stop {
                Stop::Absolute(tol) => error <= tol,
                Stop::Log(tol) => hi - lo <= tol,
            };
            if met {
                return Ok(CfValue {
                    v,
                    value,
                    log_abs,
                    error,
                    log_bracket: [lo, hi],
                    k,
                });
            }
            if k >= cap {
                return Err(Error::Infeasible {
                    target: match stop {
                        Stop::Absolute(t) | Stop::Log(t) => t,
                    },
                    achieved: match stop {
                        Stop::Absolute(_) => error,
                        Stop::Log(_) => hi - lo,
                    },
                    cap,
                });
            }
        } else if k >= cap {
            return Err(Error::Infeasible {
                target: 1.0,
                achieved: u * acov.at(k + 1),
                cap,
            });
        }
        k = (2 * k).min(cap);
    }
}

/// Least-squares fit of `ln(-ln |F_H(v)|) = ln(theta) + e ln(v)` on
/// log-spaced points of `[v0, 10 v0]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub v0: f64,
    pub exponent: f64,
    pub theta: f64,
    /// `1 / beta = 1 / (2 - 2h)`.
    pub expected_exponent: f64,
    pub relative_error: f64,
    /// `(v, ln |F_H(v)|)` at the fitted points.
    pub points: Vec<(f64, f64)>,
}

/// Start of the default fit window, where `2 g_H v0 = 10`.
pub fn default_decay_start(params: &HurstParams) -> f64 {
    10.0 / (2.0 * params.g_limit())
}

pub fn fit_decay(params: &HurstParams, v0: f64, points: usize) -> Result<DecayFit> {
    if !(v0 > 0.0 && v0.is_finite()) {
        return domain(format!("fit start must be positive, got {v0}"));
    }
    if points < 3 {
        return domain("decay fit needs at least 3 points");
    }
    let mut pts = Vec::with_capacity(points);
    for p in 0..points {
        let v = v0 * 10f64.powf(p as f64 / (points - 1) as f64);
        let f = log_characteristic_function(params, v, 1e-6)?;
        if !(f.log_abs < 0.0) {
            return domain(format!(
                "|F_H({v})| is not below 1; the fit window starts too early"
            ));
        }
        pts.push((v, f.log_abs));
    }
    let xs: Vec<f64> = pts.iter().map(|(v, _)| v.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, l)| (-l).ln()).collect();
    let n = points as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let exponent = sxy / sxx;
    let expected = 1.0 / params.beta();
    Ok(DecayFit {
        v0,
        exponent,
        theta: (my - exponent * mx).exp(),
        expected_exponent: expected,
        relative_error: (exponent - expected).abs() / expected,
        points: pts,
    })
}
