use std::io::Write;

use serde::Serialize;

use super::estimate::{McConfig, McEstimate, TailMode};
use super::sampler::{run_chunks, LimitSampler, SignTable, TailInfo};
use crate::coefficients::CoefficientTable;
use crate::error::{domain, Result};
use crate::hurst::{rho_sq_sum, HurstParams};
use crate::market::{level_census, QuantizedLevel};

/// Certified accuracy of `sum rho_h^2` used by the bound checks.
pub const SUM_SQ_TARGET: f64 = 1e-10;

/// Largest level evaluated by exhaustive enumeration in automatic mode.
pub const EXACT_LEVEL_LIMIT: usize = 20;

/// `P(|Y_H| > g_H)` estimated from the truncated limit variable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitProportion {
    #[serde(flatten)]
    pub estimate: McEstimate,
    pub tail: TailInfo,
}

/// Estimate `P(|Y_H| > g_H)`.
///
/// With a Gaussian tail the window is `p_hat ± 2 kappa`, `kappa` the
/// Kolmogorov error of the substitute. With a dropped tail it is
/// `[P(|Y^K| > g + delta), P(|Y^K| > g - delta)]`, widened by the
/// sub-Gaussian bound `2 exp(-delta^2 / (2 sd^2))` on `P(|tail| > delta)`.
pub fn limit_proportion(params: &HurstParams, cfg: &McConfig) -> Result<LimitProportion> {
    let sampler = LimitSampler::new(params, cfg)?;
    Ok(limit_proportion_with(&sampler, cfg.samples, cfg.confidence))
}

pub fn limit_proportion_with(
    sampler: &LimitSampler,
    samples: u64,
    confidence: f64,
) -> LimitProportion {
    let g = sampler.params().g_limit();
    let tail = *sampler.tail();
    let delta = tail.delta;
    let parts = sampler.map_chunks(samples, |it| {
        let mut c = [0u64; 3];
        for y in it {
            let a = y.abs();
            c[0] += u64::from(a > g);
            c[1] += u64::from(a > g + delta);
            c[2] += u64::from(a > g - delta);
        }
        c
    });
    let mut c = [0u64; 3];
    for p in &parts {
        for (t, v) in c.iter_mut().zip(p) {
            *t += v;
        }
    }
    let mut estimate = McEstimate::from_counts(c[0], samples, confidence, tail.k, sampler.seed());
    let n = samples as f64;
    estimate.bias_window = match tail.mode {
        TailMode::Gaussian => {
            let w = 2.0 * tail.kolmogorov;
            [(estimate.p_hat - w).max(0.0), (estimate.p_hat + w).min(1.0)]
        }
        TailMode::Drop => {
            let escape = if tail.sd_upper > 0.0 {
                2.0 * (-(delta * delta) / (2.0 * tail.sd_upper * tail.sd_upper)).exp()
            } else {
                0.0
            };
            [
                (c[1] as f64 / n - escape).max(0.0),
                (c[2] as f64 / n + escape).min(1.0),
            ]
        }
    };
    LimitProportion { estimate, tail }
}

/// Evaluation strategy for finite-level proportions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FiniteMode {
    /// Exhaustive up to level 20, sampled above.
    Auto,
    Exact,
    Sample,
}

/// `P(|Y_n + offset| >= g_n)` over uniformly random sign words, where
/// `offset` plays the role of `a_n^(N) N^H`.
pub fn finite_level_proportion(
    params: &HurstParams,
    table: &CoefficientTable,
    offset: f64,
    cfg: &McConfig,
    mode: FiniteMode,
) -> Result<McEstimate> {
    cfg.validate()?;
    table.check(params, table.n)?;
    let n = table.n;
    let exact = match mode {
        FiniteMode::Auto => n <= EXACT_LEVEL_LIMIT,
        FiniteMode::Exact => {
            if n > 40 {
                return domain(format!("exact enumeration limited to level 40, got {n}"));
            }
            true
        }
        FiniteMode::Sample => false,
    };
    if exact {
        let count = level_census(&QuantizedLevel::new(table, offset)).count;
        return Ok(McEstimate::exact(count, 1u64 << (n - 1), (n - 1) as u64));
    }
    let hits = sample_level(table, cfg, |y| (y + offset).abs() >= table.g);
    Ok(McEstimate::from_counts(
        hits,
        cfg.samples,
        cfg.confidence,
        (n - 1) as u64,
        cfg.seed,
    ))
}

fn sample_level<F: Fn(f64) -> bool + Sync>(
    table: &CoefficientTable,
    cfg: &McConfig,
    event: F,
) -> u64 {
    let signs = SignTable::new(&table.j);
    run_chunks(cfg.samples, cfg.seed, |rng, m| {
        (0..m).filter(|_| event(signs.draw(rng))).count() as u64
    })
    .iter()
    .sum()
}

/// Regime of `H` relative to `H_c` and the resulting bound on
/// `P(|Y_n| > g_n)` for large `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeBounds {
    /// `sum_k rho_h(k)^2`.
    pub sum_sq: f64,
    pub above_critical: bool,
    /// Midpoint of `(0, 2 sqrt(S) - 1)` when above the critical value.
    pub delta: Option<f64>,
    /// Midpoint of `(0, 1 - 2 sqrt(S))` when below.
    pub epsilon: Option<f64>,
    /// `(1/3) (1 - (1 + delta)^2 / (4 S))^2`.
    pub floor: Option<f64>,
    /// `4 S / (1 - epsilon)^2`.
    pub ceiling: Option<f64>,
    /// Paley-Zygmund bound on the limit, `(1/3) (1 - 1/(4 S))^2` when `4 S > 1`.
    pub limit_floor: Option<f64>,
    /// Tchebysheff bound on the limit, `4 S`.
    pub limit_ceiling: f64,
}

impl RegimeBounds {
    pub fn new(params: &HurstParams) -> Result<Self> {
        let s = rho_sq_sum(params.h(), SUM_SQ_TARGET)?.total();
        let root = s.sqrt();
        let above = 4.0 * s > 1.0;
        let (delta, epsilon, floor, ceiling, limit_floor) = if above {
            let delta = (2.0 * root - 1.0) / 2.0;
            let floor = (1.0 - (1.0 + delta).powi(2) / (4.0 * s)).powi(2) / 3.0;
            let limit = (1.0 - 1.0 / (4.0 * s)).powi(2) / 3.0;
            (Some(delta), None, Some(floor), None, Some(limit))
        } else {
            let eps = (1.0 - 2.0 * root) / 2.0;
            (
                None,
                Some(eps),
                None,
                Some(4.0 * s / (1.0 - eps).powi(2)),
                None,
            )
        };
        Ok(Self {
            sum_sq: s,
            above_critical: above,
            delta,
            epsilon,
            floor,
            ceiling,
            limit_floor,
            limit_ceiling: 4.0 * s,
        })
    }
}

/// One level of an exceedance-frequency series with its regime check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExceedanceRow {
    pub n: usize,
    #[serde(flatten)]
    pub estimate: McEstimate,
    /// `floor - 3 stderr <= p_hat` above the critical value,
    /// `p_hat <= ceiling + 3 stderr` below it.
    pub within_bound: bool,
}

/// Sampled `P(|Y_n| > g_n)` for each supplied level, checked against the
/// regime bound. Every level reuses `cfg.seed`.
pub fn exceedance_frequency(
    params: &HurstParams,
    tables: &[impl AsRef<CoefficientTable>],
    cfg: &McConfig,
) -> Result<(RegimeBounds, Vec<ExceedanceRow>)> {
    cfg.validate()?;
    let bounds = RegimeBounds::new(params)?;
    let rows = tables
        .iter()
        .map(|t| {
            let t = t.as_ref();
            t.check(params, t.n)?;
            let hits = sample_level(t, cfg, |y| y.abs() > t.g);
            let estimate = McEstimate::from_counts(
                hits,
                cfg.samples,
                cfg.confidence,
                (t.n - 1) as u64,
                cfg.seed,
            );
            let slack = 3.0 * estimate.stderr;
            let within_bound = match (bounds.floor, bounds.ceiling) {
                (Some(f), _) => estimate.p_hat >= f - slack,
                (None, Some(c)) => estimate.p_hat <= c + slack,
                (None, None) => true,
            };
            Ok(ExceedanceRow {
                n: t.n,
                estimate,
                within_bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((bounds, rows))
}

/// CSV `n,p_hat,stderr,ci_low,ci_high,samples,within_bound`.
pub fn write_exceedance_csv<W: Write>(mut w: W, rows: &[ExceedanceRow]) -> std::io::Result<()> {
    writeln!(w, "n,p_hat,stderr,ci_low,ci_high,samples,within_bound")?;
    for r in rows {
        let e = &r.estimate;
        writeln!(
            w,
            "{},{:?},{:?},{:?},{:?},{},{}",
            r.n, e.p_hat, e.stderr, e.ci[0], e.ci[1], e.samples, r.within_bound
        )?;
    }
    Ok(())
}
