use std::io::Write;

use fracbin::asymptotics::{
    characteristic_function, default_decay_start, exceedance_frequency, finite_level_proportion,
    fit_decay, limit_proportion, limit_variance, split_variances, FiniteMode, McConfig,
    RegimeBounds,
};
use fracbin::coefficients::{
    g_coeff, i_weight, j_coeff, j_unscaled, turning_point, CoefficientTable,
};
use fracbin::hurst::{normalizing_constant, solve_critical_hurst};
use fracbin::market::{
    census_with_cache, level_census, level_census_naive, QuantizedLevel, ReachSearch,
};
use fracbin::{DriftSpec, HurstParams, MarketSpec};
use serde::Serialize;
use serde_json::{json, Value};

use crate::commands::Context;
use crate::report::{Failure, Report};

// Stored reference values (30-digit independent evaluation).
const C_075: f64 = 1.069_644_635_031_990_3;
const J_075_5_2: f64 = 0.156_469_830_560_120_62;
const G_075_1: f64 = 0.950_461_179_775_252_5;
const LEVEL_COUNTS_075: [u64; 14] = [0, 0, 0, 0, 2, 2, 2, 8, 14, 26, 64, 102, 246, 450];
const H_C_6: f64 = 0.676_570;
const GOLDEN_REL_TOL: f64 = 1e-9;

const GRID: [f64; 3] = [0.6, 0.75, 0.9];

#[derive(Debug, Serialize)]
struct Property {
    name: &'static str,
    pass: bool,
    measured: Value,
}

type Outcome = fracbin::Result<(bool, Value)>;
type Check<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn params(h: f64, sigma: f64) -> fracbin::Result<HurstParams> {
    HurstParams::new(h, sigma)
}

fn golden(ctx: &Context, perturb: f64) -> Outcome {
    let p = params(0.75, 1.0)?;
    let c = normalizing_constant(0.75)?;
    let j = j_coeff(&p, 5, 2, &ctx.quad)?;
    let g = g_coeff(&p, 1, &ctx.quad)?;
    let rel = |got: f64, want: f64| (got - want).abs() / want;
    let errs = [
        rel(c, C_075),
        rel(j.value, J_075_5_2 + perturb),
        rel(g.value, G_075_1 + perturb),
    ];
    let worst = errs.iter().copied().fold(0.0, f64::max);
    Ok((
        worst <= GOLDEN_REL_TOL,
        json!({ "max_relative_error": worst, "perturbation": perturb }),
    ))
}

fn scaling(ctx: &Context) -> Outcome {
    // quasi-random tuples from a Weyl sequence
    let frac = |k: usize, a: f64| (k as f64 * a).fract();
    let mut worst = 0.0f64;
    for k in 1..=25 {
        let h = 0.51 + 0.48 * frac(k, 0.618_033_988_75);
        let big_n = 2 + (frac(k, 0.414_213_562_37) * 127.0) as usize;
        let n = 2 + (frac(k, 0.732_050_807_57) * (big_n - 1) as f64) as usize;
        let i = 1 + (frac(k, 0.236_067_977_5) * (n - 1) as f64) as usize;
        let p = params(h, 1.0)?;
        let direct = j_unscaled(&p, big_n, n, i, &ctx.quad)?;
        let scaled = j_coeff(&p, n, i, &ctx.quad)?;
        let factor = (big_n as f64).powf(h);
        let allowed = 1e-8 + factor * direct.error + scaled.error;
        worst = worst.max((factor * direct.value - scaled.value).abs() / allowed);
    }
    Ok((
        worst <= 1.0,
        json!({ "tuples": 25, "worst_gap_over_allowed": worst }),
    ))
}

fn brackets(ctx: &Context) -> Outcome {
    let mut violations = 0;
    for h in GRID {
        let p = params(h, 1.0)?;
        for n in 1..=80 {
            violations += CoefficientTable::build(&p, n, &ctx.quad)?
                .check_brackets(&p, &ctx.quad)?
                .violations();
        }
    }
    Ok((
        violations == 0,
        json!({ "max_level": 80, "violations": violations }),
    ))
}

fn last_coefficient(ctx: &Context) -> Outcome {
    let mut worst = 0.0f64;
    for h in GRID {
        let p = params(h, 1.0)?;
        let limit = p.g_limit() * (2f64.powf(h + 0.5) - 2.0);
        let j = j_coeff(&p, 10_000, 9_999, &ctx.quad)?;
        worst = worst.max((j.value - limit).abs() / limit);
    }
    Ok((worst <= 1e-2, json!({ "max_relative_error": worst })))
}

fn turning(ctx: &Context) -> Outcome {
    let mut worst = 0.0f64;
    let mut breaks = 0;
    for h in GRID {
        let tp = turning_point(h, 100_000)?;
        worst = worst.max((tp.x / 99_999.0 - (h - 0.5)).abs());
        let p = params(h, 1.0)?;
        for n in 3..=40 {
            let split = turning_point(h, n)?.index;
            let w = (1..n)
                .map(|i| i_weight(&p, n, i, &ctx.quad).map(|e| e.value))
                .collect::<fracbin::Result<Vec<_>>>()?;
            for i in 1..n - 1 {
                breaks += usize::from(i + 1 < split && w[i] >= w[i - 1]);
                breaks += usize::from(i > split && w[i] <= w[i - 1]);
            }
        }
    }
    Ok((
        worst <= 1e-3 && breaks == 0,
        json!({ "max_ratio_error": worst, "monotonicity_breaks": breaks }),
    ))
}

fn census(ctx: &Context) -> Outcome {
    let mut mismatches = 0;
    let mut asymmetric = 0;
    for h in GRID {
        let p = params(h, 1.0)?;
        for t in ctx.cache.levels(&p, 16, &ctx.quad)? {
            let q = QuantizedLevel::new(&t, 0.0);
            mismatches += usize::from(level_census(&q) != level_census_naive(&q));
            let mask = (1u64 << (t.n - 1)) - 1;
            asymmetric += (0..=mask)
                .filter(|&w| q.classify(q.walk(w)) != q.classify(q.walk(!w & mask)))
                .count();
        }
    }
    let spec = MarketSpec::new(14, params(0.75, 1.0)?, DriftSpec::Zero, 1.0)?;
    let c = census_with_cache(&spec, &ctx.cache, &ctx.quad, 26)?;
    let golden = c.per_level_counts == LEVEL_COUNTS_075;
    Ok((
        mismatches == 0 && asymmetric == 0 && golden,
        json!({ "gray_naive_mismatches": mismatches, "asymmetric_words": asymmetric, "golden_counts": golden }),
    ))
}

fn reach(ctx: &Context) -> Outcome {
    let mut missing = 0;
    let mut longest = 0;
    for h in GRID {
        let search = ReachSearch::with_prefix_len(params(h, 1.0)?, DriftSpec::Zero, ctx.quad, 6)?;
        for len in 0..=6 {
            for word in 0..1u64 << len {
                let prefix: Vec<bool> = (0..len).map(|b| word >> b & 1 == 1).collect();
                for up in [true, false] {
                    match search.monotone_reach(&prefix, up, 10_000)? {
                        Some(n) => longest = longest.max(n),
                        None => missing += 1,
                    }
                }
            }
        }
    }
    Ok((
        missing == 0,
        json!({ "max_prefix": 6, "without_reach": missing, "longest": longest }),
    ))
}

fn variance(ctx: &Context) -> Outcome {
    let p = params(0.7, 1.0)?;
    let large = split_variances(&p, &CoefficientTable::build(&p, 10_000, &ctx.quad)?)?;
    let small = split_variances(&p, &CoefficientTable::build(&p, 100, &ctx.quad)?)?;
    let limit = limit_variance(&p)?.value;
    let rel = (large.var_hat - limit).abs() / limit;
    Ok((
        rel <= 0.02 && large.var_bar < small.var_bar,
        json!({ "var_hat_relative_error": rel, "var_bar_10000": large.var_bar, "var_bar_100": small.var_bar }),
    ))
}

fn limit_bounds(ctx: &Context) -> Outcome {
    let mut ok = true;
    let mut shown = Vec::new();
    for h in [0.55, 0.95] {
        let p = params(h, 1.0)?;
        let e = limit_proportion(&p, &ctx.mc)?.estimate;
        let b = RegimeBounds::new(&p)?;
        let slack = 3.0 * e.stderr;
        ok &= e.p_hat <= b.limit_ceiling + slack;
        if let Some(floor) = b.limit_floor {
            ok &= e.p_hat >= floor - slack && e.ci_low() > 0.0;
        } else {
            ok &= e.p_hat <= 0.2;
        }
        shown.push(json!({ "H": h, "p_hat": e.p_hat, "stderr": e.stderr, "bounds": b }));
    }
    Ok((ok, Value::Array(shown)))
}

fn exceedance(ctx: &Context) -> Outcome {
    let mut ok = true;
    let mut shown = Vec::new();
    let cfg = McConfig {
        samples: ctx.mc.samples.min(200_000),
        ..ctx.mc
    };
    for h in [0.55, 0.95] {
        let p = params(h, 1.0)?;
        let tables = [50, 100, 200]
            .iter()
            .map(|&n| CoefficientTable::build(&p, n, &ctx.quad))
            .collect::<fracbin::Result<Vec<_>>>()?;
        let (bounds, rows) = exceedance_frequency(&p, &tables, &cfg)?;
        ok &= rows.iter().all(|r| r.within_bound);
        let p_hats: Vec<f64> = rows.iter().map(|r| r.estimate.p_hat).collect();
        shown.push(json!({ "H": h, "above_critical": bounds.above_critical, "p_hat": p_hats }));
    }
    Ok((ok, Value::Array(shown)))
}

fn finite_vs_limit(ctx: &Context) -> Outcome {
    let p = params(0.8, 1.0)?;
    let table = CoefficientTable::build(&p, 20, &ctx.quad)?;
    let exact = finite_level_proportion(&p, &table, 0.0, &ctx.mc, FiniteMode::Exact)?.p_hat;
    let limit = limit_proportion(&p, &ctx.mc)?.estimate.p_hat;
    Ok((
        (exact - limit).abs() <= 0.05,
        json!({ "exact_20": exact, "limit": limit }),
    ))
}

fn critical() -> Outcome {
    let c = solve_critical_hurst(1e-8)?;
    let ok = c.h_c > 0.5
        && c.h_c < 0.75
        && (c.h_c * 1e6).round() / 1e6 == H_C_6
        && c.residual <= 1e-8 + c.sum.tail_bound;
    Ok((
        ok,
        json!({ "h_c": c.h_c, "H_c": c.hurst_c, "residual": c.residual }),
    ))
}

fn charfn() -> Outcome {
    let p = params(0.75, 1.0)?;
    let zero = characteristic_function(&p, 0.0, 1e-12)?.value;
    let mut even = true;
    for v in [0.5, 2.0, 7.5] {
        even &= characteristic_function(&p, v, 1e-10)?.value
            == characteristic_function(&p, -v, 1e-10)?.value;
    }
    let fit = fit_decay(&p, default_decay_start(&p), 12)?;
    Ok((
        zero == 1.0 && even && fit.relative_error <= 0.15,
        json!({ "F0": zero, "even": even, "exponent": fit.exponent, "expected": fit.expected_exponent }),
    ))
}

fn determinism(ctx: &Context) -> Outcome {
    let p = params(0.8, 1.0)?;
    let cfg = McConfig {
        samples: ctx.mc.samples.min(200_000),
        ..ctx.mc
    };
    let here = serde_json::to_string(&limit_proportion(&p, &cfg)?).unwrap_or_default();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| fracbin::Error::Domain(e.to_string()))?
        .install(|| limit_proportion(&p, &cfg))?;
    let same = here == serde_json::to_string(&single).unwrap_or_default();
    Ok((same, json!({ "identical_across_pools": same })))
}

pub fn run(ctx: &Context, perturb: f64) -> Result<Report, Failure> {
    let checks: Vec<Check> = vec![
        ("golden-coefficients", Box::new(|| golden(ctx, perturb))),
        ("scaling-law", Box::new(|| scaling(ctx))),
        ("coefficient-brackets", Box::new(|| brackets(ctx))),
        ("last-coefficient-limit", Box::new(|| last_coefficient(ctx))),
        ("turning-point", Box::new(|| turning(ctx))),
        ("census-exactness-symmetry", Box::new(|| census(ctx))),
        ("monotone-reach", Box::new(|| reach(ctx))),
        ("variance-limit", Box::new(|| variance(ctx))),
        ("limit-proportion-bounds", Box::new(|| limit_bounds(ctx))),
        ("exceedance-regimes", Box::new(|| exceedance(ctx))),
        ("finite-vs-limit", Box::new(|| finite_vs_limit(ctx))),
        ("critical-parameter", Box::new(critical)),
        ("characteristic-function", Box::new(charfn)),
        ("determinism", Box::new(|| determinism(ctx))),
    ];
    let properties: Vec<Property> = checks
        .iter()
        .map(|(name, f)| {
            let (pass, measured) =
                f().unwrap_or_else(|e| (false, json!({ "error": e.to_string() })));
            Property {
                name,
                pass,
                measured,
            }
        })
        .collect();
    let failed = properties.iter().filter(|p| !p.pass).count();
    let mut csv = Vec::new();
    let io = |e: std::io::Error| Failure::Io(e.to_string());
    writeln!(csv, "property,pass,measured").map_err(io)?;
    for p in &properties {
        let measured = serde_json::to_string(&p.measured)?.replace('"', "\"\"");
        writeln!(csv, "{},{},\"{measured}\"", p.name, p.pass).map_err(io)?;
    }
    let mut report = Report::new(
        json!({ "passed": properties.len() - failed, "failed": failed, "properties": properties }),
        csv,
        ctx.cache.content_hash(),
    )?;
    report.failed = failed > 0;
    Ok(report)
}
