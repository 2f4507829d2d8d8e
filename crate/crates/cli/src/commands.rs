use std::io::Write;
use std::sync::Arc;

use fracbin::asymptotics::{
    characteristic_function, default_decay_start, exceedance_frequency, finite_level_proportion,
    fit_decay, limit_proportion, limit_variance, split_variances, write_exceedance_csv,
    write_split_csv, McConfig, RegimeBounds,
};
use fracbin::coefficients::{write_g_csv, write_j_csv, CoefficientCache, CoefficientTable};
use fracbin::hurst::solve_critical_hurst;
use fracbin::market::{census_with_cache, reach_node, stock_path, ReachSearch};
use fracbin::{HurstParams, MarketSpec, QuadratureConfig};
use serde_json::json;

use crate::args::{parse_levels, parse_word, CoeffTable, Command, Common, Direction, Series};
use crate::report::{Failure, Report};
use crate::verify;

/// Validated inputs shared by every command.
pub struct Context {
    pub common: Common,
    pub params: HurstParams,
    pub quad: QuadratureConfig,
    pub mc: McConfig,
    pub cache: CoefficientCache,
}

impl Context {
    pub fn new(common: &Common) -> Result<Self, Failure> {
        let params = HurstParams::new(common.hurst, common.sigma)?;
        let quad = QuadratureConfig::new(
            common.quad_abs_tol,
            common.quad_rel_tol,
            common.max_subdivisions,
        )?;
        let mc = McConfig {
            samples: common.samples,
            seed: common.seed,
            tail_sd_tol: common.tail_sd_tol,
            confidence: common.confidence,
            ..Default::default()
        };
        mc.validate()?;
        Ok(Self {
            common: common.clone(),
            params,
            quad,
            mc,
            cache: CoefficientCache::new(),
        })
    }

    pub fn spec(&self) -> Result<MarketSpec, Failure> {
        Ok(MarketSpec::new(
            self.common.big_n,
            self.params,
            self.common.drift.clone(),
            self.common.s0,
        )?)
    }

    fn levels(&self, text: Option<&str>) -> Result<Vec<usize>, Failure> {
        match text {
            Some(t) => parse_levels(t).map_err(Failure::Invalid),
            None => Ok((1..=self.common.big_n).collect()),
        }
    }

    fn tables(&self, levels: &[usize]) -> Result<Vec<Arc<CoefficientTable>>, Failure> {
        Ok(levels
            .iter()
            .map(|&n| self.cache.get_or_build(&self.params, n, &self.quad))
            .collect::<fracbin::Result<_>>()?)
    }

    fn report(&self, result: impl serde::Serialize, csv: Vec<u8>) -> Result<Report, Failure> {
        Report::new(result, csv, self.cache.content_hash())
    }
}

fn io(e: std::io::Error) -> Failure {
    Failure::Io(e.to_string())
}

pub fn dispatch(ctx: &Context, command: &Command) -> Result<Report, Failure> {
    match command {
        Command::Coeffs { levels, table } => coeffs(ctx, levels.as_deref(), *table),
        Command::Census { cap } => census(ctx, *cap),
        Command::Paths { cap, word } => paths(ctx, *cap, word.as_deref()),
        Command::McLimit { tail, max_k } => mc_limit(ctx, (*tail).into(), *max_k),
        Command::McLevel { levels, mode } => mc_level(ctx, levels.as_deref(), (*mode).into()),
        Command::Hc { tol } => hc(ctx, *tol),
        Command::Charfn {
            v,
            tol,
            fit,
            v0,
            fit_points,
        } => charfn(ctx, v, *tol, fit.then_some((*v0, *fit_points))),
        Command::Reach {
            prefix,
            direction,
            n_max,
        } => reach(ctx, prefix, *direction, *n_max),
        Command::Convergence { levels, series } => convergence(ctx, levels, *series),
        Command::Verify { perturb } => verify::run(ctx, *perturb),
    }
}

fn coeffs(ctx: &Context, levels: Option<&str>, table: CoeffTable) -> Result<Report, Failure> {
    let tables = ctx.tables(&ctx.levels(levels)?)?;
    let refs = tables.iter().map(|t| t.as_ref());
    let mut csv = Vec::new();
    match table {
        CoeffTable::J => write_j_csv(&mut csv, refs),
        CoeffTable::G => write_g_csv(&mut csv, refs),
    }
    .map_err(io)?;
    let views: Vec<&CoefficientTable> = tables.iter().map(|t| t.as_ref()).collect();
    ctx.report(json!({ "tables": views }), csv)
}

fn census(ctx: &Context, cap: usize) -> Result<Report, Failure> {
    let c = census_with_cache(&ctx.spec()?, &ctx.cache, &ctx.quad, cap)?;
    let mut csv = Vec::new();
    c.write_csv(&mut csv).map_err(io)?;
    ctx.report(&c, csv)
}

fn paths(ctx: &Context, cap: usize, word: Option<&str>) -> Result<Report, Failure> {
    let spec = ctx.spec()?;
    let c = census_with_cache(&spec, &ctx.cache, &ctx.quad, cap)?;
    let big_n = spec.big_n;
    // paths crossing level n at an arbitrage point: count_n 2^(N-n)
    let through: Vec<u64> = c
        .per_level_counts
        .iter()
        .enumerate()
        .map(|(k, &cnt)| cnt << (big_n - 1 - k))
        .collect();
    let lower = through.iter().copied().max().unwrap_or(0);
    let upper: u64 = through.iter().sum();
    let trajectory = match word {
        Some(w) => {
            let signs = parse_word(w).map_err(Failure::Invalid)?;
            let tables = ctx.tables(&(1..=big_n).collect::<Vec<_>>())?;
            Some(stock_path(&spec, &tables, &signs)?)
        }
        None => None,
    };
    let mut csv = Vec::new();
    match &trajectory {
        Some(t) => {
            writeln!(csv, "step,price").map_err(io)?;
            for (k, p) in t.prices.iter().enumerate() {
                writeln!(csv, "{k},{p:?}").map_err(io)?;
            }
        }
        None => {
            writeln!(csv, "n,count,paths_through").map_err(io)?;
            for (k, (cnt, th)) in c.per_level_counts.iter().zip(&through).enumerate() {
                writeln!(csv, "{},{cnt},{th}", k + 1).map_err(io)?;
            }
        }
    }
    ctx.report(
        json!({
            "spec": spec,
            "path_count": c.path_count,
            "path_proportion": c.path_proportion,
            "path_uncertain": c.path_uncertain,
            "single_level_lower_bound": lower,
            "union_upper_bound": upper,
            "per_level_counts": c.per_level_counts,
            "stock_path": trajectory,
        }),
        csv,
    )
}

fn mc_limit(
    ctx: &Context,
    tail: fracbin::asymptotics::TailMode,
    max_k: u64,
) -> Result<Report, Failure> {
    let cfg = McConfig {
        tail,
        max_k,
        ..ctx.mc
    };
    let e = limit_proportion(&ctx.params, &cfg)?;
    let bounds = RegimeBounds::new(&ctx.params)?;
    let mut csv = Vec::new();
    writeln!(
        csv,
        "p_hat,stderr,ci_low,ci_high,bias_low,bias_high,samples,K,seed"
    )
    .map_err(io)?;
    let m = &e.estimate;
    writeln!(
        csv,
        "{:?},{:?},{:?},{:?},{:?},{:?},{},{},{}",
        m.p_hat,
        m.stderr,
        m.ci[0],
        m.ci[1],
        m.bias_window[0],
        m.bias_window[1],
        m.samples,
        m.k,
        m.seed
    )
    .map_err(io)?;
    ctx.report(json!({ "estimate": e, "bounds": bounds }), csv)
}

fn mc_level(
    ctx: &Context,
    levels: Option<&str>,
    mode: fracbin::asymptotics::FiniteMode,
) -> Result<Report, Failure> {
    let spec = ctx.spec()?;
    let levels = ctx.levels(levels)?;
    if let Some(&n) = levels.iter().find(|&&n| n > spec.big_n) {
        return Err(Failure::Invalid(format!(
            "level {n} exceeds the horizon N = {}",
            spec.big_n
        )));
    }
    let tables = ctx.tables(&levels)?;
    let mut rows = Vec::new();
    let mut csv = Vec::new();
    writeln!(csv, "n,offset,p_hat,stderr,ci_low,ci_high,samples").map_err(io)?;
    for t in &tables {
        let offset = spec.scaled_drift(t.n);
        let e = finite_level_proportion(&ctx.params, t, offset, &ctx.mc, mode)?;
        writeln!(
            csv,
            "{},{:?},{:?},{:?},{:?},{:?},{}",
            t.n, offset, e.p_hat, e.stderr, e.ci[0], e.ci[1], e.samples
        )
        .map_err(io)?;
        rows.push(json!({ "n": t.n, "offset": offset, "estimate": e }));
    }
    ctx.report(json!({ "levels": rows }), csv)
}

fn hc(ctx: &Context, tol: f64) -> Result<Report, Failure> {
    let c = solve_critical_hurst(tol)?;
    let mut csv = Vec::new();
    writeln!(csv, "h_c,H_c,residual,iterations").map_err(io)?;
    writeln!(
        csv,
        "{:?},{:?},{:?},{}",
        c.h_c, c.hurst_c, c.residual, c.iterations
    )
    .map_err(io)?;
    ctx.report(c, csv)
}

fn charfn(
    ctx: &Context,
    vs: &[f64],
    tol: f64,
    fit: Option<(Option<f64>, usize)>,
) -> Result<Report, Failure> {
    let default: Vec<f64> = (1..=20).map(|i| i as f64 * 0.25).collect();
    let vs = if vs.is_empty() { &default[..] } else { vs };
    let values = vs
        .iter()
        .map(|&v| characteristic_function(&ctx.params, v, tol))
        .collect::<fracbin::Result<Vec<_>>>()?;
    let decay = match fit {
        Some((v0, points)) => {
            let v0 = v0.unwrap_or_else(|| default_decay_start(&ctx.params));
            Some(fit_decay(&ctx.params, v0, points)?)
        }
        None => None,
    };
    let mut csv = Vec::new();
    writeln!(csv, "v,value,error,log_abs,K").map_err(io)?;
    for f in &values {
        writeln!(
            csv,
            "{:?},{:?},{:?},{:?},{}",
            f.v, f.value, f.error, f.log_abs, f.k
        )
        .map_err(io)?;
    }
    ctx.report(json!({ "values": values, "decay_fit": decay }), csv)
}

fn reach(
    ctx: &Context,
    prefix: &str,
    direction: Direction,
    n_max: usize,
) -> Result<Report, Failure> {
    let signs = parse_word(prefix).map_err(Failure::Invalid)?;
    let up = direction == Direction::Up;
    let search =
        ReachSearch::with_prefix_len(ctx.params, ctx.common.drift.clone(), ctx.quad, signs.len())?;
    let n = search.monotone_reach(&signs, up, n_max)?;
    let node = n.map(|n| reach_node(&signs, up, n)).transpose()?;
    let mut csv = Vec::new();
    writeln!(csv, "prefix,direction,n,level").map_err(io)?;
    let show = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    writeln!(
        csv,
        "{prefix},{},{},{}",
        if up { "up" } else { "down" },
        show(n),
        show(n.map(|n| signs.len() + 1 + n))
    )
    .map_err(io)?;
    ctx.report(
        json!({ "prefix": prefix, "up": up, "n": n, "level": n.map(|n| signs.len() + 1 + n), "node": node }),
        csv,
    )
}

fn convergence(ctx: &Context, levels: &str, series: Series) -> Result<Report, Failure> {
    let levels = parse_levels(levels).map_err(Failure::Invalid)?;
    let tables = ctx.tables(&levels)?;
    let split = tables
        .iter()
        .map(|t| split_variances(&ctx.params, t))
        .collect::<fracbin::Result<Vec<_>>>()?;
    let (bounds, rows) = exceedance_frequency(&ctx.params, &tables, &ctx.mc)?;
    let limit = limit_variance(&ctx.params)?;
    let mut csv = Vec::new();
    match series {
        Series::Split => write_split_csv(&mut csv, &split),
        Series::Exceedance => write_exceedance_csv(&mut csv, &rows),
    }
    .map_err(io)?;
    ctx.report(
        json!({
            "limit_variance": limit,
            "split_variances": split,
            "bounds": bounds,
            "exceedance": rows,
        }),
        csv,
    )
}
