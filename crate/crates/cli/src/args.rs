use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracbin::asymptotics::{FiniteMode, TailMode, DEFAULT_MAX_K};
use fracbin::market::DEFAULT_ENUMERATION_CAP;
use fracbin::DriftSpec;
use serde::Serialize;

const EXIT_CODES: &str = "\
Exit status:
  0  success
  1  verify found a failing property
  2  invalid arguments or parameters
  3  numerical non-convergence or unreachable tolerance
  4  enumeration cap exceeded
  5  output could not be written

Every flag can also be set through an environment variable named
FRACBIN_<FLAG>, e.g. FRACBIN_H=0.8 or FRACBIN_QUAD_ABS_TOL=1e-12.";

/// Fractional binary markets: coefficients, arbitrage censuses and limit diagnostics.
#[derive(Debug, Parser)]
#[command(name = "fracbin", version, about, after_help = EXIT_CODES)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Settings shared by every command.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Hurst parameter, in (1/2, 1).
    #[arg(long = "H", env = "FRACBIN_H", default_value_t = 0.75, global = true)]
    #[serde(rename = "H")]
    pub hurst: f64,
    /// Volatility.
    #[arg(long, env = "FRACBIN_SIGMA", default_value_t = 1.0, global = true)]
    pub sigma: f64,
    /// Number of periods.
    #[arg(long = "N", env = "FRACBIN_N", default_value_t = 20, global = true)]
    #[serde(rename = "N")]
    pub big_n: usize,
    /// Drift: `zero`, `const:c` or `poly:c0,c1,...`.
    #[arg(long, env = "FRACBIN_DRIFT", default_value = "zero", global = true)]
    pub drift: DriftSpec,
    /// Initial stock price.
    #[arg(long, env = "FRACBIN_S0", default_value_t = 1.0, global = true)]
    pub s0: f64,
    #[arg(long, env = "FRACBIN_SEED", default_value_t = 0, global = true)]
    pub seed: u64,
    /// Monte Carlo sample count.
    #[arg(
        long,
        env = "FRACBIN_SAMPLES",
        default_value_t = 1_000_000,
        global = true
    )]
    pub samples: u64,
    #[arg(
        long,
        env = "FRACBIN_QUAD_ABS_TOL",
        default_value_t = 1e-10,
        global = true
    )]
    pub quad_abs_tol: f64,
    #[arg(
        long,
        env = "FRACBIN_QUAD_REL_TOL",
        default_value_t = 1e-9,
        global = true
    )]
    pub quad_rel_tol: f64,
    #[arg(
        long,
        env = "FRACBIN_MAX_SUBDIVISIONS",
        default_value_t = 2000,
        global = true
    )]
    pub max_subdivisions: usize,
    /// Target standard deviation of the truncated tail of Y_H [default: 1e-4 g_H].
    #[arg(long, env = "FRACBIN_TAIL_SD_TOL", global = true)]
    pub tail_sd_tol: Option<f64>,
    /// Confidence level of reported intervals.
    #[arg(
        long,
        env = "FRACBIN_CONFIDENCE",
        default_value_t = 0.99,
        global = true
    )]
    pub confidence: f64,
    #[arg(long, env = "FRACBIN_FORMAT", value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Output file [default: standard output].
    #[arg(long, short, env = "FRACBIN_OUTPUT", global = true)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    /// Worker threads; never changes any output.
    #[arg(long, env = "FRACBIN_THREADS", global = true)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoeffTable {
    J,
    G,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    Gaussian,
    Drop,
}

impl From<Tail> for TailMode {
    fn from(t: Tail) -> Self {
        match t {
            Tail::Gaussian => TailMode::Gaussian,
            Tail::Drop => TailMode::Drop,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Auto,
    Exact,
    Sample,
}

impl From<Mode> for FiniteMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Auto => FiniteMode::Auto,
            Mode::Exact => FiniteMode::Exact,
            Mode::Sample => FiniteMode::Sample,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Series {
    Split,
    Exceedance,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Coefficient tables j_n(i) and g_n.
    Coeffs {
        /// Levels: `n`, `a-b` or `a,b,c` [default: 1-N].
        #[arg(long, env = "FRACBIN_LEVELS")]
        levels: Option<String>,
        /// Table written in CSV format.
        #[arg(long, value_enum, default_value_t = CoeffTable::J)]
        table: CoeffTable,
    },
    /// Exact per-level arbitrage census.
    Census {
        #[arg(long, env = "FRACBIN_CAP", default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: usize,
    },
    /// Arbitrage-path census, optionally with one price trajectory.
    Paths {
        #[arg(long, env = "FRACBIN_CAP", default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: usize,
        /// Sign word such as `+-+-`, first character is xi_1.
        #[arg(long)]
        word: Option<String>,
    },
    /// P(|Y_H| > g_H) by Monte Carlo.
    McLimit {
        #[arg(long, value_enum, default_value_t = Tail::Gaussian)]
        tail: Tail,
        /// Largest truncation index of the limit series.
        #[arg(long, default_value_t = DEFAULT_MAX_K)]
        max_k: u64,
    },
    /// Finite-level proportions P(|Y_n + a_n N^H| >= g_n).
    McLevel {
        /// Levels: `n`, `a-b` or `a,b,c` [default: 1-N].
        #[arg(long, env = "FRACBIN_LEVELS")]
        levels: Option<String>,
        #[arg(long, value_enum, default_value_t = Mode::Auto)]
        mode: Mode,
    },
    /// Critical parameters h_c and H_c.
    Hc {
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Characteristic function of Y_H.
    Charfn {
        /// Comma-separated arguments [default: 0.25, 0.5, ..., 5].
        #[arg(long, value_delimiter = ',')]
        v: Vec<f64>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Also fit the decay exponent on [v0, 10 v0].
        #[arg(long)]
        fit: bool,
        /// Start of the fit window [default: 10 / (2 g_H)].
        #[arg(long)]
        v0: Option<f64>,
        #[arg(long, default_value_t = 12)]
        fit_points: usize,
    },
    /// Shortest monotone run from a prefix to an arbitrage point.
    Reach {
        /// Sign word such as `--+`, first character is xi_1.
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        prefix: String,
        #[arg(long, value_enum, default_value_t = Direction::Up)]
        direction: Direction,
        #[arg(long, default_value_t = 10_000)]
        n_max: usize,
    },
    /// Variance split and exceedance frequencies across levels.
    Convergence {
        /// Levels: `n`, `a-b` or `a,b,c`.
        #[arg(long, env = "FRACBIN_LEVELS", default_value = "10,100,1000,10000")]
        levels: String,
        /// Series written in CSV format.
        #[arg(long, value_enum, default_value_t = Series::Split)]
        series: Series,
    },
    /// Run the property suite.
    Verify {
        /// Shift applied to the stored golden coefficients (sensitivity check).
        #[arg(long, default_value_t = 0.0)]
        perturb: f64,
    },
}

/// Parse `n`, `a-b` or `a,b,c` into a sorted list of distinct levels.
pub fn parse_levels(text: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| format!("invalid level {s:?}"))
        };
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(format!("empty level range {part:?}"));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    if out.is_empty() {
        return Err("no levels given".into());
    }
    if out.contains(&0) {
        return Err("levels start at 1".into());
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Parse a word of `+`/`-` characters into signs (`true` = up).
pub fn parse_word(text: &str) -> Result<Vec<bool>, String> {
    text.chars()
        .map(|c| match c {
            '+' | 'u' | '1' => Ok(true),
            '-' | 'd' | '0' => Ok(false),
            _ => Err(format!("sign words use `+` and `-`, got {c:?}")),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_lists() {
        assert_eq!(parse_levels("3").unwrap(), vec![3]);
        assert_eq!(parse_levels("1-3,7, 2").unwrap(), vec![1, 2, 3, 7]);
        assert!(parse_levels("0").is_err());
        assert!(parse_levels("5-2").is_err());
        assert!(parse_levels("x").is_err());
    }

    #[test]
    fn words() {
        assert_eq!(parse_word("+-").unwrap(), vec![true, false]);
        assert!(parse_word("+x").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
