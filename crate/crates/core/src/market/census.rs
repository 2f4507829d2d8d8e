use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::node::MarketSpec;
use crate::coefficients::{CoefficientCache, CoefficientTable};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureConfig;

/// Default largest horizon for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 26;

/// Levels whose Gray-code walk is split into prefix segments.
const SEGMENT_BITS: usize = 10;

/// Tree depth below which the path traversal forks.
const FORK_DEPTH: usize = 12;

/// Integer image of one level's arbitrage test.
///
/// The scaled walk `Y = sum j(i) xi_i` is compared against `g - b` and
/// `-g - b`, where `b = a_n^(N) N^H`. Coefficients and thresholds are rounded
/// to a common power-of-two grid so that every enumeration order produces the
/// same sums bit for bit. Words within `slack` of a threshold (quadrature
/// error plus rounding) are reported as boundary-uncertain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedLevel {
    pub n: usize,
    pub q: Vec<i64>,
    /// `sum q`.
    pub mass: i64,
    pub upper: i64,
    pub lower: i64,
    pub slack: i64,
}

impl QuantizedLevel {
    pub fn new(table: &CoefficientTable, offset: f64) -> Self {
        let magnitude =
            table.j.iter().map(|v| v.abs()).sum::<f64>() + table.g.abs() + offset.abs() + 1.0;
        // keep every partial sum below 2^60
        let exponent = (60.0 - magnitude.log2().ceil()).clamp(0.0, 52.0);
        let scale = exponent.exp2();
        let q: Vec<i64> = table
            .j
            .iter()
            .map(|&v| (v * scale).round() as i64)
            .collect();
        let mass = q.iter().sum();
        let quad_err: f64 = table.j_err.iter().sum::<f64>() + table.g_err;
        let rounding = 8.0 * f64::EPSILON * magnitude;
        let slack = ((quad_err + rounding) * scale).ceil() as i64 + table.n as i64 + 2;
        Self {
            n: table.n,
            q,
            mass,
            upper: ((table.g - offset) * scale).round() as i64,
            lower: ((-table.g - offset) * scale).round() as i64,
            slack,
        }
    }

    /// Quantized `Y` for a sign word, computed from scratch.
    pub fn walk(&self, word: u64) -> i64 {
        let ups: i64 = self
            .q
            .iter()
            .enumerate()
            .filter(|(k, _)| word >> k & 1 == 1)
            .map(|(_, &q)| q)
            .sum();
        2 * ups - self.mass
    }

    /// `(arbitrage, boundary_uncertain)` for a quantized walk value.
    #[inline]
    pub fn classify(&self, y: i64) -> (bool, bool) {
        let arbitrage = y >= self.upper || y <= self.lower;
        let uncertain =
            (y - self.upper).abs() <= self.slack || (y - self.lower).abs() <= self.slack;
        (arbitrage, uncertain)
    }
}

/// Arbitrage words on one level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct LevelCount {
    pub count: u64,
    pub uncertain: u64,
}

impl std::ops::Add for LevelCount {
    type Output = LevelCount;

    fn add(self, rhs: LevelCount) -> LevelCount {
        LevelCount {
            count: self.count + rhs.count,
            uncertain: self.uncertain + rhs.uncertain,
        }
    }
}

impl std::iter::Sum for LevelCount {
    fn sum<I: Iterator<Item = LevelCount>>(iter: I) -> LevelCount {
        iter.fold(LevelCount::default(), |a, b| a + b)
    }
}

fn tally(level: &QuantizedLevel, y: i64, acc: &mut LevelCount) {
    let (arb, unc) = level.classify(y);
    acc.count += u64::from(arb);
    acc.uncertain += u64::from(unc);
}

/// Gray-code walk over the low `low_bits` signs with the higher signs fixed
/// to `prefix`. Each step flips one sign and updates `Y` by `±2 q`.
fn gray_segment(level: &QuantizedLevel, low_bits: usize, prefix: u64) -> LevelCount {
    let mut y = level.walk(prefix << low_bits);
    let mut acc = LevelCount::default();
    tally(level, y, &mut acc);
    for t in 1u64..(1u64 << low_bits) {
        let bit = t.trailing_zeros() as usize;
        let gray = t ^ (t >> 1);
        let step = 2 * level.q[bit];
        if gray >> bit & 1 == 1 {
            y += step;
        } else {
            y -= step;
        }
        tally(level, y, &mut acc);
    }
    acc
}

/// Count arbitrage words on one level by Gray-code enumeration.
pub fn level_census(level: &QuantizedLevel) -> LevelCount {
    let m = level.n - 1;
    let top = m.min(SEGMENT_BITS);
    let low = m - top;
    (0u64..(1u64 << top))
        .into_par_iter()
        .map(|prefix| gray_segment(level, low, prefix))
        .sum()
}

/// Count arbitrage words on one level by evaluating every word from scratch.
pub fn level_census_naive(level: &QuantizedLevel) -> LevelCount {
    let words = 1u64 << (level.n - 1);
    (0..words)
        .into_par_iter()
        .fold(LevelCount::default, |mut acc, w| {
            tally(level, level.walk(w), &mut acc);
            acc
        })
        .sum()
}

/// Root-to-leaf paths through at least one arbitrage point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct PathCount {
    pub count: u64,
    /// Paths whose classification depends on a boundary-uncertain node.
    pub uncertain: u64,
}

fn path_walk(
    levels: &[QuantizedLevel],
    big_n: usize,
    n: usize,
    word: u64,
    flagged: bool,
) -> PathCount {
    let level = &levels[n - 1];
    let (arb, unc) = level.classify(level.walk(word));
    let flagged = flagged || unc;
    let weight = 1u64 << (big_n - n);
    if arb || n == big_n {
        return PathCount {
            count: if arb { weight } else { 0 },
            uncertain: if flagged { weight } else { 0 },
        };
    }
    let up = word | 1 << (n - 1);
    let (a, b) = if n < FORK_DEPTH {
        rayon::join(
            || path_walk(levels, big_n, n + 1, word, flagged),
            || path_walk(levels, big_n, n + 1, up, flagged),
        )
    } else {
        (
            path_walk(levels, big_n, n + 1, word, flagged),
            path_walk(levels, big_n, n + 1, up, flagged),
        )
    };
    PathCount {
        count: a.count + b.count,
        uncertain: a.uncertain + b.uncertain,
    }
}

/// Depth-first path census; an arbitrage point at level `n` accounts for its
/// whole subtree of `2^(N-n)` paths without descending.
pub fn path_census(levels: &[QuantizedLevel]) -> PathCount {
    let big_n = levels.len();
    if big_n == 0 {
        return PathCount::default();
    }
    path_walk(levels, big_n, 1, 0, false)
}

/// Exact arbitrage census of an `N`-period market.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArbitrageCensus {
    pub spec: MarketSpec,
    /// `|A_n|` for `n = 1..N`.
    pub per_level_counts: Vec<u64>,
    pub per_level_proportions: Vec<f64>,
    pub total: u64,
    pub path_count: u64,
    pub path_proportion: f64,
    /// Words per level within numerical error of the arbitrage boundary.
    pub boundary_uncertain: Vec<u64>,
    pub path_uncertain: u64,
}

impl ArbitrageCensus {
    /// Run the census on pre-built tables (`tables[n - 1]` for level `n`).
    pub fn from_tables(
        spec: &MarketSpec,
        tables: &[impl AsRef<CoefficientTable>],
        cap: usize,
    ) -> Result<Self> {
        let big_n = spec.big_n;
        if big_n > cap {
            return Err(Error::CapExceeded {
                requested: big_n,
                cap,
            });
        }
        if tables.len() != big_n {
            return Err(Error::DimensionMismatch(format!(
                "{} tables supplied for horizon {big_n}",
                tables.len()
            )));
        }
        let levels: Vec<QuantizedLevel> = tables
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let t = t.as_ref();
                t.check(&spec.params, k + 1)?;
                Ok(QuantizedLevel::new(t, spec.scaled_drift(k + 1)))
            })
            .collect::<Result<_>>()?;
        let counts: Vec<LevelCount> = levels.iter().map(level_census).collect();
        let paths = path_census(&levels);
        let per_level_counts: Vec<u64> = counts.iter().map(|c| c.count).collect();
        Ok(Self {
            spec: spec.clone(),
            per_level_proportions: per_level_counts
                .iter()
                .enumerate()
                .map(|(k, &c)| c as f64 / (1u64 << k) as f64)
                .collect(),
            total: per_level_counts.iter().sum(),
            per_level_counts,
            path_count: paths.count,
            path_proportion: paths.count as f64 / (1u64 << (big_n - 1)) as f64,
            boundary_uncertain: counts.iter().map(|c| c.uncertain).collect(),
            path_uncertain: paths.uncertain,
        })
    }

    /// CSV `n,count,proportion`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,count,proportion")?;
        for (k, (c, p)) in self
            .per_level_counts
            .iter()
            .zip(&self.per_level_proportions)
            .enumerate()
        {
            writeln!(w, "{},{},{:?}", k + 1, c, p)?;
        }
        Ok(())
    }
}

/// Census with tables built through `cache`.
pub fn census_with_cache(
    spec: &MarketSpec,
    cache: &CoefficientCache,
    cfg: &QuadratureConfig,
    cap: usize,
) -> Result<ArbitrageCensus> {
    if spec.big_n > cap {
        return Err(Error::CapExceeded {
            requested: spec.big_n,
            cap,
        });
    }
    let tables: Vec<Arc<CoefficientTable>> = cache.levels(&spec.params, spec.big_n, cfg)?;
    ArbitrageCensus::from_tables(spec, &tables, cap)
}

/// Census with the default enumeration cap and a private table cache.
pub fn census(spec: &MarketSpec, cfg: &QuadratureConfig) -> Result<ArbitrageCensus> {
    census_with_cache(spec, &CoefficientCache::new(), cfg, DEFAULT_ENUMERATION_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn level(q: Vec<i64>, upper: i64) -> QuantizedLevel {
        let mass = q.iter().sum();
        QuantizedLevel {
            n: q.len() + 1,
            q,
            mass,
            upper,
            lower: -upper,
            slack: 0,
        }
    }

    #[test]
    fn walk_uses_little_endian_signs() {
        let l = level(vec![1, 10, 100], 1000);
        assert_eq!(l.walk(0b000), -111);
        assert_eq!(l.walk(0b001), -109);
        assert_eq!(l.walk(0b100), 89);
    }

    #[test]
    fn gray_matches_naive_on_small_levels() {
        for m in 0..14 {
            let q: Vec<i64> = (0..m).map(|k| 3 + 7 * k as i64 % 11).collect();
            let l = level(q, 20);
            assert_eq!(level_census(&l), level_census_naive(&l));
        }
    }

    #[test]
    fn path_census_prunes_subtrees() {
        // level 2 always arbitrage: every path of a 4-period tree is counted
        let levels = vec![
            level(vec![], 5),
            level(vec![10], 1),
            level(vec![1, 1], 100),
            level(vec![1, 1, 1], 100),
        ];
        let p = path_census(&levels);
        assert_eq!(p.count, 8);
    }
}
