use serde::Serialize;

use super::drift::DriftSpec;
use crate::coefficients::CoefficientTable;
use crate::error::{domain, Error, Result};
use crate::hurst::HurstParams;

/// Largest horizon whose sign words fit the 64-bit node encoding.
pub const MAX_HORIZON: usize = 64;

/// An `N`-period fractional binary market.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketSpec {
    #[serde(rename = "N")]
    pub big_n: usize,
    #[serde(flatten)]
    pub params: HurstParams,
    pub drift: DriftSpec,
    pub s0: f64,
}

impl MarketSpec {
    pub fn new(big_n: usize, params: HurstParams, drift: DriftSpec, s0: f64) -> Result<Self> {
        if !(1..=MAX_HORIZON).contains(&big_n) {
            return domain(format!(
                "horizon N must lie in [1, {MAX_HORIZON}], got {big_n}"
            ));
        }
        if !(s0 > 0.0 && s0.is_finite()) {
            return domain(format!("initial price must be positive, got {s0}"));
        }
        Ok(Self {
            big_n,
            params,
            drift,
            s0,
        })
    }

    /// `N^-H`, the factor between scaled and unscaled coefficients.
    pub fn scale(&self) -> f64 {
        (self.big_n as f64).powf(-self.params.hurst())
    }

    /// Drift of period `n` expressed on the scaled walk: `a_n^(N) N^H`.
    pub fn scaled_drift(&self, n: usize) -> f64 {
        self.drift.step(n, self.big_n) / self.scale()
    }
}

/// Node of the binary tree: level `n` and the signs `xi_1..xi_{n-1}`, with
/// bit `i - 1` set iff `xi_i = +1`. The root is `(1, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NodeId {
    pub level: usize,
    pub signs: u64,
}

impl NodeId {
    pub const ROOT: NodeId = NodeId { level: 1, signs: 0 };

    pub fn new(level: usize, signs: u64) -> Result<Self> {
        if !(1..=MAX_HORIZON).contains(&level) {
            return domain(format!(
                "node level must lie in [1, {MAX_HORIZON}], got {level}"
            ));
        }
        if signs >> (level - 1) != 0 {
            return domain(format!(
                "sign word {signs:#b} is longer than {} bits",
                level - 1
            ));
        }
        Ok(Self { level, signs })
    }

    /// Node reached from the signs in order (`true` for an up move).
    pub fn from_signs(signs: &[bool]) -> Result<Self> {
        let word = signs
            .iter()
            .enumerate()
            .fold(0u64, |w, (i, &up)| if up { w | 1 << i } else { w });
        Self::new(signs.len() + 1, word)
    }

    /// `xi_i` for `1 <= i < level`.
    pub fn sign(&self, i: usize) -> f64 {
        if self.signs >> (i - 1) & 1 == 1 {
            1.0
        } else {
            -1.0
        }
    }

    /// The node with every sign flipped.
    pub fn complement(&self) -> Self {
        let mask = if self.level > 1 {
            u64::MAX >> (65 - self.level)
        } else {
            0
        };
        Self {
            level: self.level,
            signs: !self.signs & mask,
        }
    }

    /// Number of nodes on level `n`.
    pub fn level_size(n: usize) -> u64 {
        1u64 << (n - 1)
    }
}

/// Price multipliers at a node: `u = y + N^-H g_n`, `d = y - N^-H g_n`, drift `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeValues {
    pub y: f64,
    pub u: f64,
    pub d: f64,
    pub a: f64,
}

fn check_node(spec: &MarketSpec, node: NodeId, table: &CoefficientTable) -> Result<()> {
    if node.level > spec.big_n {
        return Err(Error::DimensionMismatch(format!(
            "node level {} exceeds the horizon {}",
            node.level, spec.big_n
        )));
    }
    table.check(&spec.params, node.level)
}

/// `y = N^-H sum_{i<n} j_n(i) xi_i`, `u`, `d` and `a_n^(N)` at `node`.
pub fn node_values(
    spec: &MarketSpec,
    node: NodeId,
    table: &CoefficientTable,
) -> Result<NodeValues> {
    check_node(spec, node, table)?;
    let scale = spec.scale();
    let walk: f64 = table
        .j
        .iter()
        .enumerate()
        .map(|(k, &j)| j * node.sign(k + 1))
        .sum();
    let y = scale * walk;
    let half = scale * table.g;
    Ok(NodeValues {
        y,
        u: y + half,
        d: y - half,
        a: spec.drift.step(node.level, spec.big_n),
    })
}

/// `true` iff `u <= -a` or `d >= -a`, i.e. the one-period market at `node`
/// admits arbitrage.
pub fn is_arbitrage(spec: &MarketSpec, node: NodeId, table: &CoefficientTable) -> Result<bool> {
    let v = node_values(spec, node, table)?;
    Ok(v.u <= -v.a || v.d >= -v.a)
}

/// Price trajectory with its positivity diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StockPath {
    /// `S_0, ..., S_m` for a word of `m` signs.
    pub prices: Vec<f64>,
    /// Periods `n` with `1 + a_n + X_n <= 0`.
    pub nonpositive_steps: Vec<usize>,
}

/// `S_n = (1 + a_n + X_n) S_{n-1}` with `X_n = N^-H (sum_{i<n} j_n(i) xi_i + g_n xi_n)`.
///
/// `tables[n - 1]` must be the level-`n` table; `signs` has `N - 1` or `N`
/// entries and the path runs for that many periods.
pub fn stock_path(
    spec: &MarketSpec,
    tables: &[impl AsRef<CoefficientTable>],
    signs: &[bool],
) -> Result<StockPath> {
    let periods = signs.len();
    if periods + 1 < spec.big_n || periods > spec.big_n {
        return domain(format!(
            "stock path needs N - 1 or N signs, got {periods} for N = {}",
            spec.big_n
        ));
    }
    if tables.len() < periods {
        return Err(Error::DimensionMismatch(format!(
            "{} tables supplied for {periods} periods",
            tables.len()
        )));
    }
    let xi = |i: usize| if signs[i - 1] { 1.0 } else { -1.0 };
    let scale = spec.scale();
    let mut prices = Vec::with_capacity(periods + 1);
    let mut nonpositive_steps = Vec::new();
    let mut s = spec.s0;
    prices.push(s);
    for n in 1..=periods {
        let table = tables[n - 1].as_ref();
        table.check(&spec.params, n)?;
        let past: f64 = table
            .j
            .iter()
            .enumerate()
            .map(|(k, &j)| j * xi(k + 1))
            .sum();
        let x = scale * (past + table.g * xi(n));
        let factor = 1.0 + spec.drift.step(n, spec.big_n) + x;
        if factor <= 0.0 {
            nonpositive_steps.push(n);
        }
        s *= factor;
        prices.push(s);
    }
    Ok(StockPath {
        prices,
        nonpositive_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_encoding() {
        let node = NodeId::from_signs(&[true, true, false, true]).unwrap();
        assert_eq!(
            node,
            NodeId {
                level: 5,
                signs: 0b1011
            }
        );
        assert_eq!(node.sign(3), -1.0);
        assert_eq!(node.complement().signs, 0b0100);
        assert_eq!(NodeId::ROOT.complement(), NodeId::ROOT);
        assert!(NodeId::new(3, 0b100).is_err());
        assert_eq!(NodeId::level_size(4), 8);
    }

    #[test]
    fn spec_validation() {
        let p = HurstParams::new(0.7, 1.0).unwrap();
        assert!(MarketSpec::new(0, p, DriftSpec::Zero, 1.0).is_err());
        assert!(MarketSpec::new(4, p, DriftSpec::Zero, 0.0).is_err());
        assert!(MarketSpec::new(4, p, DriftSpec::Zero, 1.0).is_ok());
    }
}
