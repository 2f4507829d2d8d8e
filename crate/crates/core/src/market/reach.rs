use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use serde::Serialize;

use super::drift::DriftSpec;
use super::node::{NodeId, MAX_HORIZON};
use crate::coefficients::{g_coeff, j_coeff, j_range};
use crate::error::{domain, Result};
use crate::hurst::HurstParams;
use crate::quadrature::QuadratureConfig;

/// Default longest prefix handled by a [`ReachSearch`].
pub const DEFAULT_PREFIX_LEN: usize = 8;

/// Coefficients of level `m` needed to test monotone extensions: the first
/// few `j_m(i)`, their full sum and `g_m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReachLevel {
    pub m: usize,
    pub head: Vec<f64>,
    pub total: f64,
    pub g: f64,
}

/// Searches for the first arbitrage point on a monotone extension of a
/// prefix, evaluating each level `m = k + n` with horizon `N = m`.
///
/// Appending `n` equal signs `s` to a prefix of length `k - 1` gives
/// `Y_m = sum_{i<k} j_m(i) (xi_i - s) + s sum_{i<m} j_m(i)`, so only the
/// head of each level and the total weight are ever needed. Levels are
/// computed once and shared by all prefixes.
#[derive(Debug)]
pub struct ReachSearch {
    params: HurstParams,
    drift: DriftSpec,
    cfg: QuadratureConfig,
    head_len: usize,
    levels: RwLock<HashMap<usize, Arc<ReachLevel>>>,
}

impl ReachSearch {
    pub fn new(params: HurstParams, drift: DriftSpec, cfg: QuadratureConfig) -> Result<Self> {
        Self::with_prefix_len(params, drift, cfg, DEFAULT_PREFIX_LEN)
    }

    pub fn with_prefix_len(
        params: HurstParams,
        drift: DriftSpec,
        cfg: QuadratureConfig,
        head_len: usize,
    ) -> Result<Self> {
        cfg.validate()?;
        if head_len + 1 >= MAX_HORIZON {
            return domain(format!(
                "prefix length must be below {}, got {head_len}",
                MAX_HORIZON - 1
            ));
        }
        Ok(Self {
            params,
            drift,
            cfg,
            head_len,
            levels: RwLock::new(HashMap::new()),
        })
    }

    pub fn level(&self, m: usize) -> Result<Arc<ReachLevel>> {
        if let Some(l) = self.levels.read().expect("reach cache poisoned").get(&m) {
            return Ok(Arc::clone(l));
        }
        let p = &self.params;
        let heads = self.head_len.min(m - 1);
        let head = (1..=heads)
            .map(|i| j_coeff(p, m, i, &self.cfg).map(|e| e.value))
            .collect::<Result<Vec<_>>>()?;
        let total = j_range(p, m, 0, m - 1, &self.cfg)?.value;
        let g = g_coeff(p, m, &self.cfg)?.value;
        let level = Arc::new(ReachLevel { m, head, total, g });
        let mut map = self.levels.write().expect("reach cache poisoned");
        Ok(Arc::clone(map.entry(m).or_insert(level)))
    }

    /// Whether the node at level `m` reached from `prefix` by `m - 1 - prefix.len()`
    /// moves in direction `up` is an arbitrage point (horizon `N = m`).
    pub fn is_arbitrage_at(&self, prefix: &[bool], up: bool, m: usize) -> Result<bool> {
        let k = prefix.len() + 1;
        let level = self.level(m)?;
        let s = if up { 1.0 } else { -1.0 };
        let correction: f64 = prefix
            .iter()
            .zip(&level.head)
            .map(|(&x, &j)| j * (if x { 1.0 } else { -1.0 } - s))
            .sum();
        debug_assert!(level.head.len() >= k - 1);
        let y = correction + s * level.total;
        let mf = m as f64;
        let offset = self.drift.eval(1.0) * mf.powf(self.params.hurst() - 1.0);
        Ok(y >= level.g - offset || y <= -level.g - offset)
    }

    /// Smallest `n <= n_max` such that the prefix followed by `n` moves in
    /// direction `up` is an arbitrage point, if any.
    pub fn monotone_reach(&self, prefix: &[bool], up: bool, n_max: usize) -> Result<Option<usize>> {
        if prefix.len() > self.head_len {
            return domain(format!(
                "prefix of length {} exceeds the configured maximum {}",
                prefix.len(),
                self.head_len
            ));
        }
        let k = prefix.len() + 1;
        for n in 1..=n_max {
            if self.is_arbitrage_at(prefix, up, k + n)? {
                return Ok(Some(n));
            }
        }
        Ok(None)
    }
}

/// Node reached from `prefix` by `n` moves in direction `up`.
pub fn reach_node(prefix: &[bool], up: bool, n: usize) -> Result<NodeId> {
    let mut signs = prefix.to_vec();
    signs.extend(std::iter::repeat_n(up, n));
    NodeId::from_signs(&signs)
}

/// One-shot [`ReachSearch::monotone_reach`].
pub fn monotone_reach(
    params: &HurstParams,
    drift: &DriftSpec,
    prefix: &[bool],
    up: bool,
    n_max: usize,
    cfg: &QuadratureConfig,
) -> Result<Option<usize>> {
    ReachSearch::with_prefix_len(*params, drift.clone(), *cfg, prefix.len())?
        .monotone_reach(prefix, up, n_max)
}
