use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::scaled::{g_bracket, g_coeff, i_weight, j_bracket, j_coeff, turning_point};
use crate::error::{Error, Result};
use crate::hurst::HurstParams;
use crate::quadrature::{Estimate, QuadratureConfig};

/// Scaled coefficients of one level: `j_n^H(1..n-1)` and `g_n^H`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientTable {
    pub hurst: f64,
    pub sigma: f64,
    pub n: usize,
    /// `j[i - 1] = j_n^H(i)`.
    pub j: Vec<f64>,
    pub j_err: Vec<f64>,
    pub g: f64,
    pub g_err: f64,
    /// `i_n`.
    pub split_index: usize,
    /// `x_n`; `NaN` at level 1, where no past coefficients exist.
    pub turning_point: f64,
}

impl AsRef<CoefficientTable> for CoefficientTable {
    fn as_ref(&self) -> &CoefficientTable {
        self
    }
}

impl CoefficientTable {
    /// Build level `n >= 1`; entries are computed in parallel.
    pub fn build(params: &HurstParams, n: usize, cfg: &QuadratureConfig) -> Result<Self> {
        cfg.validate()?;
        if n < 1 {
            return Err(Error::Domain("coefficient table needs level n >= 1".into()));
        }
        let past: Vec<Estimate> = (1..n)
            .into_par_iter()
            .map(|i| j_coeff(params, n, i, cfg))
            .collect::<Result<_>>()?;
        let g = g_coeff(params, n, cfg)?;
        let (x, index) = match turning_point(params.hurst(), n) {
            Ok(tp) => (tp.x, tp.index),
            Err(_) => (f64::NAN, 1),
        };
        Ok(Self {
            hurst: params.hurst(),
            sigma: params.sigma(),
            n,
            j: past.iter().map(|e| e.value).collect(),
            j_err: past.iter().map(|e| e.error).collect(),
            g: g.value,
            g_err: g.error,
            split_index: index,
            turning_point: x,
        })
    }

    /// Error unless the table was built for `params` at level `n`.
    pub fn check(&self, params: &HurstParams, n: usize) -> Result<()> {
        if self.n != n || self.hurst != params.hurst() || self.sigma != params.sigma() {
            return Err(Error::DimensionMismatch(format!(
                "table for (H = {}, sigma = {}, n = {}) used at (H = {}, sigma = {}, n = {n})",
                self.hurst,
                self.sigma,
                self.n,
                params.hurst(),
                params.sigma()
            )));
        }
        Ok(())
    }

    /// Largest quadrature error over all entries.
    pub fn max_error(&self) -> f64 {
        self.j_err.iter().copied().fold(self.g_err, f64::max)
    }

    /// `sum_i j_n^H(i)^2`, the variance of the past part of the walk.
    pub fn past_variance(&self) -> f64 {
        let acc: crate::special::Neumaier = self.j.iter().map(|v| v * v).collect();
        acc.total()
    }

    /// Check every entry against its bracket with `I_n` evaluated under `cfg`.
    pub fn check_brackets(
        &self,
        params: &HurstParams,
        cfg: &QuadratureConfig,
    ) -> Result<BracketReport> {
        self.check(params, self.n)?;
        let n = self.n;
        let past: Vec<BracketEntry> = (1..n)
            .into_par_iter()
            .map(|i| -> Result<BracketEntry> {
                let weight = i_weight(params, n, i, cfg)?;
                let (lower, upper) = j_bracket(params, n, weight);
                let value = self.j[i - 1];
                let err = self.j_err[i - 1];
                Ok(BracketEntry {
                    i,
                    lower,
                    value,
                    upper,
                    ok: value > 0.0 && lower - err <= value && value <= upper + err,
                })
            })
            .collect::<Result<_>>()?;
        let (lower, upper) = g_bracket(params, n);
        let current = BracketEntry {
            i: n,
            lower,
            value: self.g,
            upper,
            ok: self.g > 0.0 && lower <= self.g + self.g_err && self.g - self.g_err <= upper,
        };
        Ok(BracketReport { n, past, current })
    }

    /// SHA-256 of the table contents (parameters, level and bit patterns).
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        self.feed(&mut h);
        hex::encode(h.finalize())
    }

    fn feed(&self, h: &mut Sha256) {
        h.update(self.hurst.to_le_bytes());
        h.update(self.sigma.to_le_bytes());
        h.update((self.n as u64).to_le_bytes());
        for v in self.j.iter().chain(&self.j_err) {
            h.update(v.to_le_bytes());
        }
        h.update(self.g.to_le_bytes());
        h.update(self.g_err.to_le_bytes());
    }
}

/// One checked bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketEntry {
    /// Coefficient index; `n` denotes `g_n`.
    pub i: usize,
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketReport {
    pub n: usize,
    pub past: Vec<BracketEntry>,
    pub current: BracketEntry,
}

impl BracketReport {
    pub fn violations(&self) -> usize {
        self.past.iter().filter(|e| !e.ok).count() + usize::from(!self.current.ok)
    }
}

type CacheKey = (u64, u64, usize, u64);

/// Memoized tables keyed by `(H, sigma, n, config digest)`. Concurrent callers
/// may build the same table twice; the first insert wins and both are equal.
#[derive(Debug, Default)]
pub struct CoefficientCache {
    tables: RwLock<HashMap<CacheKey, Arc<CoefficientTable>>>,
}

impl CoefficientCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_build(
        &self,
        params: &HurstParams,
        n: usize,
        cfg: &QuadratureConfig,
    ) -> Result<Arc<CoefficientTable>> {
        let (hb, sb) = params.key();
        let key = (hb, sb, n, cfg.digest());
        if let Some(t) = self.tables.read().expect("cache lock poisoned").get(&key) {
            return Ok(Arc::clone(t));
        }
        let table = Arc::new(CoefficientTable::build(params, n, cfg)?);
        let mut map = self.tables.write().expect("cache lock poisoned");
        Ok(Arc::clone(map.entry(key).or_insert(table)))
    }

    /// Tables for levels `1..=big_n`, built in parallel.
    pub fn levels(
        &self,
        params: &HurstParams,
        big_n: usize,
        cfg: &QuadratureConfig,
    ) -> Result<Vec<Arc<CoefficientTable>>> {
        (1..=big_n)
            .into_par_iter()
            .map(|n| self.get_or_build(params, n, cfg))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.tables.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// SHA-256 over all cached tables in key order.
    pub fn content_hash(&self) -> String {
        let map = self.tables.read().expect("cache lock poisoned");
        let mut keys: Vec<&CacheKey> = map.keys().collect();
        keys.sort();
        let mut h = Sha256::new();
        for k in keys {
            h.update(k.3.to_le_bytes());
            map[k].feed(&mut h);
        }
        hex::encode(h.finalize())
    }
}

/// SHA-256 over a sequence of tables in the given order.
pub fn tables_hash<'a>(tables: impl IntoIterator<Item = &'a CoefficientTable>) -> String {
    let mut h = Sha256::new();
    for t in tables {
        t.feed(&mut h);
    }
    hex::encode(h.finalize())
}

/// CSV `n,i,j_value,err`, ordered by `(n, i)`.
pub fn write_j_csv<'a, W: Write>(
    mut w: W,
    tables: impl IntoIterator<Item = &'a CoefficientTable>,
) -> std::io::Result<()> {
    let mut tables: Vec<&CoefficientTable> = tables.into_iter().collect();
    tables.sort_by_key(|t| t.n);
    writeln!(w, "n,i,j_value,err")?;
    for t in tables {
        for (k, (v, e)) in t.j.iter().zip(&t.j_err).enumerate() {
            writeln!(w, "{},{},{:?},{:?}", t.n, k + 1, v, e)?;
        }
    }
    Ok(())
}

/// CSV `n,g_value,err`, ordered by `n`.
pub fn write_g_csv<'a, W: Write>(
    mut w: W,
    tables: impl IntoIterator<Item = &'a CoefficientTable>,
) -> std::io::Result<()> {
    let mut tables: Vec<&CoefficientTable> = tables.into_iter().collect();
    tables.sort_by_key(|t| t.n);
    writeln!(w, "n,g_value,err")?;
    for t in tables {
        writeln!(w, "{},{:?},{:?}", t.n, t.g, t.g_err)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_shape_and_positivity() {
        let p = HurstParams::new(0.75, 1.0).unwrap();
        let t = CoefficientTable::build(&p, 12, &QuadratureConfig::default()).unwrap();
        assert_eq!(t.j.len(), 11);
        assert!(t.j.iter().all(|&v| v > 0.0) && t.g > 0.0);
        assert!(t.split_index >= 1 && t.split_index <= 11);
        assert_eq!(
            t.check_brackets(&p, &QuadratureConfig::default())
                .unwrap()
                .violations(),
            0
        );
        let root = CoefficientTable::build(&p, 1, &QuadratureConfig::default()).unwrap();
        assert!(root.j.is_empty() && root.turning_point.is_nan());
    }

    #[test]
    fn cache_returns_shared_tables() {
        let p = HurstParams::new(0.6, 1.0).unwrap();
        let cfg = QuadratureConfig::default();
        let cache = CoefficientCache::new();
        let a = cache.get_or_build(&p, 6, &cfg).unwrap();
        let b = cache.get_or_build(&p, 6, &cfg).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        let all = cache.levels(&p, 6, &cfg).unwrap();
        assert_eq!(cache.len(), 6);
        assert!(Arc::ptr_eq(&all[5], &a));
    }

    #[test]
    fn mismatch_is_reported() {
        let p = HurstParams::new(0.6, 1.0).unwrap();
        let t = CoefficientTable::build(&p, 3, &QuadratureConfig::default()).unwrap();
        assert!(matches!(t.check(&p, 4), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn csv_is_ordered() {
        let p = HurstParams::new(0.6, 1.0).unwrap();
        let cfg = QuadratureConfig::default();
        let t3 = CoefficientTable::build(&p, 3, &cfg).unwrap();
        let t2 = CoefficientTable::build(&p, 2, &cfg).unwrap();
        let mut out = Vec::new();
        write_j_csv(&mut out, [&t3, &t2]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let rows: Vec<&str> = text.lines().map(|l| &l[..3]).collect();
        assert_eq!(rows, ["n,i", "2,1", "3,1", "3,2"]);
    }
}
