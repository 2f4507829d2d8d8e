use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{domain, Result};
use crate::hurst::HurstParams;

/// Name recorded in every sampled estimate.
pub const GENERATOR: &str = "chacha8/seed_from_u64/stream=chunk";

/// Samples drawn from one generator stream.
pub const CHUNK_SAMPLES: u64 = 1 << 14;

/// Default largest truncation index of the limit series used for sampling.
pub const DEFAULT_MAX_K: u64 = 4096;

/// Treatment of the discarded tail `sum_{k>K} rho_h(k) xi_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TailMode {
    /// Replace the tail by an independent normal variable of equal variance.
    Gaussian,
    /// Drop the tail; `K` must bring its standard deviation below tolerance.
    Drop,
}

/// Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    /// Target standard deviation of the discarded tail; `None` means `1e-4 g_H`.
    pub tail_sd_tol: Option<f64>,
    pub confidence: f64,
    pub tail: TailMode,
    pub max_k: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            seed: 0,
            tail_sd_tol: None,
            confidence: 0.99,
            tail: TailMode::Gaussian,
            max_k: DEFAULT_MAX_K,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return domain("sample count must be positive");
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return domain(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            ));
        }
        if let Some(tol) = self.tail_sd_tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return domain(format!("tail tolerance must be positive, got {tol}"));
            }
        }
        if self.max_k < 1 {
            return domain("truncation cap must be at least 1");
        }
        Ok(())
    }

    /// Resolved tail tolerance.
    pub fn tail_tolerance(&self, params: &HurstParams) -> f64 {
        self.tail_sd_tol.unwrap_or(1e-4 * params.g_limit())
    }
}

/// Interval construction used for `ci`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Interval {
    Normal,
    Wilson,
    Exact,
}

/// A proportion estimate with its sampling and truncation uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub ci: [f64; 2],
    pub samples: u64,
    #[serde(rename = "K")]
    pub k: u64,
    pub seed: u64,
    pub generator: String,
    /// Interval containing the untruncated proportion up to sampling error.
    pub bias_window: [f64; 2],
    pub confidence: f64,
    pub interval: Interval,
}

impl McEstimate {
    pub fn ci_low(&self) -> f64 {
        self.ci[0]
    }

    pub fn ci_high(&self) -> f64 {
        self.ci[1]
    }

    /// Estimate from `hits` successes in `samples` draws; normal interval,
    /// or Wilson when fewer than 30 successes or failures were seen.
    pub fn from_counts(hits: u64, samples: u64, confidence: f64, k: u64, seed: u64) -> Self {
        let n = samples as f64;
        let p = hits as f64 / n;
        let stderr = (p * (1.0 - p) / n).sqrt();
        let z = Normal::standard().inverse_cdf(0.5 + confidence / 2.0);
        let (interval, lo, hi) = if p.min(1.0 - p) * n < 30.0 {
            let z2 = z * z;
            let denom = 1.0 + z2 / n;
            let centre = (p + z2 / (2.0 * n)) / denom;
            let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
            (Interval::Wilson, centre - half, centre + half)
        } else {
            (Interval::Normal, p - z * stderr, p + z * stderr)
        };
        Self {
            p_hat: p,
            stderr,
            ci: [lo.clamp(0.0, p), hi.clamp(p, 1.0)],
            samples,
            k,
            seed,
            generator: GENERATOR.to_string(),
            bias_window: [p, p],
            confidence,
            interval,
        }
    }

    pub(crate) fn exact(hits: u64, total: u64, k: u64) -> Self {
        let p = hits as f64 / total as f64;
        Self {
            p_hat: p,
            stderr: 0.0,
            ci: [p, p],
            samples: total,
            k,
            seed: 0,
            generator: "exact-enumeration".to_string(),
            bias_window: [p, p],
            confidence: 1.0,
            interval: Interval::Exact,
        }
    }
}
