use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::estimate::{McConfig, TailMode, CHUNK_SAMPLES};
use crate::error::{Error, Result};
use crate::hurst::HurstParams;
use crate::special::Neumaier;

/// Berry-Esseen constant for sums of independent, non-identical summands.
const BERRY_ESSEEN: f64 = 0.56;

/// Weighted Rademacher sum `sum_k c_k xi_k` evaluated eight signs at a time.
///
/// Sign `xi_k` is bit `(k - 1) mod 64` of the `(k - 1) / 64`-th `u64` drawn
/// from the generator (set bit = `+1`); each byte indexes a table of the 256
/// partial sums of its eight coefficients.
#[derive(Debug, Clone)]
pub struct SignTable {
    blocks: Vec<[f64; 256]>,
}

impl SignTable {
    pub fn new(coeffs: &[f64]) -> Self {
        let blocks = coeffs
            .chunks(8)
            .map(|c| {
                let mut t = [0.0; 256];
                for (byte, slot) in t.iter_mut().enumerate() {
                    *slot = c
                        .iter()
                        .enumerate()
                        .map(|(j, &v)| if byte >> j & 1 == 1 { v } else { -v })
                        .sum();
                }
                t
            })
            .collect();
        Self { blocks }
    }

    pub fn draw<R: RngCore>(&self, rng: &mut R) -> f64 {
        let mut y = 0.0;
        for group in self.blocks.chunks(8) {
            let word = rng.next_u64();
            for (b, table) in group.iter().enumerate() {
                y += table[(word >> (8 * b) & 0xff) as usize];
            }
        }
        y
    }
}

/// Run `f` on consecutive chunks of `total` draws. Chunk `c` owns the
/// generator seeded with `seed` on stream `c`, so results do not depend on
/// how chunks are scheduled across threads.
pub fn run_chunks<R, F>(total: u64, seed: u64, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> R + Sync,
{
    let chunks = total.div_ceil(CHUNK_SAMPLES);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let count = CHUNK_SAMPLES.min(total - c * CHUNK_SAMPLES);
            f(&mut rng, count)
        })
        .collect()
}

/// How the discarded part of the limit series is accounted for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailInfo {
    pub mode: TailMode,
    #[serde(rename = "K")]
    pub k: u64,
    /// Standard deviation of `2 g_H sum_{k>K} rho_h(k) xi_k`, certified bracket.
    pub sd_lower: f64,
    pub sd_upper: f64,
    /// Standard deviation of the normal substitute (zero when dropped).
    pub compensation_sd: f64,
    /// Kolmogorov distance between the substitute and the true tail
    /// (Berry-Esseen plus the effect of the variance bracket).
    pub kolmogorov: f64,
    /// Threshold shift `delta` used for the window when the tail is dropped.
    pub delta: f64,
}

/// Sampler for the truncated limit variable `Y_H^(K) = 2 g_H sum_{k<=K} rho_h(k) xi_k`.
#[derive(Debug, Clone)]
pub struct LimitSampler {
    params: HurstParams,
    seed: u64,
    coeffs: Vec<f64>,
    table: SignTable,
    tail: TailInfo,
}

impl LimitSampler {
    /// Chooses the smallest power-of-two `K >= 64` (capped at `max_k`) whose
    /// tail standard deviation is below tolerance. With a dropped tail an
    /// unreachable tolerance is an error; with a Gaussian tail the cap is
    /// used and the substitution error is reported instead.
    pub fn new(params: &HurstParams, cfg: &McConfig) -> Result<Self> {
        cfg.validate()?;
        let acov = params.autocovariance();
        let two_g = 2.0 * params.g_limit();
        let tol = cfg.tail_tolerance(params);
        let mut k = 64u64.min(cfg.max_k);
        let tail2 = loop {
            let t = acov.power_tail(2, k)?;
            if two_g * t.upper.sqrt() <= tol || k >= cfg.max_k {
                break t;
            }
            k = (2 * k).min(cfg.max_k);
        };
        let sd_lower = two_g * tail2.lower.sqrt();
        let sd_upper = two_g * tail2.upper.sqrt();
        let tail = match cfg.tail {
            TailMode::Drop => {
                if sd_upper > tol {
                    return Err(Error::Infeasible {
                        target: tol,
                        achieved: sd_upper,
                        cap: cfg.max_k,
                    });
                }
                TailInfo {
                    mode: TailMode::Drop,
                    k,
                    sd_lower,
                    sd_upper,
                    compensation_sd: 0.0,
                    kolmogorov: 0.0,
                    delta: 6.0 * sd_upper,
                }
            }
            TailMode::Gaussian => {
                let third = two_g.powi(3) * acov.power_tail(3, k)?.upper;
                let berry_esseen = BERRY_ESSEEN * third / sd_lower.powi(3);
                // sup_x |Phi(x/s1) - Phi(x/s2)| <= ln(s2/s1) / sqrt(2 pi e)
                let spread = (sd_upper / sd_lower).ln()
                    / (2.0 * std::f64::consts::PI * std::f64::consts::E).sqrt();
                TailInfo {
                    mode: TailMode::Gaussian,
                    k,
                    sd_lower,
                    sd_upper,
                    compensation_sd: two_g * tail2.midpoint().sqrt(),
                    kolmogorov: berry_esseen + spread,
                    delta: 0.0,
                }
            }
        };
        let coeffs: Vec<f64> = (1..=k).map(|i| two_g * acov.at(i)).collect();
        Ok(Self {
            params: *params,
            seed: cfg.seed,
            table: SignTable::new(&coeffs),
            coeffs,
            tail,
        })
    }

    pub fn params(&self) -> &HurstParams {
        &self.params
    }

    pub fn tail(&self) -> &TailInfo {
        &self.tail
    }

    pub fn k(&self) -> u64 {
        self.tail.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `2 g_H rho_h(k)` for `k = 1..=K`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Exact variance of the sampled variable, normal substitute included.
    pub fn variance(&self) -> f64 {
        let acc: Neumaier = self.coeffs.iter().map(|c| c * c).collect();
        acc.total() + self.tail.compensation_sd.powi(2)
    }

    pub fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        let y = self.table.draw(rng);
        if self.tail.compensation_sd > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            y + self.tail.compensation_sd * z
        } else {
            y
        }
    }

    /// The first `count` samples of the stream, in order.
    pub fn samples(&self, count: u64) -> Vec<f64> {
        run_chunks(count, self.seed, |rng, m| {
            (0..m).map(|_| self.draw(rng)).collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect()
    }

    /// Reduce `f(sample)` over `count` samples; per-chunk results are
    /// returned in chunk order.
    pub fn map_chunks<R, F>(&self, count: u64, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(&mut dyn Iterator<Item = f64>) -> R + Sync,
    {
        run_chunks(count, self.seed, |rng, m| {
            let mut it = (0..m).map(|_| self.draw(rng));
            f(&mut it)
        })
    }

    /// Sample mean and unbiased sample variance.
    pub fn moments(&self, count: u64) -> Moments {
        let parts = self.map_chunks(count, |it| {
            let mut s = Neumaier::default();
            let mut s2 = Neumaier::default();
            for y in it {
                s.add(y);
                s2.add(y * y);
            }
            (s, s2)
        });
        let (mut s, mut s2) = (Neumaier::default(), Neumaier::default());
        for (a, b) in &parts {
            s.merge(a);
            s2.merge(b);
        }
        let n = count as f64;
        let mean = s.total() / n;
        let variance = (s2.total() - n * mean * mean) / (n - 1.0).max(1.0);
        Moments {
            count,
            mean,
            variance,
        }
    }

    /// Empirical characteristic function `mean cos(v Y)` at each `v`.
    pub fn empirical_cf(&self, vs: &[f64], count: u64) -> Vec<f64> {
        let parts = self.map_chunks(count, |it| {
            let mut acc = vec![Neumaier::default(); vs.len()];
            for y in it {
                for (a, &v) in acc.iter_mut().zip(vs) {
                    a.add((v * y).cos());
                }
            }
            acc
        });
        let mut total = vec![Neumaier::default(); vs.len()];
        for part in &parts {
            for (t, p) in total.iter_mut().zip(part) {
                t.merge(p);
            }
        }
        total.iter().map(|t| t.total() / count as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub variance: f64,
}
