//! Adaptive Gauss-Kronrod quadrature with endpoint stretching.
//!
//! The kernel integrals of the market coefficients carry algebraic endpoint
//! behaviour of two kinds: weights `(x - a)^p` with `-1 < p < 0`, and kinks
//! `A + B (x - a)^g` with `0 < g < 1`. Both are removed by the substitution
//! `x = a + L t^q` with a suitable `q >= 1`, after which a globally adaptive
//! 7/15-point Gauss-Kronrod rule converges quickly.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Tolerances for every integral evaluated by the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureConfig {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let cfg = Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return domain(format!("abs_tol must be positive, got {}", self.abs_tol));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return domain(format!("rel_tol must be positive, got {}", self.rel_tol));
        }
        if self.max_subdivisions == 0 {
            return domain("max_subdivisions must be at least 1");
        }
        Ok(())
    }

    /// Accepted error for an integral of the given magnitude.
    pub fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }

    /// Same relative tolerance, absolute tolerance scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * factor,
            ..*self
        }
    }

    /// Stable 64-bit digest of the configuration, used as a cache key.
    pub fn digest(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325_u64;
        for word in [
            self.abs_tol.to_bits(),
            self.rel_tol.to_bits(),
            self.max_subdivisions as u64,
        ] {
            for byte in word.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

/// An integral value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn new(value: f64, error: f64) -> Self {
        Self { value, error }
    }

    pub fn scale(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            error: self.error * factor.abs(),
        }
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;

    fn add(self, rhs: Estimate) -> Estimate {
        Estimate {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
        }
    }
}

impl std::ops::Sub for Estimate {
    type Output = Estimate;

    fn sub(self, rhs: Estimate) -> Estimate {
        Estimate {
            value: self.value - rhs.value,
            error: self.error + rhs.error,
        }
    }
}

impl std::iter::Sum for Estimate {
    fn sum<I: Iterator<Item = Estimate>>(iter: I) -> Estimate {
        iter.fold(Estimate::default(), |a, b| a + b)
    }
}

/// Endpoint treatment for [`integrate_stretched`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Endpoint {
    /// Integrand is smooth at the endpoint.
    Regular,
    /// Substitute `x = end ± L t^q`; `q >= 1`.
    Stretch(f64),
}

impl Endpoint {
    const MAX_STRETCH: f64 = 8.0;

    /// Integrand behaves like `|x - end|^p * smooth` with `-1 < p < 0`.
    pub fn weight(p: f64) -> Self {
        debug_assert!(p > -1.0);
        if p >= 0.0 {
            Endpoint::Regular
        } else {
            Endpoint::Stretch((1.0 / (1.0 + p)).min(Self::MAX_STRETCH))
        }
    }

    /// Integrand behaves like `A + B |x - end|^g + ...` with `0 < g < 1`.
    pub fn kink(g: f64) -> Self {
        debug_assert!(g > 0.0);
        if g >= 1.0 {
            Endpoint::Regular
        } else {
            Endpoint::Stretch((1.0 / g).min(Self::MAX_STRETCH))
        }
    }
}

// Kronrod abscissae on [0, 1) of the 15-point rule; odd indices are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    let round = 50.0 * f64::EPSILON * res_abs;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && error < round {
        error = round;
    }
    Segment { a, b, value, error }
}

/// Globally adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    if !(a.is_finite() && b.is_finite()) {
        return domain("integration limits must be finite");
    }
    if a == b {
        return Ok(Estimate::default());
    }
    let first = gk15(&f, a, b);
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::with_capacity(64);
    heap.push(first);
    let mut splits = 0usize;
    while error > cfg.tolerance(value) {
        if splits >= cfg.max_subdivisions {
            return Err(Error::NonConvergence {
                estimate: value,
                error,
                requested: cfg.tolerance(value),
            });
        }
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // cannot resolve further in double precision
            return Err(Error::NonConvergence {
                estimate: value,
                error,
                requested: cfg.tolerance(value),
            });
        }
        let left = gk15(&f, worst.a, mid);
        let right = gk15(&f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        splits += 1;
        if splits.is_multiple_of(64) {
            // re-sum to shed drift from the running updates
            value = heap.iter().map(|s| s.value).sum();
            error = heap.iter().map(|s| s.error).sum();
        }
    }
    value = heap.iter().map(|s| s.value).sum();
    error = heap.iter().map(|s| s.error).sum();
    Ok(Estimate { value, error })
}

/// Integrate `f` over `[a, b]` with the given endpoint substitutions.
///
/// When both ends are stretched the interval is split at its midpoint and
/// each half is stretched toward its own end.
pub fn integrate_stretched<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    left: Endpoint,
    right: Endpoint,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    if !(a < b) {
        if a == b {
            return Ok(Estimate::default());
        }
        return domain(format!("integration needs a < b, got [{a}, {b}]"));
    }
    match (left, right) {
        (Endpoint::Regular, Endpoint::Regular) => integrate(&f, a, b, cfg),
        (Endpoint::Stretch(q), Endpoint::Regular) => stretch_left(&f, a, b, q, cfg),
        (Endpoint::Regular, Endpoint::Stretch(q)) => stretch_right(&f, a, b, q, cfg),
        (Endpoint::Stretch(ql), Endpoint::Stretch(qr)) => {
            let mid = 0.5 * (a + b);
            let half = cfg.scaled(0.5);
            Ok(stretch_left(&f, a, mid, ql, &half)? + stretch_right(&f, mid, b, qr, &half)?)
        }
    }
}

fn stretch_left<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    q: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let len = b - a;
    integrate(
        |t: f64| {
            if t <= 0.0 {
                return 0.0;
            }
            let tq1 = t.powf(q - 1.0);
            let x = a + len * tq1 * t;
            if x <= a {
                return 0.0;
            }
            f(x) * q * len * tq1
        },
        0.0,
        1.0,
        cfg,
    )
}

fn stretch_right<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    q: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let len = b - a;
    integrate(
        |t: f64| {
            if t <= 0.0 {
                return 0.0;
            }
            let tq1 = t.powf(q - 1.0);
            let x = b - len * tq1 * t;
            if x >= b {
                return 0.0;
            }
            f(x) * q * len * tq1
        },
        0.0,
        1.0,
        cfg,
    )
}
