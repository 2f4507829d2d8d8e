//! Special functions: gamma, Hurwitz zeta, and a compensated accumulator.

use crate::error::{domain, Result};

/// Gamma function on the positive reals.
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Bernoulli numbers B_2, B_4, ..., B_26.
const BERNOULLI_EVEN: [f64; 13] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
];

/// Hurwitz zeta value together with a bound on its truncation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaValue {
    pub value: f64,
    pub error: f64,
}

/// Hurwitz zeta `sum_{k>=0} (a + k)^(-s)` for real `s > 1`, `a > 0`.
///
/// Euler-Maclaurin summation: direct terms until the shifted argument reaches
/// `shift`, then the integral, the half term and up to 13 Bernoulli
/// corrections. For real arguments the remainder is bounded by the first
/// omitted correction, which is returned as `error` (plus rounding).
pub fn hurwitz_zeta(s: f64, a: f64) -> Result<ZetaValue> {
    if !(s > 1.0) || !s.is_finite() {
        return domain(format!("hurwitz zeta needs s > 1, got {s}"));
    }
    if !(a > 0.0) || !a.is_finite() {
        return domain(format!("hurwitz zeta needs a > 0, got {a}"));
    }
    let shift = 24.0_f64.max(2.0 * s);
    let mut head = Neumaier::default();
    let mut x = a;
    while x < shift {
        head.add((-s * x.ln()).exp());
        x += 1.0;
    }
    let ln_x = x.ln();
    let x_pow = (-s * ln_x).exp();
    let mut acc = Neumaier::default();
    acc.add(x * x_pow / (s - 1.0));
    acc.add(0.5 * x_pow);
    // term_j = B_2j / (2j)! * s (s+1) ... (s+2j-2) * x^(-s-2j+1)
    let mut rising = s;
    let mut power = x_pow / x;
    let mut factorial = 2.0;
    let mut last = f64::INFINITY;
    let mut error = 0.0;
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        let term = b / factorial * rising * power;
        if term.abs() < 1e-18 * acc.total().abs() || term.abs() > last {
            error = term.abs();
            break;
        }
        acc.add(term);
        last = term.abs();
        let m = 2.0 * (j as f64 + 1.0);
        rising *= (s + m - 1.0) * (s + m);
        power /= x * x;
        factorial *= (m + 1.0) * (m + 2.0);
        error = last;
    }
    let value = head.total() + acc.total();
    Ok(ZetaValue {
        value,
        error: error + 4.0 * f64::EPSILON * value.abs(),
    })
}

/// Riemann zeta for real `s > 1`.
pub fn riemann_zeta(s: f64) -> Result<f64> {
    hurwitz_zeta(s, 1.0).map(|z| z.value)
}

/// Neumaier's variant of Kahan compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct Neumaier {
    sum: f64,
    compensation: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }

    pub fn merge(&mut self, other: &Neumaier) {
        self.add(other.sum);
        self.add(other.compensation);
    }
}

impl FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}
