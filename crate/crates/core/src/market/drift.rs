use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Grid resolution used for the sup-norm of a polynomial drift.
const SUP_GRID: usize = 10_000;

/// Deterministic continuous drift `a(t)` on `[0, 1]`.
///
/// Text form: `zero`, `const:c` or `poly:c0,c1,...` for `a(t) = sum c_m t^m`.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum DriftSpec {
    #[default]
    Zero,
    Constant(f64),
    Polynomial(Vec<f64>),
}

impl DriftSpec {
    /// `a(t)`.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            DriftSpec::Zero => 0.0,
            DriftSpec::Constant(c) => *c,
            DriftSpec::Polynomial(cs) => cs.iter().rev().fold(0.0, |acc, &c| acc * t + c),
        }
    }

    /// Per-period drift `a_n^(N) = a(n/N) / N`.
    pub fn step(&self, n: usize, big_n: usize) -> f64 {
        self.eval(n as f64 / big_n as f64) / big_n as f64
    }

    /// `max |a(t)|` over a uniform grid of `[0, 1]` (both ends included).
    pub fn sup_norm(&self) -> f64 {
        match self {
            DriftSpec::Zero => 0.0,
            DriftSpec::Constant(c) => c.abs(),
            DriftSpec::Polynomial(_) => (0..=SUP_GRID)
                .map(|k| self.eval(k as f64 / SUP_GRID as f64).abs())
                .fold(0.0, f64::max),
        }
    }

    /// `sum |c_m|`, an upper bound on the sup-norm.
    pub fn sup_bound(&self) -> f64 {
        match self {
            DriftSpec::Zero => 0.0,
            DriftSpec::Constant(c) => c.abs(),
            DriftSpec::Polynomial(cs) => cs.iter().map(|c| c.abs()).sum(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            DriftSpec::Zero => true,
            DriftSpec::Constant(c) => *c == 0.0,
            DriftSpec::Polynomial(cs) => cs.iter().all(|&c| c == 0.0),
        }
    }
}

fn parse_real(text: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("invalid drift coefficient {text:?}")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!(
            "drift coefficient must be finite, got {text:?}"
        )));
    }
    Ok(v)
}

impl FromStr for DriftSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "zero" {
            return Ok(DriftSpec::Zero);
        }
        if let Some(rest) = s.strip_prefix("const:") {
            return Ok(DriftSpec::Constant(parse_real(rest)?));
        }
        if let Some(rest) = s.strip_prefix("poly:") {
            let cs = rest
                .split(',')
                .map(parse_real)
                .collect::<Result<Vec<_>>>()?;
            return Ok(DriftSpec::Polynomial(cs));
        }
        Err(Error::Parse(format!(
            "drift must be `zero`, `const:c` or `poly:c0,c1,...`, got {s:?}"
        )))
    }
}

impl fmt::Display for DriftSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriftSpec::Zero => write!(f, "zero"),
            DriftSpec::Constant(c) => write!(f, "const:{c:?}"),
            DriftSpec::Polynomial(cs) => {
                write!(f, "poly:")?;
                for (k, c) in cs.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c:?}")?;
                }
                Ok(())
            }
        }
    }
}

impl Serialize for DriftSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}
