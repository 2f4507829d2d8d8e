//! Fractional binary markets: kernel coefficients, exact arbitrage censuses on
//! the binary tree, and numerical diagnostics for the limit objects of the
//! rescaled disturbed random walk.

// Quadrature nodes and reference values keep their published digits; the
// negated comparisons also reject NaN.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod coefficients;
pub mod error;
pub mod hurst;
pub mod market;
pub mod quadrature;
pub mod special;

pub use asymptotics::{McConfig, McEstimate};
pub use coefficients::CoefficientTable;
pub use error::{Error, Result};
pub use hurst::{HurstParams, RhoTailSum};
pub use market::{ArbitrageCensus, DriftSpec, MarketSpec, NodeId};
pub use quadrature::{Estimate, QuadratureConfig};
