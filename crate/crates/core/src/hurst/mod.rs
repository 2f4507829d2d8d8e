//! Hurst-parameter constants and the autocovariance series of the limit variable.

mod critical;
mod rho;

pub use critical::{solve_critical_hurst, CriticalHurst, BISECTION_WIDTH};
pub use rho::{
    rho, rho_sq_sum, rho_sq_sum_with_cap, Autocovariance, RhoTailSum, TailBracket, DEFAULT_K_CAP,
};

use serde::Serialize;

use crate::error::{domain, Result};
use crate::special::gamma;

/// `c_H = sqrt(2H Γ(3/2 - H) / (Γ(H + 1/2) Γ(2 - 2H)))`.
pub fn normalizing_constant(hurst: f64) -> Result<f64> {
    check_hurst(hurst)?;
    let num = 2.0 * hurst * gamma(1.5 - hurst);
    let den = gamma(hurst + 0.5) * gamma(2.0 - 2.0 * hurst);
    Ok((num / den).sqrt())
}

fn check_hurst(hurst: f64) -> Result<()> {
    if !(hurst > 0.5 && hurst < 1.0) {
        return domain(format!("Hurst parameter must lie in (1/2, 1), got {hurst}"));
    }
    Ok(())
}

/// Validated Hurst parameter and volatility with every derived constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HurstParams {
    hurst: f64,
    sigma: f64,
    /// `h = H/2 + 1/4`, the exponent of the autocovariance of the limit variable.
    h: f64,
    /// `H - 1/2`.
    alpha: f64,
    /// `2 - 2h`, the decay exponent of `rho_h`.
    beta: f64,
    c_h: f64,
    /// `c_H (H - 1/2)`.
    kernel_constant: f64,
    /// `sigma c_H / (H + 1/2)`, the limit of `g_n`.
    g_limit: f64,
}

impl HurstParams {
    pub fn new(hurst: f64, sigma: f64) -> Result<Self> {
        check_hurst(hurst)?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return domain(format!("volatility must be positive, got {sigma}"));
        }
        let c_h = normalizing_constant(hurst)?;
        let h = hurst / 2.0 + 0.25;
        Ok(Self {
            hurst,
            sigma,
            h,
            alpha: hurst - 0.5,
            beta: 2.0 - 2.0 * h,
            c_h,
            kernel_constant: c_h * (hurst - 0.5),
            g_limit: sigma * c_h / (hurst + 0.5),
        })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `c_H`.
    pub fn c_h(&self) -> f64 {
        self.c_h
    }

    /// `C_H = c_H (H - 1/2)`.
    pub fn kernel_constant(&self) -> f64 {
        self.kernel_constant
    }

    /// `g_H`.
    pub fn g_limit(&self) -> f64 {
        self.g_limit
    }

    pub fn autocovariance(&self) -> Autocovariance {
        Autocovariance::new(self.h).expect("h of a valid Hurst parameter is in range")
    }

    /// Bit-exact key used by coefficient caches.
    pub(crate) fn key(&self) -> (u64, u64) {
        (self.hurst.to_bits(), self.sigma.to_bits())
    }
}
