use std::io::Write;

use serde::Serialize;

use super::proportion::SUM_SQ_TARGET;
use crate::coefficients::CoefficientTable;
use crate::error::Result;
use crate::hurst::{rho_sq_sum, HurstParams};
use crate::quadrature::Estimate;
use crate::special::Neumaier;

/// Variances of the two parts of the walk split at `i_n`: the early part
/// `sum_{i<i_n} j_n(i) xi_i` and the late part `sum_{i>=i_n} j_n(i) xi_i`.
///
/// The late part read backwards, `sum_k j_n(n-k) xi'_k`, has the same law;
/// its variance tends to that of the limit variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitVariances {
    pub n: usize,
    pub split_index: usize,
    pub var_bar: f64,
    pub var_hat: f64,
}

impl SplitVariances {
    pub fn total(&self) -> f64 {
        self.var_bar + self.var_hat
    }
}

pub fn split_variances(params: &HurstParams, table: &CoefficientTable) -> Result<SplitVariances> {
    table.check(params, table.n)?;
    let cut = table.split_index.saturating_sub(1).min(table.j.len());
    let (early, late) = table.j.split_at(cut);
    let sq = |xs: &[f64]| xs.iter().map(|v| v * v).collect::<Neumaier>().total();
    Ok(SplitVariances {
        n: table.n,
        split_index: table.split_index,
        var_bar: sq(early),
        var_hat: sq(late),
    })
}

/// `Var(Y_H) = 4 g_H^2 sum_k rho_h(k)^2` with its certified error.
pub fn limit_variance(params: &HurstParams) -> Result<Estimate> {
    let s = rho_sq_sum(params.h(), SUM_SQ_TARGET)?;
    let f = 4.0 * params.g_limit().powi(2);
    Ok(Estimate::new(f * s.total(), f * s.total_error()))
}

/// CSV `n,split_index,var_bar,var_hat,total`.
pub fn write_split_csv<W: Write>(mut w: W, rows: &[SplitVariances]) -> std::io::Result<()> {
    writeln!(w, "n,split_index,var_bar,var_hat,total")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:?},{:?},{:?}",
            r.n,
            r.split_index,
            r.var_bar,
            r.var_hat,
            r.total()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::QuadratureConfig;

    #[test]
    fn parts_add_up() {
        let p = HurstParams::new(0.7, 1.0).unwrap();
        let t = CoefficientTable::build(&p, 60, &QuadratureConfig::default()).unwrap();
        let s = split_variances(&p, &t).unwrap();
        assert!((s.total() - t.past_variance()).abs() <= 1e-15 * t.past_variance());
        assert!(s.var_bar > 0.0 && s.var_hat > 0.0);
    }
}
