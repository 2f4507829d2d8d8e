//! Market coefficients: the kernel `k_H`, the scaled weights `j_n^H(i)` and
//! `g_n^H`, their unscaled `N`-grid counterparts, and the structural
//! quantities `I_n`, `phi_n`, `x_n` and `i_n`.

mod kernel;
mod scaled;
mod table;

pub use kernel::{g_unscaled, j_unscaled, kernel};
pub use scaled::{
    g_bracket, g_coeff, i_weight, j_bracket, j_coeff, j_range, phi, turning_point, TurningPoint,
};
pub use table::{
    tables_hash, write_g_csv, write_j_csv, BracketEntry, BracketReport, CoefficientCache,
    CoefficientTable,
};
