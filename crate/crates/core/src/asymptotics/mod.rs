//! Diagnostics for the limit objects: sampling the limit variable `Y_H`,
//! limit and finite-level arbitrage proportions, split variances, the
//! characteristic function and its decay, and exceedance frequencies.

mod charfn;
mod estimate;
mod proportion;
mod sampler;
mod variance;

pub use charfn::{
    characteristic_function, default_decay_start, fit_decay, log_characteristic_function, CfValue,
    DecayFit, DEFAULT_CF_CAP,
};
pub use estimate::{
    Interval, McConfig, McEstimate, TailMode, CHUNK_SAMPLES, DEFAULT_MAX_K, GENERATOR,
};
pub use proportion::{
    exceedance_frequency, finite_level_proportion, limit_proportion, limit_proportion_with,
    write_exceedance_csv, ExceedanceRow, FiniteMode, LimitProportion, RegimeBounds,
    EXACT_LEVEL_LIMIT, SUM_SQ_TARGET,
};
pub use sampler::{run_chunks, LimitSampler, Moments, SignTable, TailInfo};
pub use variance::{limit_variance, split_variances, write_split_csv, SplitVariances};
