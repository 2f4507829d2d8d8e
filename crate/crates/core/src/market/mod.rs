//! The `N`-period fractional binary market: node values, the no-arbitrage
//! test, exact censuses of arbitrage points and paths, and monotone reach.

mod census;
mod drift;
mod node;
mod reach;

pub use census::{
    census, census_with_cache, level_census, level_census_naive, path_census, ArbitrageCensus,
    LevelCount, PathCount, QuantizedLevel, DEFAULT_ENUMERATION_CAP,
};
pub use drift::DriftSpec;
pub use node::{
    is_arbitrage, node_values, stock_path, MarketSpec, NodeId, NodeValues, StockPath, MAX_HORIZON,
};
pub use reach::{monotone_reach, reach_node, ReachLevel, ReachSearch, DEFAULT_PREFIX_LEN};
