//! Exact solution counts and mean values over full, dyadic and smooth ranges.

mod cache;
mod fit;
mod mean_value;
mod range;
mod solve;

pub use cache::{CountCache, CACHE_ENV};
pub use fit::{slope_estimate, SlopeFit};
pub use mean_value::{
    block_bound_diagnostic, mean_value_I, mean_value_J, mean_value_system, Block,
    BlockBoundDiagnostic, BlockBoundPoint, BlockPartition,
};
pub use range::{enumerate_range, enumerate_range_with_budget, RangeKind, RangeSpec, DEFAULT_ETA, DEFAULT_RANGE_BUDGET};
pub use solve::{
    count_over, count_over_split, count_solutions, default_split, CountResult, Method,
    DEFAULT_BRUTE_BUDGET, DEFAULT_MITM_BUDGET,
};
