//! Bernoulli pin environments and the block renormalisation: box-empty
//! bounds, the scales `M` and `K`, block indicators and the growth of the
//! shells `C_n`.

mod blocks;
mod bounds;
mod growth;

pub use blocks::{block_indicators, BlockGrid, BlockIndicatorField};
pub use bounds::{
    bernoulli_relative_entropy, box_empty_mc, box_empty_prob_bound, choose_k, choose_m, entropy_tail_bound,
    inner_box_empty_bound, target_empty_prob, McEstimate, AnalyticK,
};
pub use growth::{growth_experiment, GrowthConfig, GrowthRow, GrowthStats, GROWTH_CSV_HEADER};
