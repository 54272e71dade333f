//! Bounded FIFO experience replay with proportional prioritisation.
//!
//! Each occupied slot `i` carries a priority `p_i` and the sum tree stores
//! `p_i^alpha` at leaf `i`, so drawing a uniform number in `[0, total)` and
//! descending the tree selects slot `i` with probability
//! `p_i^alpha / sum_k p_k^alpha`.

mod buffer;
mod sum_tree;

pub use buffer::{
    BetaSchedule, BufferConfig, PrioritizedBuffer, PriorityForm, SampledBatch, SlotRef,
    Transition, UpdateReport,
};
pub use sum_tree::SumTree;
