//! The long-range random-cluster model on windows of `Z` and `Z+`.

pub mod chain;
pub mod exact;
pub mod export;
pub mod field;
pub mod fold;
pub mod graph;
pub mod sampler;
pub mod union_find;

pub use chain::{dominance_chain_check, ChainConfig, ChainReport, LinkStatus};
pub use exact::{dominance_check_exact, exact_rc_distribution, rc_weight, DominanceOutcome, EdgeSpace};
pub use field::{EdgeProbabilityField, EdgeRule};
pub use fold::fold_map;
pub use graph::RCGraphState;
pub use sampler::{dominance_check_mc, percolation_proxy, BernoulliSampler, EsSampler, GraphSampler, IncreasingFn, McConfig};
pub use union_find::DisjointSet;
