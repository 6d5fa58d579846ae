//! Exact max-flow, bidirectional flows between vertex sets, max-cost
//! circulations, and path decomposition.

mod bidir;
mod decompose;
mod mincost;
mod network;

pub use bidir::{
    bidirectional_max_flow, bidirectional_vertex_flow, lemma_counters, vertex_unsaturated_bound, BidirOutcome,
    LemmaCounters, SaturatedFlow, TerminalPath, VertexOutcome,
};
pub use decompose::{decompose_flow, FlowPath, PathDecomposition};
pub use mincost::{max_cost_circulation, max_cost_circulation_with, MaxCostCirculation};
pub use network::{CapacityScale, FlowNetwork, FlowResult};
