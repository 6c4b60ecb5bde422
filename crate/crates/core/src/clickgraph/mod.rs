//! Co-click bipartite graph and personalized random walk with restart.

mod graph;
mod rwr;

pub use graph::{build_graph, build_graph_until, cf_iqf, ClickEdge, ClickGraph, MIN_EDGE_WEIGHT};
pub use rwr::{candidates, rwr, RwrParams, RwrResult};

#[cfg(test)]
mod tests;
