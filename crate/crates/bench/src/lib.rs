//! Shared fixtures for the criterion benches.

use graphvista::graph::{generate_ba, Graph, NodeId};

/// Barabási–Albert graph with `m = 2`, fixed seed.
pub fn ba(n: usize) -> Graph {
    generate_ba(n, 2, 17).expect("valid generator parameters")
}

/// A node pair far apart in `g`: the first and last nodes in index order.
pub fn far_pair(g: &Graph) -> (NodeId, NodeId) {
    let ids = g.nodes();
    (ids[0].clone(), ids[ids.len() - 1].clone())
}
