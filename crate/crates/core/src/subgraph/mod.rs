//! Task-relevant subgraph extraction with capped, centrality-aware pruning.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::graph::paths::{bfs_within, yen_indices};
use crate::graph::{bfs_distances, Graph, GraphError, NodeId};
use crate::rag::{score_key, Tier, TieredBase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionConfig {
    pub k: usize,
    pub n_max: usize,
    pub yen_k: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self { k: 2, n_max: 25, yen_k: 3 }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<(), SubgraphError> {
        if self.n_max < 2 {
            return Err(SubgraphError::Config(format!("n_max must be at least 2, got {}", self.n_max)));
        }
        if self.yen_k < 1 {
            return Err(SubgraphError::Config("yen_k must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subgraph {
    pub graph: Graph,
    pub centers: Vec<NodeId>,
    /// Nodes on the extracted paths; empty for ego extraction.
    pub path_cover: Vec<NodeId>,
    /// Removed nodes in removal order.
    pub prune_log: Vec<NodeId>,
}

impl Subgraph {
    /// The whole graph as an unpruned view.
    pub fn whole(graph: Graph) -> Self {
        Self { graph, centers: vec![], path_cover: vec![], prune_log: vec![] }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SubgraphError {
    #[error(transparent)]
    Lookup(#[from] GraphError),
    #[error("{source_node} (component {source_component}) and {target} (component {target_component}) are disconnected")]
    Disconnected { source_node: NodeId, target: NodeId, source_component: usize, target_component: usize },
    #[error("{protected} path nodes exceed the cap of {n_max}")]
    InfeasibleCap { protected: usize, n_max: usize },
    #[error("invalid extraction config: {0}")]
    Config(String),
}

/// Sort key used by both pruning strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneKey {
    /// Hop distance to the centre; ego extraction only.
    pub dist: Option<usize>,
    pub tier: Tier,
    pub centrality: f64,
}

impl PruneKey {
    fn cmp_with(&self, a: &NodeId, other: &PruneKey, b: &NodeId) -> Ordering {
        // farther first, then less important tier, then lower pagerank, then id
        other
            .dist
            .cmp(&self.dist)
            .then(self.tier.importance().cmp(&other.tier.importance()))
            .then(score_key(self.centrality).cmp(&score_key(other.centrality)))
            .then(a.cmp(b))
    }
}

fn key_for(base: &TieredBase, v: &NodeId, dist: Option<usize>) -> PruneKey {
    PruneKey {
        dist,
        tier: base.tier(v).unwrap_or(Tier::PERIPHERAL),
        centrality: base.pagerank.get(v).unwrap_or(0.0),
    }
}

fn drop_prefix(sub: Subgraph, mut keyed: Vec<(NodeId, PruneKey)>, n_max: usize) -> Subgraph {
    let excess = sub.graph.node_count().saturating_sub(n_max);
    if excess == 0 {
        return sub;
    }
    keyed.sort_by(|(a, ka), (b, kb)| ka.cmp_with(a, kb, b));
    let removed: Vec<NodeId> = keyed.into_iter().take(excess).map(|(v, _)| v).collect();
    let gone: BTreeSet<&NodeId> = removed.iter().collect();
    let keep: Vec<&NodeId> = sub.graph.nodes().iter().filter(|v| !gone.contains(v)).collect();
    let graph = sub.graph.induced_subgraph(keep).expect("kept nodes come from the graph");
    let mut prune_log = sub.prune_log;
    prune_log.extend(removed);
    Subgraph { graph, centers: sub.centers, path_cover: sub.path_cover, prune_log }
}

/// Drops the farthest, least important nodes until `n_max` remain; `v` stays.
pub fn prune_ego(sub: Subgraph, v: &NodeId, base: &TieredBase, n_max: usize) -> Result<Subgraph, SubgraphError> {
    let c = sub.graph.require(v)?;
    if sub.graph.node_count() <= n_max {
        return Ok(sub);
    }
    let dist = bfs_distances(&sub.graph, c);
    let keyed = (0..sub.graph.node_count())
        .filter(|&i| i != c)
        .map(|i| {
            let id = sub.graph.id(i).clone();
            let k = key_for(base, &id, Some(dist[i].unwrap_or(usize::MAX)));
            (id, k)
        })
        .collect();
    Ok(drop_prefix(sub, keyed, n_max))
}

/// Drops the least important expansion nodes; path nodes are protected.
pub fn prune_multi(sub: Subgraph, base: &TieredBase, n_max: usize) -> Result<Subgraph, SubgraphError> {
    if sub.path_cover.len() > n_max {
        return Err(SubgraphError::InfeasibleCap { protected: sub.path_cover.len(), n_max });
    }
    if sub.graph.node_count() <= n_max {
        return Ok(sub);
    }
    let protected: BTreeSet<&NodeId> = sub.path_cover.iter().collect();
    let keyed = sub
        .graph
        .nodes()
        .iter()
        .filter(|v| !protected.contains(v))
        .map(|v| (v.clone(), key_for(base, v, None)))
        .collect();
    Ok(drop_prefix(sub, keyed, n_max))
}

/// The `k`-hop neighbourhood of `v`, pruned to `n_max` nodes.
pub fn extract_ego(g: &Graph, base: &TieredBase, v: &NodeId, cfg: &ExtractionConfig) -> Result<Subgraph, SubgraphError> {
    cfg.validate()?;
    let c = g.require(v)?;
    let ball: Vec<&NodeId> = bfs_within(g, c, cfg.k).into_iter().map(|(i, _)| g.id(i)).collect();
    let sub = Subgraph { graph: g.induced_subgraph(ball)?, centers: vec![v.clone()], path_cover: vec![], prune_log: vec![] };
    prune_ego(sub, v, base, cfg.n_max)
}

/// Union of the `yen_k` shortest `s`-`t` paths plus one hop, pruned to `n_max`.
pub fn extract_multi(
    g: &Graph,
    base: &TieredBase,
    s: &NodeId,
    t: &NodeId,
    cfg: &ExtractionConfig,
) -> Result<Subgraph, SubgraphError> {
    cfg.validate()?;
    let (si, ti) = (g.require(s)?, g.require(t)?);
    if si == ti {
        return Err(SubgraphError::Config(format!("source and target are both {s}")));
    }
    let paths = yen_indices(g, si, ti, cfg.yen_k);
    if paths.is_empty() {
        let comps = g.components();
        let label = |x: usize| comps.iter().position(|c| c.binary_search(&x).is_ok()).unwrap_or(usize::MAX);
        return Err(SubgraphError::Disconnected {
            source_node: s.clone(),
            target: t.clone(),
            source_component: label(si),
            target_component: label(ti),
        });
    }
    let cover: BTreeSet<usize> = paths.iter().flat_map(|(p, _)| p.iter().copied()).collect();
    if cover.len() > cfg.n_max {
        return Err(SubgraphError::InfeasibleCap { protected: cover.len(), n_max: cfg.n_max });
    }
    let mut expanded = cover.clone();
    for &v in &cover {
        expanded.extend(g.neighbors(v).iter().copied());
    }
    let graph = g.induced_subgraph(expanded.iter().map(|&i| g.id(i)))?;
    let sub = Subgraph {
        graph,
        centers: vec![s.clone(), t.clone()],
        path_cover: cover.iter().map(|&i| g.id(i).clone()).collect::<BTreeSet<_>>().into_iter().collect(),
        prune_log: vec![],
    };
    prune_multi(sub, base, cfg.n_max)
}

/// Extraction strategy chosen by entity count: none, one centre, or a pair.
///
/// Entity-free tasks see the whole graph when it fits, otherwise the ego view
/// around the highest-PageRank node.
pub fn extract_for_entities(
    g: &Graph,
    base: &TieredBase,
    entities: &[NodeId],
    cfg: &ExtractionConfig,
) -> Result<Subgraph, SubgraphError> {
    match entities {
        [] if g.node_count() <= cfg.n_max => Ok(Subgraph::whole(g.clone())),
        [] => {
            let top = base
                .pagerank
                .values
                .iter()
                .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(v, _)| v.clone())
                .ok_or(SubgraphError::Config("empty graph".into()))?;
            extract_ego(g, base, &top, cfg)
        }
        [v] => extract_ego(g, base, v, cfg),
        [s, t, ..] => extract_multi(g, base, s, t, cfg),
    }
}
