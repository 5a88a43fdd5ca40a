//! Undirected graph representation and the algorithms the rest of the
//! pipeline is built on.
//!
//! Node identifiers are opaque strings restricted to `[A-Za-z0-9_]+`. They
//! carry a canonical total order: purely numeric ids compare numerically
//! and sort before alphanumeric ids, which compare lexicographically. Every
//! tie-break in the crate uses this order, so `"2" < "10" < "a"`.

pub(crate) mod centrality;
mod generate;
mod io;
pub(crate) mod paths;

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use centrality::{betweenness, pagerank, pagerank_default, CentralityKind, CentralityScores, PageRankParams};
pub use generate::{generate_ba, generate_er};
pub use io::GraphFile;
pub use paths::{
    bfs_distances, distance_matrix, k_hop_neighborhood, shortest_path, yen_k_shortest, PathResult,
};

/// Set of node ids in canonical order.
pub type NodeSet = BTreeSet<NodeId>;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("invalid node id {0:?}: ids must match [A-Za-z0-9_]+")]
    InvalidNodeId(String),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("self-loop on node {0}")]
    SelfLoop(String),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(String, String),
    #[error("edge ({0}, {1}) has non-positive or non-finite weight {2}")]
    InvalidWeight(String, String, f64),
    #[error("mixed weighted and unweighted edges")]
    MixedWeights,
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("pagerank did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Opaque node identifier with the canonical ordering described in the module docs.
#[derive(Clone)]
pub struct NodeId {
    text: Arc<str>,
    numeric: Option<u64>,
}

impl NodeId {
    pub fn new(text: impl AsRef<str>) -> Result<Self, GraphError> {
        let text = text.as_ref();
        if text.is_empty() || !text.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_') {
            return Err(GraphError::InvalidNodeId(text.to_string()));
        }
        let numeric = if text.bytes().all(|b| b.is_ascii_digit()) {
            text.parse::<u64>().ok()
        } else {
            None
        };
        Ok(Self { text: Arc::from(text), numeric })
    }

    pub fn from_index(i: usize) -> Self {
        Self { text: Arc::from(i.to_string()), numeric: Some(i as u64) }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

impl PartialEq for NodeId {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text
    }
}

impl Eq for NodeId {}

impl std::hash::Hash for NodeId {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.text.hash(state)
    }
}

impl Ord for NodeId {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.numeric, other.numeric) {
            (Some(a), Some(b)) => a.cmp(&b).then_with(|| self.text.cmp(&other.text)),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => self.text.cmp(&other.text),
        }
    }
}

impl PartialOrd for NodeId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.text)
    }
}

impl Serialize for NodeId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        NodeId::new(s).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<&str> for NodeId {
    type Error = GraphError;
    fn try_from(s: &str) -> Result<Self, GraphError> {
        NodeId::new(s)
    }
}

/// Canonical undirected edge key: endpoints ordered so that `0 <= 1`.
pub fn edge_key(a: &NodeId, b: &NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// Immutable undirected simple graph.
///
/// Nodes are stored in canonical order, so node index order and id order
/// agree. Adjacency lists are sorted by index.
#[derive(Clone, PartialEq)]
pub struct Graph {
    ids: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    adj: Vec<Vec<usize>>,
    weights: Option<Vec<Vec<f64>>>,
    edge_count: usize,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("nodes", &self.ids.len())
            .field("edges", &self.edge_count)
            .field("weighted", &self.is_weighted())
            .finish()
    }
}

/// Incremental graph construction with validation at [`GraphBuilder::build`].
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    nodes: BTreeSet<NodeId>,
    edges: Vec<(NodeId, NodeId, Option<f64>)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node(&mut self, id: impl AsRef<str>) -> Result<&mut Self, GraphError> {
        self.nodes.insert(NodeId::new(id)?);
        Ok(self)
    }

    pub fn add_node(&mut self, id: NodeId) -> &mut Self {
        self.nodes.insert(id);
        self
    }

    /// Adds an edge; endpoints must be declared with [`GraphBuilder::node`] or
    /// [`GraphBuilder::add_node`] before `build`.
    pub fn add_edge(&mut self, a: NodeId, b: NodeId, weight: Option<f64>) -> &mut Self {
        self.edges.push((a, b, weight));
        self
    }

    pub fn build(self) -> Result<Graph, GraphError> {
        let ids: Vec<NodeId> = self.nodes.into_iter().collect();
        let index: HashMap<NodeId, usize> =
            ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        let n = ids.len();
        let weighted = self.edges.first().map(|e| e.2.is_some()).unwrap_or(false);
        let mut pairs: Vec<(usize, usize, f64)> = Vec::with_capacity(self.edges.len());
        for (a, b, w) in self.edges {
            if w.is_some() != weighted {
                return Err(GraphError::MixedWeights);
            }
            let ia = *index.get(&a).ok_or_else(|| GraphError::UnknownNode(a.to_string()))?;
            let ib = *index.get(&b).ok_or_else(|| GraphError::UnknownNode(b.to_string()))?;
            if ia == ib {
                return Err(GraphError::SelfLoop(a.to_string()));
            }
            let w = w.unwrap_or(1.0);
            if !(w.is_finite() && w > 0.0) {
                return Err(GraphError::InvalidWeight(a.to_string(), b.to_string(), w));
            }
            pairs.push((ia.min(ib), ia.max(ib), w));
        }
        pairs.sort_by_key(|x| (x.0, x.1));
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(GraphError::DuplicateEdge(
                    ids[w[0].0].to_string(),
                    ids[w[0].1].to_string(),
                ));
            }
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(a, b, w) in &pairs {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        for list in &mut adj {
            list.sort_by_key(|&(v, _)| v);
        }
        let weights = weighted
            .then(|| adj.iter().map(|l| l.iter().map(|&(_, w)| w).collect()).collect());
        Ok(Graph {
            ids,
            index,
            adj: adj.into_iter().map(|l| l.into_iter().map(|(v, _)| v).collect()).collect(),
            weights,
            edge_count: pairs.len(),
        })
    }
}

impl Graph {
    /// Builds a graph from string ids; convenient for fixtures.
    pub fn from_edges<S: AsRef<str>>(nodes: &[S], edges: &[(S, S)]) -> Result<Self, GraphError> {
        let mut b = GraphBuilder::new();
        for n in nodes {
            b.node(n)?;
        }
        for (u, v) in edges {
            let (u, v) = (NodeId::new(u)?, NodeId::new(v)?);
            b.add_node(u.clone()).add_node(v.clone()).add_edge(u, v, None);
        }
        b.build()
    }

    /// Weighted variant of [`Graph::from_edges`]; endpoints are declared implicitly.
    pub fn from_weighted_edges<S: AsRef<str>>(edges: &[(S, S, f64)]) -> Result<Self, GraphError> {
        let mut b = GraphBuilder::new();
        for (u, v, w) in edges {
            let (u, v) = (NodeId::new(u)?, NodeId::new(v)?);
            b.add_node(u.clone()).add_node(v.clone()).add_edge(u, v, Some(*w));
        }
        b.build()
    }

    /// Graph on nodes `0..n` with the given index pairs.
    pub fn from_index_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut b = GraphBuilder::new();
        for i in 0..n {
            b.add_node(NodeId::from_index(i));
        }
        for &(u, v) in edges {
            b.add_edge(NodeId::from_index(u), NodeId::from_index(v), None);
        }
        b.build()
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn id(&self, idx: usize) -> &NodeId {
        &self.ids[idx]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        NodeId::new(id).ok().and_then(|n| self.index.get(&n).copied())
    }

    pub fn index(&self, id: &NodeId) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Like [`Graph::index`] but maps a miss to [`GraphError::UnknownNode`].
    pub fn require(&self, id: &NodeId) -> Result<usize, GraphError> {
        self.index(id).ok_or_else(|| GraphError::UnknownNode(id.to_string()))
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.index.contains_key(id)
    }

    pub fn neighbors(&self, idx: usize) -> &[usize] {
        &self.adj[idx]
    }

    pub fn degree(&self, idx: usize) -> usize {
        self.adj[idx].len()
    }

    /// Sum of incident weights (equals degree when unweighted).
    pub fn weighted_degree(&self, idx: usize) -> f64 {
        match &self.weights {
            Some(w) => w[idx].iter().sum(),
            None => self.adj[idx].len() as f64,
        }
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    /// Weight of edge `(a, b)`; `None` when absent. Unweighted edges weigh 1.
    pub fn edge_weight(&self, a: usize, b: usize) -> Option<f64> {
        let pos = self.adj[a].binary_search(&b).ok()?;
        Some(self.weights.as_ref().map_or(1.0, |w| w[a][pos]))
    }

    /// Neighbors of `a` paired with the connecting edge weight.
    pub fn weighted_neighbors(&self, a: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.adj[a]
            .iter()
            .enumerate()
            .map(move |(pos, &b)| (b, self.weights.as_ref().map_or(1.0, |w| w[a][pos])))
    }

    /// Edges as index pairs `(u, v, w)` with `u < v`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ids.len()).flat_map(move |u| {
            self.weighted_neighbors(u).filter(move |&(v, _)| v > u).map(move |(v, w)| (u, v, w))
        })
    }

    /// Edges as canonical id pairs, sorted.
    pub fn edge_ids(&self) -> Vec<(NodeId, NodeId)> {
        self.edges().map(|(u, v, _)| (self.ids[u].clone(), self.ids[v].clone())).collect()
    }

    pub fn node_set(&self) -> NodeSet {
        self.ids.iter().cloned().collect()
    }

    /// Subgraph induced by `keep`; weights are preserved.
    pub fn induced_subgraph<'a, I>(&self, keep: I) -> Result<Graph, GraphError>
    where
        I: IntoIterator<Item = &'a NodeId>,
    {
        let mut mask = vec![false; self.ids.len()];
        for id in keep {
            mask[self.require(id)?] = true;
        }
        Ok(self.induced_by_mask(&mask))
    }

    pub(crate) fn induced_by_mask(&self, mask: &[bool]) -> Graph {
        let mut b = GraphBuilder::new();
        for (i, id) in self.ids.iter().enumerate() {
            if mask[i] {
                b.add_node(id.clone());
            }
        }
        for (u, v, w) in self.edges() {
            if mask[u] && mask[v] {
                b.add_edge(
                    self.ids[u].clone(),
                    self.ids[v].clone(),
                    self.weights.is_some().then_some(w),
                );
            }
        }
        b.build().expect("induced subgraph of a valid graph is valid")
    }

    /// Connected components as sorted index lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.ids.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut head = 0;
            while head < comp.len() {
                let u = comp[head];
                head += 1;
                for &v in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}
