use std::collections::{BTreeMap, VecDeque};
use std::sync::LazyLock;

use regex::Regex;

use super::{RagError, Tier};
use crate::graph::{edge_key, Graph, GraphBuilder, NodeId};

/// The structural content of an entry, independent of its text.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryShape {
    pub anchor: NodeId,
    pub tier: Tier,
    pub radius: usize,
    /// Members including the anchor, sorted.
    pub nodes: Vec<NodeId>,
    /// Induced edges `(u, v, weight)` with `u < v`, sorted.
    pub edges: Vec<(NodeId, NodeId, Option<f64>)>,
}

fn hop_distances(shape: &EntryShape) -> BTreeMap<&NodeId, usize> {
    let mut adj: BTreeMap<&NodeId, Vec<&NodeId>> = BTreeMap::new();
    for (u, v, _) in &shape.edges {
        adj.entry(u).or_default().push(v);
        adj.entry(v).or_default().push(u);
    }
    let mut dist = BTreeMap::from([(&shape.anchor, 0)]);
    let mut queue = VecDeque::from([&shape.anchor]);
    while let Some(u) = queue.pop_front() {
        let d = dist[u];
        for &w in adj.get(u).map(Vec::as_slice).unwrap_or_default() {
            if !dist.contains_key(w) {
                dist.insert(w, d + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Canonical entry text.
///
/// Neighbours are every member but the anchor, in id order. Each edge is
/// written nearer-endpoint first, and edges are listed by distance from the
/// anchor, so the anchor's own edges lead.
pub fn serialize_entry(shape: &EntryShape) -> String {
    let dist = hop_distances(shape);
    let far = usize::MAX;
    let neighbors: Vec<&str> = shape.nodes.iter().filter(|v| **v != shape.anchor).map(NodeId::as_str).collect();
    let mut pairs: Vec<(usize, usize, &NodeId, &NodeId, Option<f64>)> = shape
        .edges
        .iter()
        .map(|(u, v, w)| {
            let (du, dv) = (dist.get(u).copied().unwrap_or(far), dist.get(v).copied().unwrap_or(far));
            if dv < du {
                (dv, du, v, u, *w)
            } else {
                (du, dv, u, v, *w)
            }
        })
        .collect();
    pairs.sort_by(|a, b| (a.0, a.1, a.2, a.3).cmp(&(b.0, b.1, b.2, b.3)));
    let edges: Vec<String> = pairs
        .iter()
        .map(|(_, _, u, v, w)| match w {
            Some(w) => format!("({u},{v}:{w})"),
            None => format!("({u},{v})"),
        })
        .collect();
    let or_none = |s: String| if s.is_empty() { "none".to_string() } else { s };
    format!(
        "Node {} (tier {}): neighbors {}; edges within radius {}: {}.",
        shape.anchor,
        shape.tier,
        or_none(neighbors.join(", ")),
        shape.radius,
        or_none(edges.join(", "))
    )
}

static ENTRY_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^Node (\w+) \(tier ([123])\): neighbors (none|[\w, ]+); edges within radius (\d+): (.*)\.$").unwrap()
});
static PAIR_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\((\w+),(\w+)(?::([^)]+))?\)").unwrap());

/// Inverse of [`serialize_entry`].
pub fn parse_entry(text: &str) -> Result<EntryShape, RagError> {
    let bad = |m: &str| RagError::Format(format!("{m}: {text:?}"));
    let caps = ENTRY_RE.captures(text.trim()).ok_or_else(|| bad("not an entry"))?;
    let id = |s: &str| NodeId::new(s).map_err(|_| bad("bad node id"));
    let anchor = id(&caps[1])?;
    let tier = Tier::new(caps[2].parse().unwrap()).ok_or_else(|| bad("bad tier"))?;
    let radius = caps[4].parse().map_err(|_| bad("bad radius"))?;
    let mut nodes = vec![anchor.clone()];
    if &caps[3] != "none" {
        for s in caps[3].split(", ") {
            nodes.push(id(s)?);
        }
    }
    nodes.sort();
    let mut edges = Vec::new();
    if &caps[5] != "none" {
        for p in PAIR_RE.captures_iter(&caps[5]) {
            let (u, v) = edge_key(&id(&p[1])?, &id(&p[2])?);
            let w = match p.get(3) {
                Some(w) => Some(w.as_str().parse::<f64>().map_err(|_| bad("bad weight"))?),
                None => None,
            };
            edges.push((u, v, w));
        }
    }
    edges.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    Ok(EntryShape { anchor, tier, radius, nodes, edges })
}

static FULL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^Full graph: nodes (none|[\w, ]+); edges (.*)\.$").unwrap());
static SUMMARY_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^Graph summary: \|V\|=(\d+), \|E\|=(\d+), components=(\d+)\.$").unwrap());

/// Inverse of [`full_graph_text`](super::full_graph_text).
pub fn parse_full_graph(text: &str) -> Result<Graph, RagError> {
    let bad = |m: &str| RagError::Format(format!("{m}: {text:?}"));
    let caps = FULL_RE.captures(text.trim()).ok_or_else(|| bad("not a full-graph record"))?;
    let mut b = GraphBuilder::new();
    if &caps[1] != "none" {
        for s in caps[1].split(", ") {
            b.node(s)?;
        }
    }
    if &caps[2] != "none" {
        for p in PAIR_RE.captures_iter(&caps[2]) {
            let w = match p.get(3) {
                Some(w) => Some(w.as_str().parse::<f64>().map_err(|_| bad("bad weight"))?),
                None => None,
            };
            b.add_edge(NodeId::new(&p[1])?, NodeId::new(&p[2])?, w);
        }
    }
    Ok(b.build()?)
}

/// `(|V|, |E|, components)` from a summary record.
pub fn parse_summary(text: &str) -> Result<(usize, usize, usize), RagError> {
    let caps = SUMMARY_RE
        .captures(text.trim())
        .ok_or_else(|| RagError::Format(format!("not a summary record: {text:?}")))?;
    let n = |i: usize| caps[i].parse::<usize>().map_err(|e| RagError::Format(e.to_string()));
    Ok((n(1)?, n(2)?, n(3)?))
}
