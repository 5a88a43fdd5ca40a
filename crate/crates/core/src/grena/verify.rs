//! Step-wise checking of trace claims against the full graph.
//!
//! Everything here is recomputed from adjacency with local routines so that a
//! bug in the trace builder cannot vouch for itself.

use std::collections::{BTreeSet, VecDeque};

use crate::graph::{edge_key, Graph, NodeId};
use crate::oracles::{GoldAnswer, ReferenceSolver, TaskInstance};
use crate::reasoning::{Claim, ReasoningStep, Subject};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("step {step}: {detail}")]
pub struct ClaimViolation {
    pub step: usize,
    pub detail: String,
}

fn hops(g: &Graph, s: usize) -> Vec<Option<usize>> {
    let mut d = vec![None; g.node_count()];
    d[s] = Some(0);
    let mut q = VecDeque::from([s]);
    while let Some(u) = q.pop_front() {
        let du = d[u].unwrap();
        for &v in g.neighbors(u) {
            if d[v].is_none() {
                d[v] = Some(du + 1);
                q.push_back(v);
            }
        }
    }
    d
}

/// Single-source distances; hop counts when unweighted, array Dijkstra otherwise.
fn distances(g: &Graph, s: usize) -> Vec<f64> {
    if !g.is_weighted() {
        return hops(g, s).into_iter().map(|d| d.map_or(f64::INFINITY, |d| d as f64)).collect();
    }
    let n = g.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[s] = 0.0;
    for _ in 0..n {
        let Some(u) = (0..n).filter(|&i| !done[i] && dist[i].is_finite()).min_by(|&a, &b| dist[a].total_cmp(&dist[b]))
        else {
            break;
        };
        done[u] = true;
        for (v, w) in g.weighted_neighbors(u) {
            if dist[u] + w < dist[v] {
                dist[v] = dist[u] + w;
            }
        }
    }
    dist
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn component_labels(g: &Graph) -> Vec<usize> {
    let n = g.node_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (u, v, _) in g.edges() {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    (0..n).map(|i| find(&mut parent, i)).collect()
}

fn names(g: &Graph, idx: impl IntoIterator<Item = usize>) -> Vec<NodeId> {
    let mut v: Vec<NodeId> = idx.into_iter().map(|i| g.id(i).clone()).collect();
    v.sort();
    v.dedup();
    v
}

struct Truth<'g> {
    g: &'g Graph,
}

impl Truth<'_> {
    fn node(&self, v: &NodeId) -> Result<usize, String> {
        self.g.index(v).ok_or_else(|| format!("node {v} is not in the graph"))
    }

    fn layer(&self, v: &NodeId, d: usize) -> Result<BTreeSet<usize>, String> {
        let h = hops(self.g, self.node(v)?);
        Ok((0..h.len()).filter(|&i| h[i] == Some(d)).collect())
    }

    fn among(&self, v: usize) -> Vec<(NodeId, NodeId)> {
        let g = self.g;
        let nb = g.neighbors(v);
        let mut out = vec![];
        for &a in nb {
            for &b in nb {
                if a < b && g.neighbors(a).contains(&b) {
                    out.push(edge_key(g.id(a), g.id(b)));
                }
            }
        }
        out.sort();
        out
    }

    fn triangle_edges(&self) -> Vec<(NodeId, NodeId)> {
        let g = self.g;
        let mut out = vec![];
        for (u, v, _) in g.edges() {
            let nu: BTreeSet<usize> = g.neighbors(u).iter().copied().collect();
            if g.neighbors(v).iter().any(|w| nu.contains(w)) {
                out.push(edge_key(g.id(u), g.id(v)));
            }
        }
        out.sort();
        out
    }

    fn parity(&self) -> Vec<usize> {
        let g = self.g;
        let labels = component_labels(g);
        let mut depth = vec![0; g.node_count()];
        for root in 0..g.node_count() {
            // the smallest index of each component is where the layering starts
            if labels[root] == root {
                for (i, d) in hops(g, root).into_iter().enumerate() {
                    if let Some(d) = d {
                        depth[i] = d % 2;
                    }
                }
            }
        }
        depth
    }

    fn nodes(&self, s: &Subject, t: &TaskInstance) -> Result<Vec<NodeId>, String> {
        let g = self.g;
        Ok(match s {
            Subject::Endpoints => t.entities.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect(),
            Subject::Neighbors { node } => names(g, g.neighbors(self.node(node)?).iter().copied()),
            Subject::HopLayer { node, distance } => names(g, self.layer(node, *distance)?),
            Subject::CommonHopLayer { a, b, distance } => {
                let lb = self.layer(b, *distance)?;
                names(g, self.layer(a, *distance)?.intersection(&lb).copied())
            }
            Subject::TriangleNodes => {
                let mut v: Vec<NodeId> =
                    self.triangle_edges().into_iter().flat_map(|(a, b)| [a, b]).collect::<BTreeSet<_>>().into_iter().collect();
                v.sort();
                v
            }
            Subject::EvenSide => {
                let p = self.parity();
                names(g, (0..g.node_count()).filter(|&i| p[i] == 0))
            }
            Subject::DegreeAtLeast { k } => names(g, (0..g.node_count()).filter(|&i| g.neighbors(i).len() >= *k)),
            Subject::ComponentOf { node } => {
                let l = component_labels(g);
                let c = l[self.node(node)?];
                names(g, (0..g.node_count()).filter(|&i| l[i] == c))
            }
            Subject::LargestComponent => {
                let l = component_labels(g);
                let mut size = vec![0usize; g.node_count()];
                for &c in &l {
                    size[c] += 1;
                }
                // ties go to the component holding the smaller id
                let mut best: Option<usize> = None;
                for c in 0..g.node_count() {
                    if size[c] > 0 && best.is_none_or(|b| size[c] > size[b] || (size[c] == size[b] && g.id(c) < g.id(b))) {
                        best = Some(c);
                    }
                }
                names(g, (0..g.node_count()).filter(|&i| Some(l[i]) == best))
            }
            other => return Err(format!("{other:?} is not a node-set subject")),
        })
    }

    fn edges(&self, s: &Subject) -> Result<Vec<(NodeId, NodeId)>, String> {
        let g = self.g;
        Ok(match s {
            Subject::EdgesAmongNeighbors { node } => self.among(self.node(node)?),
            Subject::TriangleEdges => self.triangle_edges(),
            Subject::SameSideEdges => {
                let p = self.parity();
                let mut v: Vec<_> =
                    g.edges().filter(|&(u, v, _)| p[u] == p[v]).map(|(u, v, _)| edge_key(g.id(u), g.id(v))).collect();
                v.sort();
                v
            }
            other => return Err(format!("{other:?} is not an edge-set subject")),
        })
    }

    fn count(&self, s: &Subject, t: &TaskInstance) -> Result<i64, String> {
        let g = self.g;
        let comps = || component_labels(g).into_iter().collect::<BTreeSet<_>>().len() as i64;
        Ok(match s {
            Subject::EdgeCount => g.edge_count() as i64,
            Subject::NodeCount => g.node_count() as i64,
            Subject::ComponentCount => comps(),
            Subject::CycleRank => g.edge_count() as i64 - g.node_count() as i64 + comps(),
            Subject::EdgesAmongNeighbors { .. } | Subject::TriangleEdges | Subject::SameSideEdges => self.edges(s)?.len() as i64,
            other => self.nodes(other, t)?.len() as i64,
        })
    }

    fn prefix(&self, source: &NodeId, target: &NodeId, path: &[NodeId]) -> Result<(), String> {
        let g = self.g;
        if path.first() != Some(source) {
            return Err(format!("path does not start at {source}"));
        }
        let idx: Vec<usize> = path.iter().map(|v| self.node(v)).collect::<Result<_, _>>()?;
        let mut walked = 0.0;
        for w in idx.windows(2) {
            walked += g.edge_weight(w[0], w[1]).ok_or_else(|| format!("{} and {} are not adjacent", g.id(w[0]), g.id(w[1])))?;
        }
        let from_src = distances(g, idx[0]);
        let last = *idx.last().unwrap();
        let to_target = distances(g, self.node(target)?);
        let total = from_src[self.node(target)?];
        if !total.is_finite() {
            return Err(format!("{target} is unreachable from {source}"));
        }
        if !close(walked, from_src[last]) || !close(walked + to_target[last], total) {
            return Err(format!("{} is not a prefix of a shortest path to {target}", path.iter().map(NodeId::as_str).collect::<Vec<_>>().join(" -> ")));
        }
        Ok(())
    }

    fn verdict(&self, t: &TaskInstance, a: &GoldAnswer) -> Result<(), String> {
        if let GoldAnswer::NodeSequence { value, length } = a {
            let (s, e) = (&t.entities[0], &t.entities[1]);
            if value.last() != Some(e) {
                return Err(format!("path does not end at {e}"));
            }
            self.prefix(s, e, value)?;
            let walked: f64 = value
                .windows(2)
                .map(|w| self.g.edge_weight(self.g.index(&w[0]).unwrap(), self.g.index(&w[1]).unwrap()).unwrap())
                .sum();
            return match length {
                Some(l) if !close(*l, walked) => Err(format!("stated length {l} differs from walked {walked}")),
                _ => Ok(()),
            };
        }
        ReferenceSolver::new(self.g).verify(t, a).map_err(|m| m.to_string())
    }

    fn claim(&self, c: &Claim, t: &TaskInstance) -> Result<(), String> {
        let mismatch = |what: &str| format!("{what} does not match the graph");
        match c {
            Claim::Nodes { subject, nodes } => {
                let mut got = nodes.clone();
                got.sort();
                (got == self.nodes(subject, t)?).then_some(()).ok_or_else(|| mismatch(&format!("{subject:?} node set")))
            }
            Claim::Edges { subject, edges } => {
                let mut got: Vec<_> = edges.iter().map(|(a, b)| edge_key(a, b)).collect();
                got.sort();
                (got == self.edges(subject)?).then_some(()).ok_or_else(|| mismatch(&format!("{subject:?} edge set")))
            }
            Claim::Count { subject, value } => {
                let want = self.count(subject, t)?;
                (want == *value).then_some(()).ok_or_else(|| format!("{subject:?} count is {want}, stated {value}"))
            }
            Claim::PathPrefix { source, target, path } => self.prefix(source, target, path),
            Claim::Verdict { answer } => self.verdict(t, answer),
        }
    }
}

/// Checks every claim of every step, and that the final answer is correct.
pub fn verify_trace(
    g: &Graph,
    t: &TaskInstance,
    steps: &[ReasoningStep],
    answer: &GoldAnswer,
) -> Result<(), ClaimViolation> {
    let truth = Truth { g };
    for s in steps {
        for c in &s.claims {
            truth.claim(c, t).map_err(|detail| ClaimViolation { step: s.index, detail })?;
        }
    }
    truth.verdict(t, answer).map_err(|detail| ClaimViolation { step: steps.len(), detail: format!("final answer: {detail}") })
}

/// First violated claim, if any, without failing fast on the answer.
pub fn first_false_claim(g: &Graph, t: &TaskInstance, steps: &[ReasoningStep]) -> Option<ClaimViolation> {
    let truth = Truth { g };
    steps.iter().find_map(|s| {
        s.claims.iter().find_map(|c| truth.claim(c, t).err().map(|detail| ClaimViolation { step: s.index, detail }))
    })
}
