use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{Graph, GraphError, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentralityKind {
    Pagerank,
    Betweenness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityScores {
    pub kind: CentralityKind,
    pub values: BTreeMap<NodeId, f64>,
}

impl CentralityScores {
    fn from_vec(g: &Graph, kind: CentralityKind, values: Vec<f64>) -> Self {
        Self { kind, values: g.nodes().iter().cloned().zip(values).collect() }
    }

    pub fn get(&self, id: &NodeId) -> Option<f64> {
        self.values.get(id).copied()
    }

    /// Values in canonical node order.
    pub fn to_vec(&self) -> Vec<f64> {
        self.values.values().copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankParams {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        Self { damping: 0.85, tol: 1e-9, max_iter: 200 }
    }
}

/// PageRank by power iteration on the undirected topology.
///
/// Each node spreads its rank evenly over its neighbors; isolated nodes spread
/// uniformly over all nodes. Iteration stops once the L1 change between
/// successive vectors drops below `tol`.
pub fn pagerank(g: &Graph, params: PageRankParams) -> Result<CentralityScores, GraphError> {
    let values = pagerank_values(g, params)?;
    Ok(CentralityScores::from_vec(g, CentralityKind::Pagerank, values))
}

pub fn pagerank_default(g: &Graph) -> Result<CentralityScores, GraphError> {
    pagerank(g, PageRankParams::default())
}

pub(crate) fn pagerank_values(g: &Graph, p: PageRankParams) -> Result<Vec<f64>, GraphError> {
    if !(p.damping > 0.0 && p.damping < 1.0) {
        return Err(GraphError::Parameter(format!("damping {} outside (0, 1)", p.damping)));
    }
    if p.max_iter == 0 {
        return Err(GraphError::Parameter("max_iter must be positive".into()));
    }
    let n = g.node_count();
    if n == 0 {
        return Ok(Vec::new());
    }
    let nf = n as f64;
    let mut x = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..p.max_iter {
        let dangling: f64 = (0..n).filter(|&u| g.degree(u) == 0).map(|u| x[u]).sum();
        let base = (1.0 - p.damping) / nf + p.damping * dangling / nf;
        for (v, slot) in next.iter_mut().enumerate() {
            let inflow: f64 = g.neighbors(v).iter().map(|&u| x[u] / g.degree(u) as f64).sum();
            *slot = base + p.damping * inflow;
        }
        residual = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if residual < p.tol {
            let total: f64 = x.iter().sum();
            x.iter_mut().for_each(|v| *v /= total);
            return Ok(x);
        }
    }
    Err(GraphError::Convergence { iterations: p.max_iter, residual })
}

/// Exact betweenness (Brandes) over unweighted shortest paths, endpoints
/// excluded, each unordered pair counted once.
pub fn betweenness(g: &Graph) -> CentralityScores {
    CentralityScores::from_vec(g, CentralityKind::Betweenness, betweenness_values(g))
}

pub(crate) fn betweenness_values(g: &Graph) -> Vec<f64> {
    let n = g.node_count();
    let mut cb = vec![0.0; n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    let mut delta = vec![0.0; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::with_capacity(n);
    for s in 0..n {
        order.clear();
        for v in 0..n {
            preds[v].clear();
            sigma[v] = 0.0;
            dist[v] = -1;
            delta[v] = 0.0;
        }
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in g.neighbors(v) {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        for &w in order.iter().rev() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                cb[w] += delta[w];
            }
        }
    }
    cb.iter_mut().for_each(|v| *v /= 2.0);
    cb
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(g: &Graph, s: &str) -> NodeId {
        g.nodes()[g.index_of(s).unwrap()].clone()
    }

    #[test]
    fn cycle_is_uniform() {
        let c4 = Graph::from_index_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let pr = pagerank_default(&c4).unwrap();
        for v in pr.values.values() {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn star_hub_dominates() {
        let g = Graph::from_edges(&["h"], &[("h", "a"), ("h", "b"), ("h", "c"), ("h", "d")]).unwrap();
        let pr = pagerank_default(&g).unwrap();
        let hub = pr.get(&ids(&g, "h")).unwrap();
        let leaves: Vec<f64> = ["a", "b", "c", "d"].iter().map(|l| pr.get(&ids(&g, l)).unwrap()).collect();
        assert!(leaves.iter().all(|&l| l < hub));
        assert!(leaves.windows(2).all(|w| w[0] == w[1]));
        assert!((pr.values.values().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pagerank_rejects_bad_params_and_reports_residual() {
        let g = Graph::from_index_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let bad = PageRankParams { damping: 1.0, ..Default::default() };
        assert!(matches!(pagerank(&g, bad), Err(GraphError::Parameter(_))));
        let starved = PageRankParams { tol: 0.0, max_iter: 3, ..Default::default() };
        match pagerank(&g, starved) {
            Err(GraphError::Convergence { iterations: 3, residual }) => assert!(residual >= 0.0),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn isolated_nodes_share_dangling_mass() {
        let g = Graph::from_index_edges(3, &[(0, 1)]).unwrap();
        let pr = pagerank_default(&g).unwrap().to_vec();
        assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(pr.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn betweenness_small_cases() {
        let p3 = Graph::from_edges(&["a", "b", "c"], &[("a", "b"), ("b", "c")]).unwrap();
        assert_eq!(betweenness(&p3).to_vec(), vec![0.0, 1.0, 0.0]);
        let k4 = Graph::from_index_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        assert!(betweenness(&k4).to_vec().iter().all(|&v| v == 0.0));
        let s4 = Graph::from_index_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        assert_eq!(betweenness(&s4).to_vec(), vec![6.0, 0.0, 0.0, 0.0, 0.0]);
    }
}
