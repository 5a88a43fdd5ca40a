use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{Graph, GraphError, NodeId, NodeSet};

/// A simple path and its length (hop count when unweighted, weight sum otherwise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub path: Vec<NodeId>,
    pub length: f64,
}

/// Relative tolerance used when comparing weighted path lengths.
const LEN_EPS: f64 = 1e-9;

pub(crate) fn len_cmp(a: f64, b: f64) -> Ordering {
    if (a - b).abs() <= LEN_EPS * a.abs().max(b.abs()).max(1.0) {
        Ordering::Equal
    } else {
        a.total_cmp(&b)
    }
}

/// Hop distances from `src` (None when unreachable).
pub fn bfs_distances(g: &Graph, src: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.node_count()];
    dist[src] = Some(0);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        let d = dist[u].unwrap();
        for &v in g.neighbors(u) {
            if dist[v].is_none() {
                dist[v] = Some(d + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// All-pairs hop distances by repeated BFS.
pub fn distance_matrix(g: &Graph) -> Vec<Vec<Option<usize>>> {
    (0..g.node_count()).map(|s| bfs_distances(g, s)).collect()
}

/// Nodes within `k` hops of `src`, in BFS order, with their distances.
pub(crate) fn bfs_within(g: &Graph, src: usize, k: usize) -> Vec<(usize, usize)> {
    let mut seen = vec![false; g.node_count()];
    seen[src] = true;
    let mut out = vec![(src, 0)];
    let mut head = 0;
    while head < out.len() {
        let (u, d) = out[head];
        head += 1;
        if d == k {
            continue;
        }
        for &v in g.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                out.push((v, d + 1));
            }
        }
    }
    out
}

pub fn k_hop_neighborhood(g: &Graph, v: &NodeId, k: usize) -> Result<NodeSet, GraphError> {
    let src = g.require(v)?;
    Ok(bfs_within(g, src, k).into_iter().map(|(i, _)| g.id(i).clone()).collect())
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Nodes and edges excluded from a search (used by Yen's spur computation).
#[derive(Default)]
pub(crate) struct Blocked {
    pub nodes: Vec<bool>,
    pub edges: HashSet<(usize, usize)>,
}

impl Blocked {
    fn node(&self, v: usize) -> bool {
        self.nodes.get(v).copied().unwrap_or(false)
    }

    fn edge(&self, a: usize, b: usize) -> bool {
        !self.edges.is_empty() && self.edges.contains(&(a.min(b), a.max(b)))
    }
}

/// Distances to `dst` honoring `blocked`; BFS when unweighted, Dijkstra otherwise.
fn distances_to(g: &Graph, dst: usize, blocked: &Blocked) -> Vec<f64> {
    let n = g.node_count();
    let mut dist = vec![f64::INFINITY; n];
    if blocked.node(dst) {
        return dist;
    }
    dist[dst] = 0.0;
    if !g.is_weighted() {
        let mut queue = VecDeque::from([dst]);
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                if dist[v].is_infinite() && !blocked.node(v) && !blocked.edge(u, v) {
                    dist[v] = dist[u] + 1.0;
                    queue.push_back(v);
                }
            }
        }
        return dist;
    }
    let mut heap = BinaryHeap::from([HeapItem(0.0, dst)]);
    while let Some(HeapItem(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for (v, w) in g.weighted_neighbors(u) {
            if blocked.node(v) || blocked.edge(u, v) {
                continue;
            }
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(HeapItem(nd, v));
            }
        }
    }
    dist
}

/// Shortest `src -> dst` path whose node sequence is lexicographically
/// smallest among all shortest paths, as indices plus exact weight sum.
pub(crate) fn lexmin_shortest(
    g: &Graph,
    src: usize,
    dst: usize,
    blocked: &Blocked,
) -> Option<(Vec<usize>, f64)> {
    let dist = distances_to(g, dst, blocked);
    if dist[src].is_infinite() {
        return None;
    }
    let mut path = vec![src];
    let mut length = 0.0;
    let mut cur = src;
    while cur != dst {
        // neighbors are sorted, so the first tight neighbor is the smallest id
        let (next, w) = g
            .weighted_neighbors(cur)
            .find(|&(v, w)| {
                !blocked.node(v)
                    && !blocked.edge(cur, v)
                    && dist[v].is_finite()
                    && len_cmp(dist[v] + w, dist[cur]) == Ordering::Equal
            })
            .expect("a tight edge exists on every shortest-path node");
        path.push(next);
        length += w;
        cur = next;
    }
    Some((path, length))
}

fn to_result(g: &Graph, path: &[usize], length: f64) -> PathResult {
    PathResult { path: path.iter().map(|&i| g.id(i).clone()).collect(), length }
}

/// Shortest path with ties broken by the lexicographically smallest node
/// sequence. `Ok(None)` when `u` and `v` are disconnected.
pub fn shortest_path(g: &Graph, u: &NodeId, v: &NodeId) -> Result<Option<PathResult>, GraphError> {
    let (s, t) = (g.require(u)?, g.require(v)?);
    Ok(lexmin_shortest(g, s, t, &Blocked::default()).map(|(p, len)| to_result(g, &p, len)))
}

fn path_cmp(a: &(Vec<usize>, f64), b: &(Vec<usize>, f64)) -> Ordering {
    len_cmp(a.1, b.1).then_with(|| a.0.cmp(&b.0))
}

/// Yen's algorithm: up to `k` loopless paths ordered by (length, node sequence).
pub(crate) fn yen_indices(g: &Graph, s: usize, t: usize, k: usize) -> Vec<(Vec<usize>, f64)> {
    let Some(first) = lexmin_shortest(g, s, t, &Blocked::default()) else {
        return Vec::new();
    };
    let mut found: Vec<(Vec<usize>, f64)> = vec![first];
    let mut candidates: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::from([found[0].0.clone()]);
    while found.len() < k {
        let prev = found.last().unwrap().0.clone();
        for i in 0..prev.len() - 1 {
            let root = &prev[..=i];
            let mut blocked = Blocked { nodes: vec![false; g.node_count()], edges: HashSet::new() };
            for (p, _) in &found {
                if p.len() > i + 1 && &p[..=i] == root {
                    blocked.edges.insert((p[i].min(p[i + 1]), p[i].max(p[i + 1])));
                }
            }
            for &r in &root[..i] {
                blocked.nodes[r] = true;
            }
            let Some((spur, spur_len)) = lexmin_shortest(g, prev[i], t, &blocked) else {
                continue;
            };
            let mut total: Vec<usize> = root[..i].to_vec();
            total.extend_from_slice(&spur);
            if seen.insert(total.clone()) {
                let root_len: f64 =
                    root.windows(2).map(|w| g.edge_weight(w[0], w[1]).unwrap()).sum();
                candidates.push((total, root_len + spur_len));
            }
        }
        let Some(best) = (0..candidates.len()).min_by(|&a, &b| path_cmp(&candidates[a], &candidates[b]))
        else {
            break;
        };
        found.push(candidates.swap_remove(best));
    }
    found
}

pub fn yen_k_shortest(
    g: &Graph,
    u: &NodeId,
    v: &NodeId,
    k: usize,
) -> Result<Vec<PathResult>, GraphError> {
    let (s, t) = (g.require(u)?, g.require(v)?);
    if s == t {
        return Err(GraphError::Parameter("yen_k_shortest needs distinct endpoints".into()));
    }
    if k == 0 {
        return Err(GraphError::Parameter("K must be positive".into()));
    }
    Ok(yen_indices(g, s, t, k).iter().map(|(p, len)| to_result(g, p, *len)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> NodeId {
        NodeId::new(s).unwrap()
    }

    fn names(p: &PathResult) -> Vec<&str> {
        p.path.iter().map(NodeId::as_str).collect()
    }

    #[test]
    fn shortest_path_basics() {
        let p3 = Graph::from_edges(&["a", "b", "c"], &[("a", "b"), ("b", "c")]).unwrap();
        let r = shortest_path(&p3, &id("a"), &id("c")).unwrap().unwrap();
        assert_eq!((names(&r), r.length), (vec!["a", "b", "c"], 2.0));
        let r = shortest_path(&p3, &id("b"), &id("b")).unwrap().unwrap();
        assert_eq!((names(&r), r.length), (vec!["b"], 0.0));
        assert!(shortest_path(&p3, &id("a"), &id("q")).is_err());

        let two = Graph::from_edges(&["a", "b", "c"], &[("a", "b")]).unwrap();
        assert_eq!(shortest_path(&two, &id("a"), &id("c")).unwrap(), None);
    }

    #[test]
    fn weighted_prefers_lighter_detour() {
        let g = Graph::from_weighted_edges(&[("a", "b", 1.0), ("b", "c", 1.0), ("a", "c", 3.0)]).unwrap();
        let r = shortest_path(&g, &id("a"), &id("c")).unwrap().unwrap();
        assert_eq!((names(&r), r.length), (vec!["a", "b", "c"], 2.0));
    }

    #[test]
    fn ties_break_lexicographically() {
        // two length-2 routes a-c-d and a-b-d: b < c wins
        let g = Graph::from_edges(&["a"], &[("a", "c"), ("c", "d"), ("a", "b"), ("b", "d")]).unwrap();
        let r = shortest_path(&g, &id("a"), &id("d")).unwrap().unwrap();
        assert_eq!(names(&r), vec!["a", "b", "d"]);
    }

    #[test]
    fn yen_diamond() {
        let g = Graph::from_weighted_edges(&[("a", "b", 1.0), ("b", "c", 1.0), ("a", "c", 3.0)]).unwrap();
        let paths = yen_k_shortest(&g, &id("a"), &id("c"), 2).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!((names(&paths[0]), paths[0].length), (vec!["a", "b", "c"], 2.0));
        assert_eq!((names(&paths[1]), paths[1].length), (vec!["a", "c"], 3.0));
    }

    #[test]
    fn yen_on_tree_returns_single_path() {
        let g = Graph::from_index_edges(6, &[(0, 1), (1, 2), (1, 3), (3, 4), (3, 5)]).unwrap();
        let paths = yen_k_shortest(&g, &NodeId::from_index(0), &NodeId::from_index(5), 5).unwrap();
        assert_eq!(paths.len(), 1);
    }

    #[test]
    fn yen_k1_matches_shortest_path_and_errors() {
        let g = crate::graph::generate_er(12, 0.3, 4).unwrap();
        let (u, v) = (NodeId::from_index(0), NodeId::from_index(7));
        let yen = yen_k_shortest(&g, &u, &v, 1).unwrap();
        let sp = shortest_path(&g, &u, &v).unwrap();
        assert_eq!(yen.first(), sp.as_ref());
        assert!(yen_k_shortest(&g, &u, &u, 2).is_err());
        assert!(yen_k_shortest(&g, &u, &v, 0).is_err());
        let split = Graph::from_index_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(yen_k_shortest(&split, &u, &NodeId::from_index(3), 3).unwrap().is_empty());
    }

    #[test]
    fn k_hop_cases() {
        let p5 = Graph::from_edges(&["a"], &[("a", "b"), ("b", "c"), ("c", "d"), ("d", "e")]).unwrap();
        let n0 = k_hop_neighborhood(&p5, &id("c"), 0).unwrap();
        assert_eq!(n0.into_iter().collect::<Vec<_>>(), vec![id("c")]);
        let n1 = k_hop_neighborhood(&p5, &id("c"), 1).unwrap();
        assert_eq!(n1.into_iter().collect::<Vec<_>>(), vec![id("b"), id("c"), id("d")]);
        assert!(k_hop_neighborhood(&p5, &id("z"), 1).is_err());
    }

    #[test]
    fn k_hop_matches_bfs_levels_on_ba() {
        let g = crate::graph::generate_ba(50, 2, 1).unwrap();
        let got = k_hop_neighborhood(&g, &NodeId::from_index(0), 2).unwrap();
        // level-by-level oracle
        let mut level: Vec<usize> = vec![0];
        let mut all: std::collections::BTreeSet<usize> = level.iter().copied().collect();
        for _ in 0..2 {
            let mut next = Vec::new();
            for &u in &level {
                for &v in g.neighbors(u) {
                    if all.insert(v) {
                        next.push(v);
                    }
                }
            }
            level = next;
        }
        let want: NodeSet = all.into_iter().map(|i| g.id(i).clone()).collect();
        assert_eq!(got, want);
    }
}
