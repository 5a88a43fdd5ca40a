use std::collections::VecDeque;

use crate::graph::{bfs_distances, Graph, NodeId};

use super::{ComponentOfQuery, GoldAnswer};

/// Two-colouring of `g` (`false`/`true` per node index), or `None` when an odd
/// cycle exists.
pub fn bipartition(g: &Graph) -> Option<Vec<bool>> {
    colour(g).ok()
}

/// An odd cycle, in walk order, when `g` is not bipartite.
pub fn odd_cycle(g: &Graph) -> Option<Vec<NodeId>> {
    let (parent, depth, (u, w)) = colour(g).err()?;
    let cyc = tree_cycle(&parent, &depth, u, w);
    Some(cyc.into_iter().map(|i| g.id(i).clone()).collect())
}

type BfsForest = (Vec<usize>, Vec<usize>, (usize, usize));

fn colour(g: &Graph) -> Result<Vec<bool>, BfsForest> {
    let n = g.node_count();
    let mut side: Vec<Option<bool>> = vec![None; n];
    let mut parent = vec![usize::MAX; n];
    let mut depth = vec![0; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        if side[s].is_some() {
            continue;
        }
        side[s] = Some(false);
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            let su = side[u].unwrap();
            for &w in g.neighbors(u) {
                match side[w] {
                    None => {
                        side[w] = Some(!su);
                        parent[w] = u;
                        depth[w] = depth[u] + 1;
                        queue.push_back(w);
                    }
                    Some(sw) if sw == su => {
                        // finish labelling parents is unnecessary: both ends are already in the tree
                        return Err((parent, depth, (u, w)));
                    }
                    Some(_) => {}
                }
            }
        }
    }
    Ok(side.into_iter().map(|s| s.unwrap()).collect())
}

/// Cycle closed by the non-tree edge `u-w`: tree path from `u` up to the
/// common ancestor, then back down to `w`.
fn tree_cycle(parent: &[usize], depth: &[usize], u: usize, w: usize) -> Vec<usize> {
    let (mut a, mut b) = (u, w);
    let mut left = vec![a];
    let mut right = vec![b];
    while depth[a] > depth[b] {
        a = parent[a];
        left.push(a);
    }
    while depth[b] > depth[a] {
        b = parent[b];
        right.push(b);
    }
    while a != b {
        a = parent[a];
        b = parent[b];
        left.push(a);
        right.push(b);
    }
    right.pop();
    left.extend(right.into_iter().rev());
    left
}

/// Rotation/reflection of a cycle that starts at its smallest node and
/// continues towards the smaller of that node's two cycle neighbours.
fn canonical_cycle(mut c: Vec<usize>) -> Vec<usize> {
    let pos = c.iter().enumerate().min_by_key(|&(_, &v)| v).map(|(i, _)| i).unwrap();
    c.rotate_left(pos);
    if c.len() > 2 && c[c.len() - 1] < c[1] {
        c[1..].reverse();
    }
    c
}

/// The smallest (by canonical node sequence) fundamental cycle of the BFS
/// forest rooted at each component's smallest node, or `None` for a forest.
pub fn cycle_witness(g: &Graph) -> Option<Vec<NodeId>> {
    let n = g.node_count();
    let mut parent = vec![usize::MAX; n];
    let mut depth = vec![0; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &w in g.neighbors(u) {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = u;
                    depth[w] = depth[u] + 1;
                    queue.push_back(w);
                }
            }
        }
    }
    let mut best: Option<Vec<usize>> = None;
    for (u, v, _) in g.edges() {
        if parent[v] == u || parent[u] == v {
            continue;
        }
        let c = canonical_cycle(tree_cycle(&parent, &depth, u, v));
        if best.as_ref().is_none_or(|b| c < *b) {
            best = Some(c);
        }
    }
    best.map(|c| c.into_iter().map(|i| g.id(i).clone()).collect())
}

/// Lexicographically smallest `k`-clique (sorted by id), if one exists.
pub fn find_cliques(g: &Graph, k: usize) -> Option<Vec<NodeId>> {
    fn extend(g: &Graph, k: usize, chosen: &mut Vec<usize>, cand: &[usize]) -> bool {
        if chosen.len() == k {
            return true;
        }
        let need = k - chosen.len();
        for (i, &v) in cand.iter().enumerate() {
            if cand.len() - i < need {
                break;
            }
            if g.degree(v) + 1 < k {
                continue;
            }
            let next: Vec<usize> = cand[i + 1..].iter().copied().filter(|&w| g.has_edge(v, w)).collect();
            if next.len() + 1 < need {
                continue;
            }
            chosen.push(v);
            if extend(g, k, chosen, &next) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    if k == 0 {
        return Some(Vec::new());
    }
    let all: Vec<usize> = (0..g.node_count()).collect();
    let mut chosen = Vec::with_capacity(k);
    extend(g, k, &mut chosen, &all).then(|| chosen.into_iter().map(|i| g.id(i).clone()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleCount {
    pub count: u64,
    /// Smallest triangle (sorted ids) counted, if any.
    pub first: Option<[NodeId; 3]>,
    /// Every counted triangle in lexicographic order, when requested.
    pub triples: Option<Vec<[NodeId; 3]>>,
}

/// Counts triangles in `g`, or only those through `focus` when given.
pub fn count_triangles(g: &Graph, focus: Option<usize>, list: bool) -> TriangleCount {
    let mut count = 0u64;
    let mut found: Vec<[usize; 3]> = Vec::new();
    let mut first: Option<[usize; 3]> = None;
    let mut record = |mut t: [usize; 3], count: &mut u64| {
        t.sort_unstable();
        *count += 1;
        if first.is_none_or(|f| t < f) {
            first = Some(t);
        }
        if list {
            found.push(t);
        }
    };
    match focus {
        Some(v) => {
            let nb = g.neighbors(v);
            for (i, &a) in nb.iter().enumerate() {
                for &b in &nb[i + 1..] {
                    if g.has_edge(a, b) {
                        record([v, a, b], &mut count);
                    }
                }
            }
        }
        None => {
            for u in 0..g.node_count() {
                for &v in g.neighbors(u).iter().filter(|&&v| v > u) {
                    for &w in g.neighbors(v).iter().filter(|&&w| w > v) {
                        if g.has_edge(u, w) {
                            record([u, v, w], &mut count);
                        }
                    }
                }
            }
        }
    }
    let to_ids = |t: [usize; 3]| t.map(|i| g.id(i).clone());
    found.sort_unstable();
    TriangleCount {
        count,
        first: first.map(to_ids),
        triples: list.then(|| found.into_iter().map(to_ids).collect()),
    }
}

/// Articulation points (Tarjan low-link), sorted by id.
pub fn critical_nodes(g: &Graph) -> Vec<NodeId> {
    let n = g.node_count();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut is_cut = vec![false; n];
    let mut timer = 0;
    // (node, parent, next neighbor position)
    let mut stack: Vec<(usize, usize, usize)> = Vec::new();
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        let mut root_children = 0;
        stack.push((root, usize::MAX, 0));
        while let Some(top) = stack.last_mut() {
            let (u, p, pos) = *top;
            if let Some(&w) = g.neighbors(u).get(pos) {
                top.2 += 1;
                if disc[w] == usize::MAX {
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    if u == root {
                        root_children += 1;
                    }
                    stack.push((w, u, 0));
                } else if w != p {
                    low[u] = low[u].min(disc[w]);
                }
            } else {
                stack.pop();
                if p != usize::MAX {
                    low[p] = low[p].min(low[u]);
                    if p != root && low[u] >= disc[p] {
                        is_cut[p] = true;
                    }
                }
            }
        }
        is_cut[root] = root_children > 1;
    }
    (0..n).filter(|&i| is_cut[i]).map(|i| g.id(i).clone()).collect()
}

/// Node indices at hop distance exactly `d` from `v`, sorted.
pub fn nodes_at_distance(g: &Graph, v: usize, d: usize) -> Vec<usize> {
    bfs_distances(g, v)
        .into_iter()
        .enumerate()
        .filter(|&(_, dist)| dist == Some(d))
        .map(|(i, _)| i)
        .collect()
}

/// Components ordered by size descending, then by smallest member.
pub(crate) fn ordered_components(g: &Graph) -> Vec<Vec<usize>> {
    let mut comps = g.components();
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    comps
}

pub fn component_analysis(g: &Graph, query: Option<&NodeId>) -> GoldAnswer {
    let comps = ordered_components(g);
    let component_of_query = query.map(|q| {
        let qi = g.index(q).expect("validated entity");
        let (component, c) = comps.iter().enumerate().find(|(_, c)| c.binary_search(&qi).is_ok()).unwrap();
        ComponentOfQuery { node: q.clone(), component, size: c.len() }
    });
    GoldAnswer::AnalysisRecord {
        component_count: comps.len(),
        sizes_desc: comps.iter().map(Vec::len).collect(),
        component_of_query,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(g: &Graph, v: &[NodeId]) -> Vec<usize> {
        v.iter().map(|x| g.index(x).unwrap()).collect()
    }

    #[test]
    fn odd_cycle_is_a_real_odd_cycle() {
        let g = Graph::from_index_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (4, 5)]).unwrap();
        assert!(bipartition(&g).is_none());
        let c = idx(&g, &odd_cycle(&g).unwrap());
        assert_eq!(c.len() % 2, 1);
        for i in 0..c.len() {
            assert!(g.has_edge(c[i], c[(i + 1) % c.len()]));
        }
    }

    #[test]
    fn cycle_witness_is_canonical() {
        // square 0-1-2-3 plus a pendant triangle 3-4-5
        let g = Graph::from_index_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 0), (3, 4), (4, 5), (5, 3)])
            .unwrap();
        let c = idx(&g, &cycle_witness(&g).unwrap());
        assert_eq!(c, vec![0, 1, 2, 3]);
        let tree = Graph::from_index_edges(4, &[(0, 1), (1, 2), (1, 3)]).unwrap();
        assert!(cycle_witness(&tree).is_none());
    }

    #[test]
    fn clique_witness_is_smallest() {
        // two triangles {0,1,2}? no: {1,2,3} and {0,4,5}; smallest sorted is {0,4,5}
        let g = Graph::from_index_edges(6, &[(1, 2), (2, 3), (1, 3), (0, 4), (4, 5), (0, 5)]).unwrap();
        assert_eq!(idx(&g, &find_cliques(&g, 3).unwrap()), vec![0, 4, 5]);
        assert!(find_cliques(&g, 4).is_none());
    }

    #[test]
    fn local_and_global_triangles() {
        let k4 = Graph::from_index_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        let all = count_triangles(&k4, None, true);
        assert_eq!(all.count, 4);
        assert_eq!(all.triples.unwrap().len(), 4);
        assert_eq!(count_triangles(&k4, Some(3), false).count, 3);
        assert_eq!(idx(&k4, &count_triangles(&k4, Some(3), false).first.unwrap()), vec![0, 1, 3]);
    }

    #[test]
    fn articulation_points() {
        // bowtie: two triangles sharing node 2, plus tail 4-5
        let g = Graph::from_index_edges(7, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4), (4, 5), (5, 6)])
            .unwrap();
        assert_eq!(idx(&g, &critical_nodes(&g)), vec![2, 4, 5]);
        let c = Graph::from_index_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert!(critical_nodes(&c).is_empty());
    }
}
