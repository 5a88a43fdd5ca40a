//! Exhaustive solvers for small graphs.
//!
//! Everything here works from a dense adjacency matrix and plain enumeration
//! (all colourings, all k-subsets, Floyd–Warshall, all shortest paths,
//! Kuratowski subdivision search). Nothing is shared with the fast solvers
//! beyond the [`Graph`] accessors, so agreement between the two is meaningful.

use std::collections::BTreeSet;

use crate::graph::{edge_key, Graph, NodeId};

use super::{ComponentOfQuery, GoldAnswer, OracleError, TaskInstance, TaskType};

/// Largest graph the exhaustive solvers accept.
pub const MAX_NODES: usize = 15;

struct Dense {
    n: usize,
    adj: Vec<Vec<bool>>,
    w: Vec<Vec<f64>>,
}

impl Dense {
    fn new(g: &Graph) -> Self {
        let n = g.node_count();
        let mut adj = vec![vec![false; n]; n];
        let mut w = vec![vec![f64::INFINITY; n]; n];
        for (u, v, wt) in g.edges() {
            adj[u][v] = true;
            adj[v][u] = true;
            w[u][v] = wt;
            w[v][u] = wt;
        }
        Dense { n, adj, w }
    }

    fn hops(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![f64::INFINITY; self.n]; self.n];
        for (u, row) in d.iter_mut().enumerate() {
            row[u] = 0.0;
            for v in 0..self.n {
                if self.adj[u][v] {
                    row[v] = 1.0;
                }
            }
        }
        floyd(&mut d);
        d
    }

    fn weighted(&self) -> Vec<Vec<f64>> {
        let mut d = self.w.clone();
        for (u, row) in d.iter_mut().enumerate() {
            row[u] = 0.0;
        }
        floyd(&mut d);
        d
    }

    fn component_labels(&self, removed: Option<usize>) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for u in 0..self.n {
            for v in u + 1..self.n {
                if self.adj[u][v] && Some(u) != removed && Some(v) != removed {
                    let (a, b) = (find(&mut parent, u), find(&mut parent, v));
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        (0..self.n).map(|x| find(&mut parent, x)).collect()
    }

    fn component_count(&self, removed: Option<usize>) -> usize {
        let labels = self.component_labels(removed);
        (0..self.n).filter(|&x| Some(x) != removed && labels[x] == x).count()
    }
}

fn floyd(d: &mut [Vec<f64>]) {
    let n = d.len();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn combos(n: usize, k: usize, f: &mut dyn FnMut(&[usize]) -> bool) {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if cur.len() == k {
            return f(cur);
        }
        for v in start..n {
            cur.push(v);
            if go(v + 1, n, k, cur, f) {
                return true;
            }
            cur.pop();
        }
        false
    }
    go(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Exhaustive answer for `t` on a graph of at most [`MAX_NODES`] nodes.
///
/// Cycle detection returns no witness; the fast solver's witness is checked
/// for validity instead.
pub fn solve_task(g: &Graph, t: &TaskInstance) -> Result<GoldAnswer, OracleError> {
    if g.node_count() > MAX_NODES {
        return Err(OracleError::InvalidParam(format!(
            "exhaustive solver is limited to {MAX_NODES} nodes, graph has {}",
            g.node_count()
        )));
    }
    t.validate(g)?;
    let d = Dense::new(g);
    let n = d.n;
    let ent = |i: usize| g.index(&t.entities[i]).unwrap();
    let id = |i: usize| g.id(i).clone();
    let ids = |v: Vec<usize>| v.into_iter().map(|i| g.id(i).clone()).collect::<Vec<NodeId>>();
    use TaskType::*;
    Ok(match t.task_type {
        BipartiteDetection => {
            let ok = (0u32..1 << n).any(|mask| {
                (0..n).all(|u| (u + 1..n).all(|v| !d.adj[u][v] || ((mask >> u) & 1) != ((mask >> v) & 1)))
            });
            GoldAnswer::boolean(ok)
        }
        CliqueDetection => {
            let k = t.params["k"] as usize;
            let mut found = None;
            combos(n, k, &mut |s| {
                let is = s.iter().enumerate().all(|(i, &a)| s[i + 1..].iter().all(|&b| d.adj[a][b]));
                if is {
                    found = Some(s.to_vec());
                }
                is
            });
            GoldAnswer::Boolean { value: found.is_some(), witness: found.map(ids) }
        }
        CommonThirdOrderNeighbors => {
            let h = d.hops();
            let (a, b) = (ent(0), ent(1));
            GoldAnswer::NodeSet { value: ids((0..n).filter(|&x| h[a][x] == 3.0 && h[b][x] == 3.0).collect()) }
        }
        ThirdOrderNeighbors => {
            let h = d.hops();
            let a = ent(0);
            GoldAnswer::NodeSet { value: ids((0..n).filter(|&x| h[a][x] == 3.0).collect()) }
        }
        ConnectivityCheck => {
            let h = d.hops();
            GoldAnswer::boolean(h.iter().all(|row| row.iter().all(|x| x.is_finite())))
        }
        ConnectivityAnalysis => {
            let labels = d.component_labels(None);
            let mut groups: Vec<Vec<usize>> = Vec::new();
            for root in 0..n {
                if labels[root] == root {
                    groups.push((0..n).filter(|&x| labels[x] == root).collect());
                }
            }
            groups.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
            let component_of_query = t.entities.first().map(|q| {
                let qi = ent(0);
                let pos = groups.iter().position(|c| c.contains(&qi)).unwrap();
                ComponentOfQuery { node: q.clone(), component: pos, size: groups[pos].len() }
            });
            GoldAnswer::AnalysisRecord {
                component_count: groups.len(),
                sizes_desc: groups.iter().map(Vec::len).collect(),
                component_of_query,
            }
        }
        CriticalNodeDetection => {
            let base = d.component_count(None);
            GoldAnswer::NodeSet { value: ids((0..n).filter(|&v| d.component_count(Some(v)) > base).collect()) }
        }
        CycleDetection => {
            // some edge whose endpoints stay connected without it
            let any = (0..n).any(|u| {
                (u + 1..n).any(|v| {
                    if !d.adj[u][v] {
                        return false;
                    }
                    let mut without = Dense { n, adj: d.adj.clone(), w: d.w.clone() };
                    without.adj[u][v] = false;
                    without.adj[v][u] = false;
                    without.hops()[u][v].is_finite()
                })
            });
            GoldAnswer::boolean(any)
        }
        EdgeCount => {
            let twice: usize = d.adj.iter().map(|r| r.iter().filter(|&&b| b).count()).sum();
            GoldAnswer::integer((twice / 2) as i64)
        }
        EdgeExistence => GoldAnswer::boolean(d.adj[ent(0)][ent(1)]),
        FindConnectedEdges => {
            let v = ent(0);
            let mut e: Vec<(NodeId, NodeId)> =
                (0..n).filter(|&x| d.adj[v][x]).map(|x| edge_key(&id(v), &id(x))).collect();
            e.sort();
            GoldAnswer::EdgeSet { value: e }
        }
        HighestDegreeNeighbor => {
            let v = ent(0);
            let deg = |x: usize| d.adj[x].iter().filter(|&&b| b).count();
            let mut best: Option<usize> = None;
            for x in (0..n).filter(|&x| d.adj[v][x]) {
                if best.is_none_or(|b| deg(x) > deg(b)) {
                    best = Some(x);
                }
            }
            let b = best.ok_or_else(|| OracleError::Unsatisfiable(format!("node {} has no neighbors", id(v))))?;
            GoldAnswer::Node { value: id(b) }
        }
        NeighborConnections => {
            let v = ent(0);
            let nb: Vec<usize> = (0..n).filter(|&x| d.adj[v][x]).collect();
            let mut c = 0;
            for (i, &a) in nb.iter().enumerate() {
                for &b in &nb[i + 1..] {
                    c += d.adj[a][b] as i64;
                }
            }
            GoldAnswer::integer(c)
        }
        NodeCount => GoldAnswer::integer(n as i64),
        NodeDegree => {
            let v = ent(0);
            if g.is_weighted() {
                GoldAnswer::Real { value: (0..n).filter(|&x| d.adj[v][x]).map(|x| d.w[v][x]).sum() }
            } else {
                GoldAnswer::integer(d.adj[v].iter().filter(|&&b| b).count() as i64)
            }
        }
        PlanarityTesting => GoldAnswer::boolean(is_planar(g)),
        ShortestPath => {
            let (s, tg) = (ent(0), ent(1));
            let dist = d.weighted();
            let best = dist[s][tg];
            if !best.is_finite() {
                return Err(OracleError::Unsatisfiable(format!("{} and {} are disconnected", id(s), id(tg))));
            }
            let mut paths = Vec::new();
            let mut cur = vec![s];
            all_shortest(&d, &dist, tg, 0.0, best, &mut cur, &mut paths);
            let (path, length) = paths.into_iter().min_by(|a, b| a.0.cmp(&b.0)).expect("a shortest path exists");
            GoldAnswer::NodeSequence { value: ids(path), length: Some(length) }
        }
        TriangleCounting => {
            let mut count = 0i64;
            let mut first: Option<Vec<usize>> = None;
            let focus = t.entities.first().map(|_| ent(0));
            combos(n, 3, &mut |s| {
                let tri = d.adj[s[0]][s[1]] && d.adj[s[1]][s[2]] && d.adj[s[0]][s[2]];
                if tri && focus.is_none_or(|f| s.contains(&f)) {
                    count += 1;
                    first.get_or_insert_with(|| s.to_vec());
                }
                false
            });
            if t.is_triangle_existence() {
                GoldAnswer::Boolean { value: count > 0, witness: first.map(ids) }
            } else {
                GoldAnswer::Integer { value: count, witness: first.map(ids) }
            }
        }
    })
}

fn all_shortest(
    d: &Dense,
    dist: &[Vec<f64>],
    target: usize,
    acc: f64,
    best: f64,
    cur: &mut Vec<usize>,
    out: &mut Vec<(Vec<usize>, f64)>,
) {
    let at = *cur.last().unwrap();
    if at == target {
        if close(acc, best) {
            out.push((cur.clone(), acc));
        }
        return;
    }
    for next in 0..d.n {
        if !d.adj[at][next] || cur.contains(&next) {
            continue;
        }
        let through = acc + d.w[at][next];
        if through + dist[next][target] > best && !close(through + dist[next][target], best) {
            continue;
        }
        cur.push(next);
        all_shortest(d, dist, target, through, best, cur, out);
        cur.pop();
    }
}

/// Planarity by searching for a subdivision of K5 or K3,3 (Kuratowski).
///
/// Vertices of degree below three are first removed or smoothed away, which
/// preserves planarity; the remaining graph is searched exhaustively.
pub fn is_planar(g: &Graph) -> bool {
    let n = g.node_count();
    let mut adj: Vec<BTreeSet<usize>> = (0..n).map(|v| g.neighbors(v).iter().copied().collect()).collect();
    let mut alive = vec![true; n];
    loop {
        let mut changed = false;
        for v in 0..n {
            if !alive[v] || adj[v].len() > 2 {
                continue;
            }
            let nb: Vec<usize> = adj[v].iter().copied().collect();
            for &x in &nb {
                adj[x].remove(&v);
            }
            if let [a, b] = nb[..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
            adj[v].clear();
            alive[v] = false;
            changed = true;
        }
        if !changed {
            break;
        }
    }
    let nodes: Vec<usize> = (0..n).filter(|&v| alive[v]).collect();
    let mut search = Subdivision { adj: &adj, branch: vec![false; n], used: vec![false; n] };

    let deg4: Vec<usize> = nodes.iter().copied().filter(|&v| adj[v].len() >= 4).collect();
    let mut k5 = false;
    combos(deg4.len(), 5, &mut |s| {
        let b: Vec<usize> = s.iter().map(|&i| deg4[i]).collect();
        let pairs: Vec<(usize, usize)> =
            (0..5).flat_map(|i| (i + 1..5).map(move |j| (i, j))).map(|(i, j)| (b[i], b[j])).collect();
        k5 = search.embeds(&b, &pairs);
        k5
    });
    if k5 {
        return false;
    }
    let mut k33 = false;
    combos(nodes.len(), 6, &mut |s| {
        let six: Vec<usize> = s.iter().map(|&i| nodes[i]).collect();
        // side A always holds six[0]; choose its two partners
        for x in 1..6 {
            for y in x + 1..6 {
                let a = [six[0], six[x], six[y]];
                let b: Vec<usize> = (1..6).filter(|&i| i != x && i != y).map(|i| six[i]).collect();
                let pairs: Vec<(usize, usize)> = a.iter().flat_map(|&p| b.iter().map(move |&q| (p, q))).collect();
                if search.embeds(&six, &pairs) {
                    k33 = true;
                    return true;
                }
            }
        }
        false
    });
    !k33
}

struct Subdivision<'a> {
    adj: &'a [BTreeSet<usize>],
    branch: Vec<bool>,
    used: Vec<bool>,
}

impl Subdivision<'_> {
    fn embeds(&mut self, branch: &[usize], pairs: &[(usize, usize)]) -> bool {
        for &b in branch {
            self.branch[b] = true;
        }
        let ok = self.connect(pairs);
        for &b in branch {
            self.branch[b] = false;
        }
        ok
    }

    fn free(&self, v: usize) -> bool {
        !self.branch[v] && !self.used[v]
    }

    fn reachable(&self, a: usize, b: usize) -> bool {
        let mut seen = vec![false; self.adj.len()];
        let mut stack = vec![a];
        seen[a] = true;
        while let Some(x) = stack.pop() {
            for &y in &self.adj[x] {
                if y == b {
                    return true;
                }
                if !seen[y] && self.free(y) {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        false
    }

    fn connect(&mut self, pairs: &[(usize, usize)]) -> bool {
        let Some(&(a, b)) = pairs.first() else { return true };
        if !pairs.iter().all(|&(p, q)| self.reachable(p, q)) {
            return false;
        }
        self.walk(a, b, &pairs[1..])
    }

    fn walk(&mut self, at: usize, target: usize, rest: &[(usize, usize)]) -> bool {
        let nb: Vec<usize> = self.adj[at].iter().copied().collect();
        for y in nb {
            if y == target {
                if self.connect(rest) {
                    return true;
                }
            } else if self.free(y) {
                self.used[y] = true;
                let ok = self.walk(y, target, rest);
                self.used[y] = false;
                if ok {
                    return true;
                }
            }
        }
        false
    }
}
