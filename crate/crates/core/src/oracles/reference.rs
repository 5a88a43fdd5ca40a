//! Second, independently written set of polynomial solvers.
//!
//! Used to revalidate gold answers. The algorithms are deliberately different
//! from the production ones: union-find parity for bipartiteness,
//! Bron–Kerbosch for cliques, removal-and-recount for articulation points,
//! Demoucron–Malgrange–Pertuiset for planarity, quadratic Dijkstra for paths.
//! Graph-wide results are computed once per solver and cached.

use std::cell::OnceCell;
use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use crate::graph::{Graph, NodeId};

use super::{AnswerKind, ComponentOfQuery, GoldAnswer, OracleError, TaskInstance, TaskType};

pub struct ReferenceSolver<'g> {
    g: &'g Graph,
    components: OnceCell<Vec<Vec<usize>>>,
    bipartite: OnceCell<bool>,
    planar: OnceCell<bool>,
    critical: OnceCell<Vec<usize>>,
    triangles: OnceCell<u64>,
    max_clique: OnceCell<usize>,
}

/// Disagreement between a gold answer and the reference solver.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Mismatch {
    #[error("answer kind {got:?} where {expected:?} was expected")]
    Kind { expected: AnswerKind, got: AnswerKind },
    #[error("value differs: gold {gold}, reference {reference}")]
    Value { gold: String, reference: String },
    #[error("invalid witness: {0}")]
    Witness(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl<'g> ReferenceSolver<'g> {
    pub fn new(g: &'g Graph) -> Self {
        Self {
            g,
            components: OnceCell::new(),
            bipartite: OnceCell::new(),
            planar: OnceCell::new(),
            critical: OnceCell::new(),
            triangles: OnceCell::new(),
            max_clique: OnceCell::new(),
        }
    }

    fn components(&self) -> &Vec<Vec<usize>> {
        self.components.get_or_init(|| {
            let n = self.g.node_count();
            let mut dsu = Dsu::new(n);
            for (u, v, _) in self.g.edges() {
                dsu.union(u, v, false);
            }
            let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
            for v in 0..n {
                groups.entry(dsu.find(v).0).or_default().push(v);
            }
            let mut out: Vec<Vec<usize>> = groups.into_values().collect();
            out.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
            out
        })
    }

    fn bipartite(&self) -> bool {
        *self.bipartite.get_or_init(|| {
            let mut dsu = Dsu::new(self.g.node_count());
            self.g.edges().all(|(u, v, _)| dsu.union(u, v, true))
        })
    }

    fn planar(&self) -> bool {
        *self.planar.get_or_init(|| dmp_planar(self.g))
    }

    fn critical(&self) -> &Vec<usize> {
        self.critical.get_or_init(|| {
            let base = count_components(self.g, None);
            (0..self.g.node_count()).filter(|&v| count_components(self.g, Some(v)) > base).collect()
        })
    }

    fn triangles(&self) -> u64 {
        *self.triangles.get_or_init(|| {
            let total: usize = self
                .g
                .edges()
                .map(|(u, v, _)| sorted_intersection(self.g.neighbors(u), self.g.neighbors(v)))
                .sum();
            (total / 3) as u64
        })
    }

    fn max_clique(&self) -> usize {
        *self.max_clique.get_or_init(|| {
            let mut best = 0;
            let all: BTreeSet<usize> = (0..self.g.node_count()).collect();
            bron_kerbosch(self.g, 0, all, BTreeSet::new(), &mut best);
            best
        })
    }

    fn hop_layers(&self, src: usize, depth: usize) -> HashSet<usize> {
        let mut seen: HashSet<usize> = HashSet::from([src]);
        let mut frontier: HashSet<usize> = HashSet::from([src]);
        for _ in 0..depth {
            let mut next = HashSet::new();
            for &u in &frontier {
                for &w in self.g.neighbors(u) {
                    if seen.insert(w) {
                        next.insert(w);
                    }
                }
            }
            frontier = next;
        }
        frontier
    }

    fn sorted_ids(&self, it: impl IntoIterator<Item = usize>) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = it.into_iter().map(|i| self.g.id(i).clone()).collect();
        v.sort();
        v
    }

    /// The reference answer. Witness fields are left empty except for the
    /// shortest path, whose node sequence is the graded payload.
    pub fn answer(&self, t: &TaskInstance) -> Result<GoldAnswer, OracleError> {
        let g = self.g;
        t.validate(g)?;
        let ent = |i: usize| g.index(&t.entities[i]).unwrap();
        use TaskType::*;
        Ok(match t.task_type {
            BipartiteDetection => GoldAnswer::boolean(self.bipartite()),
            CliqueDetection => GoldAnswer::boolean(self.max_clique() >= t.params["k"] as usize),
            CommonThirdOrderNeighbors => {
                let a = self.hop_layers(ent(0), 3);
                let b = self.hop_layers(ent(1), 3);
                GoldAnswer::NodeSet { value: self.sorted_ids(a.intersection(&b).copied()) }
            }
            ThirdOrderNeighbors => GoldAnswer::NodeSet { value: self.sorted_ids(self.hop_layers(ent(0), 3)) },
            ConnectivityCheck => GoldAnswer::boolean(self.components().len() <= 1),
            ConnectivityAnalysis => {
                let comps = self.components();
                let component_of_query = t.entities.first().map(|q| {
                    let qi = ent(0);
                    let pos = comps.iter().position(|c| c.contains(&qi)).unwrap();
                    ComponentOfQuery { node: q.clone(), component: pos, size: comps[pos].len() }
                });
                GoldAnswer::AnalysisRecord {
                    component_count: comps.len(),
                    sizes_desc: comps.iter().map(Vec::len).collect(),
                    component_of_query,
                }
            }
            CriticalNodeDetection => GoldAnswer::NodeSet { value: self.sorted_ids(self.critical().iter().copied()) },
            CycleDetection => {
                GoldAnswer::boolean(g.edge_count() + self.components().len() > g.node_count())
            }
            EdgeCount => {
                GoldAnswer::integer((0..g.node_count()).map(|v| g.degree(v)).sum::<usize>() as i64 / 2)
            }
            EdgeExistence => {
                let (a, b) = (ent(0), ent(1));
                GoldAnswer::boolean(g.edges().any(|(u, v, _)| (u, v) == (a.min(b), a.max(b))))
            }
            FindConnectedEdges => {
                let v = ent(0);
                let mut e: Vec<(NodeId, NodeId)> = g
                    .edges()
                    .filter(|&(a, b, _)| a == v || b == v)
                    .map(|(a, b, _)| (g.id(a).clone(), g.id(b).clone()))
                    .collect();
                e.sort();
                GoldAnswer::EdgeSet { value: e }
            }
            HighestDegreeNeighbor => {
                let v = ent(0);
                let mut nb: Vec<usize> = g.edges().filter_map(|(a, b, _)| {
                    if a == v {
                        Some(b)
                    } else if b == v {
                        Some(a)
                    } else {
                        None
                    }
                }).collect();
                nb.sort_by(|&x, &y| g.degree(y).cmp(&g.degree(x)).then(g.id(x).cmp(g.id(y))));
                let best = *nb.first().ok_or_else(|| {
                    OracleError::Unsatisfiable(format!("node {} has no neighbors", g.id(v)))
                })?;
                GoldAnswer::Node { value: g.id(best).clone() }
            }
            NeighborConnections => {
                let v = ent(0);
                let c = g.edges().filter(|&(a, b, _)| g.has_edge(a, v) && g.has_edge(b, v)).count();
                GoldAnswer::integer(c as i64)
            }
            NodeCount => GoldAnswer::integer(g.nodes().len() as i64),
            NodeDegree => {
                let v = ent(0);
                let incident = g.edges().filter(|&(a, b, _)| a == v || b == v);
                if g.is_weighted() {
                    GoldAnswer::Real { value: incident.map(|(_, _, w)| w).sum() }
                } else {
                    GoldAnswer::integer(incident.count() as i64)
                }
            }
            PlanarityTesting => GoldAnswer::boolean(self.planar()),
            ShortestPath => {
                let (s, tg) = (ent(0), ent(1));
                let dist = dijkstra(g, tg);
                if !dist[s].is_finite() {
                    return Err(OracleError::Unsatisfiable(format!(
                        "{} and {} are disconnected",
                        g.id(s),
                        g.id(tg)
                    )));
                }
                let mut path = vec![s];
                let mut cur = s;
                while cur != tg {
                    let next = g
                        .weighted_neighbors(cur)
                        .filter(|&(v, w)| close(dist[v] + w, dist[cur]))
                        .map(|(v, _)| v)
                        .min_by(|&a, &b| g.id(a).cmp(g.id(b)))
                        .unwrap();
                    path.push(next);
                    cur = next;
                }
                GoldAnswer::NodeSequence {
                    value: path.into_iter().map(|i| g.id(i).clone()).collect(),
                    length: Some(dist[s]),
                }
            }
            TriangleCounting => {
                let c = match t.entities.first() {
                    None => self.triangles() as i64,
                    Some(_) => {
                        let v = ent(0);
                        g.edges().filter(|&(a, b, _)| g.has_edge(a, v) && g.has_edge(b, v)).count() as i64
                    }
                };
                if t.is_triangle_existence() {
                    GoldAnswer::boolean(c > 0)
                } else {
                    GoldAnswer::integer(c)
                }
            }
        })
    }

    /// Checks `gold` against the reference answer, including any witness.
    pub fn verify(&self, t: &TaskInstance, gold: &GoldAnswer) -> Result<(), Mismatch> {
        let reference = self.answer(t)?;
        if gold.kind() != reference.kind() {
            return Err(Mismatch::Kind { expected: reference.kind(), got: gold.kind() });
        }
        let differ = || Mismatch::Value { gold: gold.to_json(), reference: reference.to_json() };
        match (gold, &reference) {
            (GoldAnswer::Boolean { value, witness }, GoldAnswer::Boolean { value: r, .. }) => {
                if value != r {
                    return Err(differ());
                }
                if let Some(w) = witness {
                    self.check_witness(t, w)?;
                }
            }
            (GoldAnswer::Integer { value, witness }, GoldAnswer::Integer { value: r, .. }) => {
                if value != r {
                    return Err(differ());
                }
                if let Some(w) = witness {
                    self.check_witness(t, w)?;
                }
            }
            (GoldAnswer::Real { value }, GoldAnswer::Real { value: r }) => {
                if !close(*value, *r) {
                    return Err(differ());
                }
            }
            (GoldAnswer::NodeSequence { value, length }, GoldAnswer::NodeSequence { value: r, length: rl }) => {
                if value != r {
                    return Err(differ());
                }
                if let (Some(a), Some(b)) = (length, rl) {
                    if !close(*a, *b) {
                        return Err(differ());
                    }
                }
            }
            (a, b) => {
                if a != b {
                    return Err(differ());
                }
            }
        }
        Ok(())
    }

    fn check_witness(&self, t: &TaskInstance, w: &[NodeId]) -> Result<(), Mismatch> {
        let g = self.g;
        let idx: Vec<usize> = w
            .iter()
            .map(|x| g.index(x).ok_or_else(|| Mismatch::Witness(format!("unknown node {x}"))))
            .collect::<Result<_, _>>()?;
        let distinct = idx.iter().collect::<HashSet<_>>().len() == idx.len();
        let pairwise = || idx.iter().enumerate().all(|(i, &a)| idx[i + 1..].iter().all(|&b| g.has_edge(a, b)));
        let ok = match t.task_type {
            TaskType::CliqueDetection => distinct && idx.len() == t.params["k"] as usize && pairwise(),
            TaskType::TriangleCounting => {
                distinct
                    && idx.len() == 3
                    && pairwise()
                    && t.entities.first().is_none_or(|f| w.contains(f))
            }
            TaskType::CycleDetection => {
                distinct && idx.len() >= 3 && (0..idx.len()).all(|i| g.has_edge(idx[i], idx[(i + 1) % idx.len()]))
            }
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Mismatch::Witness(format!("{} witness {w:?} does not hold", t.task_type)))
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Union-find with parity: `union(a, b, true)` asserts a and b differ in
/// colour and returns false on contradiction.
struct Dsu {
    parent: Vec<usize>,
    parity: Vec<bool>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect(), parity: vec![false; n] }
    }

    fn find(&mut self, x: usize) -> (usize, bool) {
        let mut path = Vec::new();
        let mut r = x;
        while self.parent[r] != r {
            path.push(r);
            r = self.parent[r];
        }
        // compress from the top so each parity is relative to its new parent (the root)
        let mut acc = false;
        for &p in path.iter().rev() {
            acc ^= self.parity[p];
            self.parity[p] = acc;
            self.parent[p] = r;
        }
        (r, if path.is_empty() { false } else { self.parity[x] })
    }

    fn union(&mut self, a: usize, b: usize, differ: bool) -> bool {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        if ra == rb {
            return !differ || pa != pb;
        }
        self.parent[ra] = rb;
        self.parity[ra] = pa ^ pb ^ differ;
        true
    }
}

fn count_components(g: &Graph, removed: Option<usize>) -> usize {
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] || Some(s) == removed {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &w in g.neighbors(u) {
                if !seen[w] && Some(w) != removed {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    count
}

fn sorted_intersection(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

fn bron_kerbosch(g: &Graph, size: usize, mut p: BTreeSet<usize>, mut x: BTreeSet<usize>, best: &mut usize) {
    if p.is_empty() && x.is_empty() {
        *best = (*best).max(size);
        return;
    }
    if size + p.len() <= *best {
        return;
    }
    let pivot = *p.union(&x).max_by_key(|&&u| g.neighbors(u).iter().filter(|w| p.contains(w)).count()).unwrap();
    let cands: Vec<usize> = p.iter().copied().filter(|&v| !g.has_edge(pivot, v)).collect();
    for v in cands {
        let nb: BTreeSet<usize> = g.neighbors(v).iter().copied().collect();
        bron_kerbosch(g, size + 1, p.intersection(&nb).copied().collect(), x.intersection(&nb).copied().collect(), best);
        p.remove(&v);
        x.insert(v);
    }
}

/// Quadratic Dijkstra: distances to `src` from every node.
fn dijkstra(g: &Graph, src: usize) -> Vec<f64> {
    let n = g.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[src] = 0.0;
    for _ in 0..n {
        let Some(u) = (0..n).filter(|&v| !done[v] && dist[v].is_finite()).min_by(|&a, &b| dist[a].total_cmp(&dist[b]))
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

/// Edge sets of the biconnected blocks (Tarjan, explicit stacks).
fn blocks(g: &Graph) -> Vec<Vec<(usize, usize)>> {
    let n = g.node_count();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut timer = 0;
    let mut edge_stack: Vec<(usize, usize)> = Vec::new();
    let mut out = Vec::new();
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        let mut stack = vec![(root, usize::MAX, 0usize)];
        while let Some(&mut (u, p, ref mut pos)) = stack.last_mut() {
            if let Some(&w) = g.neighbors(u).get(*pos) {
                *pos += 1;
                if disc[w] == usize::MAX {
                    edge_stack.push((u, w));
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    stack.push((w, u, 0));
                } else if w != p && disc[w] < disc[u] {
                    edge_stack.push((u, w));
                    low[u] = low[u].min(disc[w]);
                }
            } else {
                stack.pop();
                if p != usize::MAX {
                    low[p] = low[p].min(low[u]);
                    if low[u] >= disc[p] {
                        let mut block = Vec::new();
                        while let Some(e) = edge_stack.pop() {
                            block.push(e);
                            if e == (p, u) {
                                break;
                            }
                        }
                        out.push(block);
                    }
                }
            }
        }
    }
    out
}

/// Planarity by Demoucron–Malgrange–Pertuiset path embedding, block by block.
pub fn dmp_planar(g: &Graph) -> bool {
    blocks(g).into_iter().all(|b| dmp_block(&b))
}

fn dmp_block(edges: &[(usize, usize)]) -> bool {
    if edges.len() < 3 {
        return true;
    }
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for &(u, v) in edges {
        adj.entry(u).or_default().push(v);
        adj.entry(v).or_default().push(u);
    }
    let nv = adj.len();
    if edges.len() > 3 * nv - 6 {
        return false;
    }
    let key = |a: usize, b: usize| (a.min(b), a.max(b));

    // initial cycle: an edge plus a path back around it
    let (s, t) = edges[0];
    let mut prev: HashMap<usize, usize> = HashMap::from([(s, s)]);
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        for &w in &adj[&u] {
            if (u, w) == (s, t) || prev.contains_key(&w) {
                continue;
            }
            prev.insert(w, u);
            queue.push_back(w);
        }
    }
    let mut cycle = vec![t];
    while *cycle.last().unwrap() != s {
        cycle.push(prev[cycle.last().unwrap()]);
    }

    let mut embedded_v: HashSet<usize> = cycle.iter().copied().collect();
    let mut embedded_e: HashSet<(usize, usize)> = HashSet::new();
    for i in 0..cycle.len() {
        embedded_e.insert(key(cycle[i], cycle[(i + 1) % cycle.len()]));
    }
    let mut faces: Vec<Vec<usize>> = vec![cycle.clone(), cycle.clone()];
    let mut vfaces: HashMap<usize, BTreeSet<usize>> = cycle.iter().map(|&v| (v, BTreeSet::from([0, 1]))).collect();

    loop {
        let fragments = fragments(&adj, &embedded_v, &embedded_e);
        if fragments.is_empty() {
            return true;
        }
        let mut choice: Option<(usize, usize)> = None;
        for (fi, frag) in fragments.iter().enumerate() {
            let mut admissible = vfaces[&frag.attachments[0]].clone();
            for a in &frag.attachments[1..] {
                admissible = admissible.intersection(&vfaces[a]).copied().collect();
            }
            match admissible.len() {
                0 => return false,
                1 => {
                    choice = Some((fi, *admissible.first().unwrap()));
                    break;
                }
                _ => {
                    if choice.is_none() {
                        choice = Some((fi, *admissible.first().unwrap()));
                    }
                }
            }
        }
        let (fi, face) = choice.unwrap();
        let path = fragment_path(&adj, &embedded_v, &fragments[fi]);
        // split the face along the path
        let f = &faces[face];
        let (a, b) = (path[0], *path.last().unwrap());
        let i = f.iter().position(|&x| x == a).unwrap();
        let j = f.iter().position(|&x| x == b).unwrap();
        let len = f.len();
        let arc = |from: usize, to: usize| {
            let mut out = vec![f[from]];
            let mut k = from;
            while k != to {
                k = (k + 1) % len;
                out.push(f[k]);
            }
            out
        };
        let interior = &path[1..path.len() - 1];
        let mut f1 = arc(i, j);
        f1.extend(interior.iter().rev());
        let mut f2 = arc(j, i);
        f2.extend(interior.iter());
        for &v in &faces[face] {
            vfaces.get_mut(&v).unwrap().remove(&face);
        }
        let new_id = faces.len();
        for &v in &f1 {
            vfaces.entry(v).or_default().insert(face);
        }
        for &v in &f2 {
            vfaces.entry(v).or_default().insert(new_id);
        }
        faces[face] = f1;
        faces.push(f2);
        for w in path.windows(2) {
            embedded_e.insert(key(w[0], w[1]));
        }
        embedded_v.extend(path.iter().copied());
    }
}

struct Fragment {
    /// Unembedded vertices of the fragment (empty for a lone chord).
    inner: Vec<usize>,
    attachments: Vec<usize>,
}

fn fragments(
    adj: &HashMap<usize, Vec<usize>>,
    emb_v: &HashSet<usize>,
    emb_e: &HashSet<(usize, usize)>,
) -> Vec<Fragment> {
    let mut out = Vec::new();
    let mut vs: Vec<usize> = adj.keys().copied().collect();
    vs.sort_unstable();
    for &u in &vs {
        if !emb_v.contains(&u) {
            continue;
        }
        for &w in &adj[&u] {
            if u < w && emb_v.contains(&w) && !emb_e.contains(&(u, w)) {
                out.push(Fragment { inner: Vec::new(), attachments: vec![u, w] });
            }
        }
    }
    let mut seen: HashSet<usize> = HashSet::new();
    for &s in &vs {
        if emb_v.contains(&s) || !seen.insert(s) {
            continue;
        }
        let mut inner = vec![s];
        let mut att = BTreeSet::new();
        let mut k = 0;
        while k < inner.len() {
            let u = inner[k];
            k += 1;
            for &w in &adj[&u] {
                if emb_v.contains(&w) {
                    att.insert(w);
                } else if seen.insert(w) {
                    inner.push(w);
                }
            }
        }
        out.push(Fragment { inner, attachments: att.into_iter().collect() });
    }
    out
}

/// A path through the fragment joining two distinct attachments.
fn fragment_path(adj: &HashMap<usize, Vec<usize>>, emb_v: &HashSet<usize>, frag: &Fragment) -> Vec<usize> {
    if frag.inner.is_empty() {
        return frag.attachments.clone();
    }
    let inner: HashSet<usize> = frag.inner.iter().copied().collect();
    let a = frag.attachments[0];
    let mut prev: HashMap<usize, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    for &w in &adj[&a] {
        if inner.contains(&w) && !prev.contains_key(&w) {
            prev.insert(w, a);
            queue.push_back(w);
        }
    }
    while let Some(u) = queue.pop_front() {
        for &w in &adj[&u] {
            if emb_v.contains(&w) && w != a {
                let mut path = vec![w, u];
                let mut cur = u;
                while prev[&cur] != a {
                    cur = prev[&cur];
                    path.push(cur);
                }
                path.push(a);
                path.reverse();
                return path;
            }
            if inner.contains(&w) && !prev.contains_key(&w) {
                prev.insert(w, u);
                queue.push_back(w);
            }
        }
    }
    unreachable!("fragments of a biconnected block have two attachments")
}
