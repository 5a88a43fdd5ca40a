//! Acceptance checks, one line per criterion. Run with `cargo test --test acceptance`.
//!
//! Every reference value here is computed by code in this file (enumeration,
//! dense linear algebra, straight-line transcriptions), never by the library
//! routine under test.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use graphvista::graph::{
    betweenness, generate_ba, generate_er, pagerank_default, shortest_path, yen_k_shortest, Graph, GraphBuilder, NodeId,
};
use graphvista::grena::{
    build_preference_dataset, generate_benchmark, verify_trace, write_benchmark, write_dataset, BenchConfig, DpoConfig,
};
use graphvista::llm::{render_action, HttpConfig, HttpReasoner, Reasoner, ReasonerRequest};
use graphvista::oracles::{brute, solve_task, GoldAnswer, OracleError, ReferenceSolver, TaskInstance, TaskType};
use graphvista::pipeline::{exemplar_benchmark, exemplar_fixtures, replay_suite, run_suite, subset, PipelineConfig};
use graphvista::rag::{build_base, BaseConfig, TieredBase};
use graphvista::reasoning::{dpo_loss, dpo_loss_from_margin, dpo_loss_grad, ContextReader, DpoInputs};
use graphvista::eval::Prediction;
use graphvista::router::{Category, ParsedTask, RoutingTable};
use graphvista::subgraph::{extract_ego, extract_multi, ExtractionConfig, SubgraphError};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn reweight(g: &Graph, rng: &mut ChaCha8Rng) -> Graph {
    let mut b = GraphBuilder::new();
    for v in g.nodes() {
        b.add_node(v.clone());
    }
    for (u, v, _) in g.edges() {
        b.add_edge(g.id(u).clone(), g.id(v).clone(), Some([1.0, 2.0, 0.5, 3.0][rng.gen_range(0..4)]));
    }
    b.build().unwrap()
}

// ---------------------------------------------------------------- oracles

fn instances(g: &Graph, rng: &mut ChaCha8Rng) -> Vec<TaskInstance> {
    let n = g.node_count();
    let pick = |rng: &mut ChaCha8Rng| g.id(rng.gen_range(0..n)).clone();
    let mut out = Vec::new();
    for t in TaskType::ALL {
        let (lo, hi) = t.arity();
        let mut ents = Vec::new();
        if hi >= 1 && n > 0 {
            ents.push(pick(rng));
        }
        if lo == 2 {
            if n < 2 {
                continue;
            }
            let mut b = pick(rng);
            while b == ents[0] {
                b = pick(rng);
            }
            ents.push(b);
        }
        let mut inst = TaskInstance::new(t, ents);
        if t == TaskType::CliqueDetection {
            inst = inst.with_param("k", rng.gen_range(2..=5));
        }
        if t == TaskType::TriangleCounting && rng.gen_bool(0.5) {
            inst = inst.with_param("exists", 1);
        }
        if (lo, hi) == (0, 1) && rng.gen_bool(0.5) {
            inst = TaskInstance::new(t, vec![]);
        }
        out.push(inst);
    }
    out
}

fn same(fast: &GoldAnswer, slow: &GoldAnswer) -> bool {
    match (fast, slow) {
        // the exhaustive cycle search reports no witness
        (GoldAnswer::Boolean { value: a, .. }, GoldAnswer::Boolean { value: b, witness: None }) => a == b,
        (GoldAnswer::NodeSequence { value: a, length: la }, GoldAnswer::NodeSequence { value: b, length: lb }) => {
            a == b && (la.unwrap_or(0.0) - lb.unwrap_or(0.0)).abs() < 1e-9
        }
        (GoldAnswer::Real { value: a }, GoldAnswer::Real { value: b }) => (a - b).abs() < 1e-9,
        _ => fast == slow,
    }
}

fn oracle_fidelity() -> Check {
    let start = Instant::now();
    let mut per_type: BTreeMap<TaskType, usize> = BTreeMap::new();
    let graphs = 640u64;
    for seed in 0..graphs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=brute::MAX_NODES);
        let g = match seed % 4 {
            0 | 1 => generate_er(n, rng.gen_range(0.05..0.7), seed).unwrap(),
            2 => generate_ba(n.max(4), rng.gen_range(1..=3), seed).unwrap(),
            _ => {
                let base = generate_er(n, rng.gen_range(0.2..0.5), seed).unwrap();
                reweight(&base, &mut rng)
            }
        };
        let reference = ReferenceSolver::new(&g);
        for t in instances(&g, &mut rng) {
            let fast = solve_task(&g, &t);
            let slow = brute::solve_task(&g, &t);
            match (&fast, &slow) {
                (Ok(f), Ok(s)) => {
                    ensure(same(f, s), || format!("{t:?} on {}: {f:?} vs exhaustive {s:?}", g.to_json()))?;
                    reference.verify(&t, f).map_err(|e| format!("{t:?}: reference rejects {f:?}: {e}"))?;
                }
                (Err(OracleError::Unsatisfiable(_)), Err(OracleError::Unsatisfiable(_))) => {}
                _ => return Err(format!("{t:?} on {}: {fast:?} vs exhaustive {slow:?}", g.to_json())),
            }
            *per_type.entry(t.task_type).or_default() += 1;
        }
    }
    let fewest = per_type.values().min().copied().unwrap_or(0);
    ensure(per_type.len() == 18, || format!("only {} task types exercised", per_type.len()))?;
    ensure(fewest >= 500, || format!("only {fewest} graphs for some task type"))?;
    let took = start.elapsed();
    ensure(took < Duration::from_secs(300), || format!("took {took:?}"))?;
    Ok(format!("18 types, >= {fewest} graphs each, 100% agreement, {:.1}s", took.as_secs_f64()))
}

// ---------------------------------------------------------------- paths

/// All simple s-t paths sorted by (length, index sequence).
fn all_paths(g: &Graph, s: usize, t: usize) -> Vec<(Vec<usize>, f64)> {
    fn go(g: &Graph, t: usize, cur: &mut Vec<usize>, len: f64, out: &mut Vec<(Vec<usize>, f64)>) {
        let at = *cur.last().unwrap();
        if at == t {
            out.push((cur.clone(), len));
            return;
        }
        for (v, w) in g.weighted_neighbors(at).collect::<Vec<_>>() {
            if !cur.contains(&v) {
                cur.push(v);
                go(g, t, cur, len + w, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(g, t, &mut vec![s], 0.0, &mut out);
    out.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    out
}

fn floyd_warshall(g: &Graph) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for (u, v, w) in g.edges() {
        d[u][v] = d[u][v].min(w);
        d[v][u] = d[v][u].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

fn path_fidelity() -> Check {
    let mut fixtures = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let base = generate_er(rng.gen_range(3..=8), rng.gen_range(0.3..0.8), seed).unwrap();
        let g = if seed % 2 == 0 { base } else { reweight(&base, &mut rng) };
        let n = g.node_count();
        let s = rng.gen_range(0..n);
        let t = (s + rng.gen_range(1..n)) % n;
        let k = rng.gen_range(1..=5);
        let want: Vec<_> = all_paths(&g, s, t).into_iter().take(k).collect();
        let got = yen_k_shortest(&g, g.id(s), g.id(t), k).map_err(|e| e.to_string())?;
        ensure(got.len() == want.len(), || format!("fixture {seed}: {} paths, expected {}", got.len(), want.len()))?;
        for (a, (p, len)) in got.iter().zip(&want) {
            let idx: Vec<usize> = a.path.iter().map(|x| g.index(x).unwrap()).collect();
            ensure(&idx == p && (a.length - len).abs() < 1e-9, || format!("fixture {seed}: {idx:?} vs {p:?}"))?;
        }
        fixtures += 1;
    }
    let mut pairs = 0;
    for seed in 0..60u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let n = rng.gen_range(2..=30);
        let base = generate_er(n, rng.gen_range(0.03..0.3), seed).unwrap();
        let g = if seed % 2 == 0 { base } else { reweight(&base, &mut rng) };
        let d = floyd_warshall(&g);
        for s in 0..n {
            for t in 0..n {
                if s == t {
                    continue;
                }
                let got = shortest_path(&g, g.id(s), g.id(t)).map_err(|e| e.to_string())?;
                match got {
                    None => ensure(d[s][t].is_infinite(), || format!("graph {seed}: {s}->{t} reachable"))?,
                    Some(r) => {
                        let walked: f64 = r
                            .path
                            .windows(2)
                            .map(|w| g.edge_weight(g.index(&w[0]).unwrap(), g.index(&w[1]).unwrap()).unwrap())
                            .sum();
                        ensure((r.length - d[s][t]).abs() < 1e-9 && (walked - d[s][t]).abs() < 1e-9, || {
                            format!("graph {seed}: {s}->{t} length {} vs {}", r.length, d[s][t])
                        })?;
                    }
                }
                pairs += 1;
            }
        }
    }
    Ok(format!("{fixtures} k-shortest fixtures, {pairs} distance pairs, 100%"))
}

// ---------------------------------------------------------------- centrality

/// Stationary vector of the damped walk, as the null vector of `G - I` via SVD.
fn pagerank_eigen(g: &Graph, damping: f64) -> Vec<f64> {
    let n = g.node_count();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for u in 0..n {
        let deg = g.degree(u);
        for v in 0..n {
            let walk = if deg == 0 { 1.0 / n as f64 } else if g.has_edge(u, v) { 1.0 / deg as f64 } else { 0.0 };
            m[(v, u)] = damping * walk + (1.0 - damping) / n as f64;
        }
        m[(u, u)] -= 1.0;
    }
    let svd = m.svd(false, true);
    let vt = svd.v_t.unwrap();
    let (i, _) = svd.singular_values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let x: Vec<f64> = vt.row(i).iter().copied().collect();
    let total: f64 = x.iter().sum();
    x.iter().map(|v| v / total).collect()
}

/// Sum over unordered pairs of the fraction of shortest paths through each node.
fn betweenness_by_pairs(g: &Graph) -> Vec<f64> {
    let n = g.node_count();
    let mut hop = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in hop.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for (u, v, _) in g.edges() {
        hop[u][v] = 1.0;
        hop[v][u] = 1.0;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                hop[i][j] = hop[i][j].min(hop[i][k] + hop[k][j]);
            }
        }
    }
    fn walk(g: &Graph, hop: &[Vec<f64>], t: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let at = *cur.last().unwrap();
        if at == t {
            out.push(cur.clone());
            return;
        }
        for &w in g.neighbors(at) {
            if hop[w][t] == hop[at][t] - 1.0 {
                cur.push(w);
                walk(g, hop, t, cur, out);
                cur.pop();
            }
        }
    }
    let mut bc = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            if hop[s][t].is_infinite() {
                continue;
            }
            let mut paths = Vec::new();
            walk(g, &hop, t, &mut vec![s], &mut paths);
            for p in &paths {
                for &v in &p[1..p.len() - 1] {
                    bc[v] += 1.0 / paths.len() as f64;
                }
            }
        }
    }
    bc
}

fn centrality_fidelity() -> Check {
    let mut worst_l1: f64 = 0.0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + seed);
        let n = rng.gen_range(1..=10);
        let g = generate_er(n, rng.gen_range(0.0..0.7), seed).unwrap();
        let got = pagerank_default(&g).map_err(|e| e.to_string())?.to_vec();
        let want = pagerank_eigen(&g, 0.85);
        let l1: f64 = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).sum();
        worst_l1 = worst_l1.max(l1);
        ensure(l1 <= 1e-6, || format!("graph {seed}: pagerank L1 {l1:e}"))?;
    }
    let mut worst_bc: f64 = 0.0;
    for seed in 0..150u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(4000 + seed);
        let n = rng.gen_range(2..=12);
        let g = generate_er(n, rng.gen_range(0.1..0.7), seed).unwrap();
        let got = betweenness(&g).to_vec();
        let want = betweenness_by_pairs(&g);
        for (a, b) in got.iter().zip(&want) {
            worst_bc = worst_bc.max((a - b).abs());
        }
        ensure(worst_bc < 1e-9, || format!("graph {seed}: betweenness off by {worst_bc:e}"))?;
    }
    Ok(format!("pagerank worst L1 {worst_l1:.1e} (200 graphs); betweenness exact (150 graphs)"))
}

// ---------------------------------------------------------------- tiered base

fn edge_set(pairs: impl IntoIterator<Item = (NodeId, NodeId)>) -> BTreeSet<(NodeId, NodeId)> {
    pairs.into_iter().map(|(a, b)| if a <= b { (a, b) } else { (b, a) }).collect()
}

fn random_graph(rng: &mut ChaCha8Rng, lo: usize, hi: usize, seed: u64) -> Graph {
    let n = rng.gen_range(lo..=hi);
    if rng.gen_bool(0.5) {
        generate_ba(n.max(3), rng.gen_range(1..=2), seed).unwrap()
    } else {
        generate_er(n, (rng.gen_range(1.0..4.0) / n as f64).min(1.0), seed).unwrap()
    }
}

fn check_trichotomy(g: &Graph, base: &TieredBase, k1: u32, k2: u32) -> Result<(), String> {
    let n = g.node_count();
    let tier = |i: usize| base.tiers[g.id(i)].get();
    let core = (0..n).filter(|&i| tier(i) == 1).count();
    let want_core = (k1 as usize * n).div_ceil(100);
    ensure(core == want_core, || format!("{core} core nodes, expected {want_core}"))?;
    let backbone = (0..n).filter(|&i| tier(i) == 2).count();
    let want_backbone = ((k2 as usize * n).div_ceil(100)).min(n - want_core);
    ensure(backbone == want_backbone, || format!("{backbone} backbone nodes, expected {want_backbone}"))?;
    let anchors: BTreeSet<&NodeId> = base.entries.iter().map(|e| &e.anchor).collect();
    let contained: BTreeSet<&NodeId> = base.entries.iter().flat_map(|e| &e.nodes).collect();
    for i in 0..n {
        let v = g.id(i);
        let high_neighbor = g.neighbors(i).iter().any(|&w| tier(w) != 3);
        if tier(i) == 3 {
            ensure(anchors.contains(v) != high_neighbor, || format!("{v}: conditional storage policy violated"))?;
        } else {
            ensure(anchors.contains(v), || format!("{v}: tier {} without an entry", tier(i)))?;
        }
        let ok = anchors.contains(v) || contained.contains(v) || (tier(i) == 3 && high_neighbor);
        ensure(ok, || format!("{v} is neither anchored, contained nor suppressed"))?;
    }
    Ok(())
}

fn tiered_base() -> Check {
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + seed);
        let g = random_graph(&mut rng, 2, 200, seed);
        let cfg = BaseConfig { k1_percent: 100.0, k2_percent: 0.0, store_tier3: true, bypass_threshold: 0 };
        let base = build_base(&g, &cfg).map_err(|e| e.to_string())?;
        let stored = edge_set(base.entries.iter().flat_map(|e| e.edges.iter().cloned()));
        let truth = edge_set(g.edges().map(|(u, v, _)| (g.id(u).clone(), g.id(v).clone())));
        ensure(stored == truth, || format!("graph {seed}: {} stored edges vs {}", stored.len(), truth.len()))?;
    }
    let k1s = [1u32, 10, 25, 40, 60];
    let k2s = [0u32, 10, 20, 30, 40];
    let mut cases = 0;
    for (a, &k1) in k1s.iter().enumerate() {
        for (b, &k2) in k2s.iter().enumerate() {
            for j in 0..6u64 {
                let seed = 6000 + (a * 5 + b) as u64 * 10 + j;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let g = random_graph(&mut rng, 16, 120, seed);
                let cfg = BaseConfig { k1_percent: k1 as f64, k2_percent: k2 as f64, store_tier3: true, bypass_threshold: 0 };
                let base = build_base(&g, &cfg).map_err(|e| e.to_string())?;
                check_trichotomy(&g, &base, k1, k2).map_err(|e| format!("k1={k1} k2={k2} graph {seed}: {e}"))?;
                cases += 1;
            }
        }
    }
    Ok(format!("lossless on 100 graphs; trichotomy on {cases} graphs over a 5x5 grid"))
}

// ---------------------------------------------------------------- pruning

fn hops_from(g: &Graph, s: usize) -> Vec<Option<usize>> {
    let mut d = vec![None; g.node_count()];
    d[s] = Some(0);
    let mut frontier = vec![s];
    let mut k = 0;
    while !frontier.is_empty() {
        k += 1;
        let mut next = vec![];
        for u in frontier {
            for &w in g.neighbors(u) {
                if d[w].is_none() {
                    d[w] = Some(k);
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    d
}

/// Tier encoded as an importance rank so ascending order removes tier 3 first.
fn importance(base: &TieredBase, v: &NodeId) -> u8 {
    4 - base.tiers[v].get()
}

fn centrality(base: &TieredBase, v: &NodeId) -> i64 {
    // same 1e-12 grid the library uses to make float-noise ties deterministic
    (base.pagerank.get(v).unwrap() * 1e12).round() as i64
}

/// Ego strategy, step by step: ball, early return, sort candidates, drop prefix.
fn ego_by_hand(g: &Graph, base: &TieredBase, v: usize, k: usize, n_max: usize) -> (BTreeSet<NodeId>, Vec<NodeId>) {
    let d = hops_from(g, v);
    let ball: Vec<usize> = (0..g.node_count()).filter(|&i| d[i].is_some_and(|x| x <= k)).collect();
    if ball.len() <= n_max {
        return (ball.iter().map(|&i| g.id(i).clone()).collect(), vec![]);
    }
    let mut l: Vec<usize> = ball.iter().copied().filter(|&i| i != v).collect();
    l.sort_by_key(|&i| (Reverse(d[i].unwrap()), importance(base, g.id(i)), centrality(base, g.id(i)), g.id(i).clone()));
    let removed: Vec<NodeId> = l[..ball.len() - n_max].iter().map(|&i| g.id(i).clone()).collect();
    let kept = ball.iter().map(|&i| g.id(i).clone()).filter(|x| !removed.contains(x)).collect();
    (kept, removed)
}

/// The `k` best simple paths by (length, index sequence), via best-first search.
fn best_paths(g: &Graph, s: usize, t: usize, k: usize) -> Vec<Vec<usize>> {
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0usize, vec![s])));
    let mut out = vec![];
    while let Some(Reverse((len, p))) = heap.pop() {
        let at = *p.last().unwrap();
        if at == t {
            out.push(p);
            if out.len() == k {
                break;
            }
            continue;
        }
        for &w in g.neighbors(at) {
            if !p.contains(&w) {
                let mut q = p.clone();
                q.push(w);
                heap.push(Reverse((len + 1, q)));
            }
        }
    }
    out
}

/// Multi-centre strategy: path cover, one-hop expansion, early return, sort, drop.
fn multi_by_hand(
    g: &Graph,
    base: &TieredBase,
    s: usize,
    t: usize,
    yen_k: usize,
    n_max: usize,
) -> Option<(BTreeSet<NodeId>, Vec<NodeId>)> {
    let cover: BTreeSet<usize> = best_paths(g, s, t, yen_k).into_iter().flatten().collect();
    if cover.len() > n_max {
        return None;
    }
    let mut expanded = cover.clone();
    for &u in &cover {
        expanded.extend(g.neighbors(u));
    }
    if expanded.len() <= n_max {
        return Some((expanded.iter().map(|&i| g.id(i).clone()).collect(), vec![]));
    }
    let mut l: Vec<usize> = expanded.difference(&cover).copied().collect();
    l.sort_by_key(|&i| (importance(base, g.id(i)), centrality(base, g.id(i)), g.id(i).clone()));
    let removed: Vec<NodeId> = l[..expanded.len() - n_max].iter().map(|&i| g.id(i).clone()).collect();
    let kept = expanded.iter().map(|&i| g.id(i).clone()).filter(|x| !removed.contains(x)).collect();
    Some((kept, removed))
}

fn induced_ok(g: &Graph, sub: &Graph) -> bool {
    let ids: Vec<usize> = sub.nodes().iter().map(|v| g.index(v).unwrap()).collect();
    let want = ids.iter().enumerate().flat_map(|(a, &x)| ids[a + 1..].iter().filter(move |&&y| g.has_edge(x, y))).count();
    want == sub.edge_count()
}

fn pruning_conformance() -> Check {
    let (mut ego, mut multi, mut pruned, mut infeasible) = (0, 0, 0, 0);
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(7000 + seed);
        let g = random_graph(&mut rng, 6, 30, seed);
        let n = g.node_count();
        let cfg = BaseConfig {
            k1_percent: [10.0, 20.0, 30.0][rng.gen_range(0..3)],
            k2_percent: [0.0, 20.0][rng.gen_range(0..2)],
            store_tier3: true,
            bypass_threshold: 0,
        };
        let base = build_base(&g, &cfg).map_err(|e| e.to_string())?;
        let n_max = rng.gen_range(2..=14);
        if seed % 2 == 0 {
            let v = rng.gen_range(0..n);
            let k = rng.gen_range(1..=3);
            let ec = ExtractionConfig { k, n_max, yen_k: 1 };
            let sub = extract_ego(&g, &base, g.id(v), &ec).map_err(|e| e.to_string())?;
            let (kept, removed) = ego_by_hand(&g, &base, v, k, n_max);
            let got: BTreeSet<NodeId> = sub.graph.nodes().iter().cloned().collect();
            ensure(got == kept && sub.prune_log == removed, || {
                format!("ego fixture {seed}: kept {got:?} vs {kept:?}, log {:?} vs {removed:?}", sub.prune_log)
            })?;
            ensure(induced_ok(&g, &sub.graph), || format!("ego fixture {seed}: edges not induced"))?;
            pruned += !removed.is_empty() as usize;
            ego += 1;
        } else {
            let comps = g.components();
            let Some(c) = comps.iter().filter(|c| c.len() >= 2).max_by_key(|c| c.len()) else { continue };
            let s = c[rng.gen_range(0..c.len())];
            let t = loop {
                let x = c[rng.gen_range(0..c.len())];
                if x != s {
                    break x;
                }
            };
            let yen_k = rng.gen_range(1..=3);
            let ec = ExtractionConfig { k: 1, n_max, yen_k };
            let got = extract_multi(&g, &base, g.id(s), g.id(t), &ec);
            match (got, multi_by_hand(&g, &base, s, t, yen_k, n_max)) {
                (Err(SubgraphError::InfeasibleCap { .. }), None) => infeasible += 1,
                (Ok(sub), Some((kept, removed))) => {
                    let got: BTreeSet<NodeId> = sub.graph.nodes().iter().cloned().collect();
                    ensure(got == kept && sub.prune_log == removed, || {
                        format!("multi fixture {seed}: kept {got:?} vs {kept:?}, log {:?} vs {removed:?}", sub.prune_log)
                    })?;
                    ensure(induced_ok(&g, &sub.graph), || format!("multi fixture {seed}: edges not induced"))?;
                    pruned += !removed.is_empty() as usize;
                }
                (got, want) => return Err(format!("multi fixture {seed}: {got:?} vs {want:?}")),
            }
            multi += 1;
        }
    }
    ensure(ego + multi >= 200, || format!("only {} fixtures", ego + multi))?;
    Ok(format!("{ego} ego + {multi} multi fixtures ({pruned} pruned, {infeasible} infeasible caps), 100%"))
}

// ---------------------------------------------------------------- scale

fn peak_rss_kb() -> u64 {
    let status = fs::read_to_string("/proc/self/status").unwrap_or_default();
    status
        .lines()
        .find_map(|l| l.strip_prefix("VmHWM:"))
        .and_then(|v| v.trim().trim_end_matches("kB").trim().parse().ok())
        .unwrap_or(0)
}

/// Runs in a child process so the peak-memory reading covers only this work.
fn scale_child() {
    let g = generate_ba(2050, 2, 2050).unwrap();
    let start = Instant::now();
    let base = build_base(&g, &BaseConfig::default()).unwrap();
    let build = start.elapsed().as_secs_f64();
    let table = RoutingTable::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut times = vec![];
    for q in 0..500 {
        let v = g.id(rng.gen_range(0..g.node_count())).clone();
        let t = [TaskType::NodeDegree, TaskType::NeighborConnections, TaskType::HighestDegreeNeighbor][q % 3];
        let task = ParsedTask::from_instance(&TaskInstance::new(t, vec![v]), &table);
        let s = Instant::now();
        let ctx = base.retrieve(&task, 8000).unwrap();
        times.push(s.elapsed().as_secs_f64() * 1e3);
        std::hint::black_box(ctx);
    }
    times.sort_by(f64::total_cmp);
    println!("{build} {} {}", peak_rss_kb(), times[times.len() / 2]);
}

fn scale_target() -> Check {
    let out = Command::new(std::env::current_exe().unwrap()).arg("--scale-child").output().map_err(|e| e.to_string())?;
    let text = String::from_utf8_lossy(&out.stdout);
    let f: Vec<f64> = text.split_whitespace().filter_map(|x| x.parse().ok()).collect();
    ensure(out.status.success() && f.len() == 3, || format!("child failed: {}", String::from_utf8_lossy(&out.stderr)))?;
    let (secs, kb, median) = (f[0], f[1], f[2]);
    let mb = kb / 1024.0;
    ensure(secs < 30.0 && mb < 1024.0 && median < 10.0, || {
        format!("build {secs:.2}s, peak {mb:.0} MB, retrieve median {median:.3} ms")
    })?;
    Ok(format!("|V|=2050 build {secs:.2}s, peak {mb:.0} MB, retrieve median {median:.4} ms"))
}

// ---------------------------------------------------------------- closed loop

fn closed_loop() -> Check {
    let cfg = PipelineConfig::default();
    let bench = exemplar_benchmark(2026).map_err(|e| e.to_string())?;
    ensure(bench.items.len() == 60, || format!("{} exemplar items", bench.items.len()))?;
    let types: BTreeSet<TaskType> = bench.items.iter().map(|i| i.task.task_type).collect();
    ensure(types.len() == 10, || format!("{} task types", types.len()))?;
    let reasoner = exemplar_fixtures(&cfg, &bench).map_err(|e| e.to_string())?.with_fallback(Box::new(ContextReader));
    let dir = tempfile::tempdir().unwrap();
    let live = run_suite(&cfg, &bench, &reasoner, dir.path()).map_err(|e| e.to_string())?;
    let acc = live.report.overall_acc();
    ensure(acc == 1.0, || {
        let bad: Vec<_> = live.results.iter().filter(|r| !r.record.correct).map(|r| &r.record.item_id).collect();
        format!("overall accuracy {acc}, wrong: {bad:?}")
    })?;
    let again = replay_suite(&cfg, &bench, dir.path()).map_err(|e| e.to_string())?;
    let mut drawings = 0;
    for (a, b) in live.results.iter().zip(&again) {
        ensure(a.record.item_id == b.record.item_id, || "replay order differs".into())?;
        ensure(a.svg_hashes == b.svg_hashes, || format!("{}: drawings differ on replay", a.record.item_id))?;
        ensure(a.record.predicted == b.record.predicted, || format!("{}: answer differs on replay", a.record.item_id))?;
        drawings += a.svg_hashes.len();
    }
    let visual = live.results.iter().filter(|r| !r.svg_hashes.is_empty()).count();
    Ok(format!("60 items accuracy 1.0 ({visual} visual sessions); replay identical on {drawings} drawings"))
}

// ---------------------------------------------------------------- preference loss

fn dpo_loss_check() -> Check {
    for beta in [0.1, 0.5, 1.0, 2.0] {
        let l = dpo_loss_from_margin(0.0, beta);
        ensure((l - std::f64::consts::LN_2).abs() <= 1e-9, || format!("zero margin, beta {beta}: {l}"))?;
    }
    let l = dpo_loss_from_margin(9f64.ln(), 1.0);
    ensure((l + 0.9f64.ln()).abs() <= 1e-9, || format!("margin ln 9: {l}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let h = 1e-5;
    for _ in 0..100 {
        let x = DpoInputs {
            logp_w_policy: rng.gen_range(-40.0..-0.5),
            logp_l_policy: rng.gen_range(-40.0..-0.5),
            logp_w_ref: rng.gen_range(-40.0..-0.5),
            logp_l_ref: rng.gen_range(-40.0..-0.5),
            beta: rng.gen_range(0.05..2.0),
        };
        let g = dpo_loss_grad(x.margin(), x.beta);
        // the margin enters with sign +, -, -, + for the four log-probabilities
        let probes: [(fn(&mut DpoInputs) -> &mut f64, f64); 4] = [
            (|d| &mut d.logp_w_policy, 1.0),
            (|d| &mut d.logp_l_policy, -1.0),
            (|d| &mut d.logp_w_ref, -1.0),
            (|d| &mut d.logp_l_ref, 1.0),
        ];
        for (field, sign) in probes {
            let (mut up, mut down) = (x, x);
            *field(&mut up) += h;
            *field(&mut down) -= h;
            let fd = (dpo_loss(&up).unwrap() - dpo_loss(&down).unwrap()) / (2.0 * h);
            worst = worst.max((fd - sign * g).abs());
        }
    }
    ensure(worst <= 1e-6, || format!("gradient off by {worst:e}"))?;
    Ok(format!("ln 2 and -ln 0.9 exact to 1e-9; gradient worst error {worst:.1e} on 100 points"))
}

// ---------------------------------------------------------------- dataset

fn dataset_generation() -> Check {
    let cfg = BenchConfig::large_scale(77);
    let start = Instant::now();
    let bench = generate_benchmark(&cfg).map_err(|e| e.to_string())?;
    let simple = bench.items.iter().filter(|i| i.category == Category::Simple).count();
    let complex = bench.items.len() - simple;
    ensure((simple, complex) == (8136, 5724), || format!("{simple} simple, {complex} complex"))?;
    for it in &bench.items {
        let g = bench.graph(it).ok_or("dangling graph reference")?;
        ReferenceSolver::new(g).verify(&it.task, &it.gold).map_err(|e| format!("{}: {e}", it.id))?;
    }
    let dpo = DpoConfig { keep_svgs: false, ..DpoConfig::uniform(77) };
    let ds = build_preference_dataset(&bench, &dpo).map_err(|e| e.to_string())?;
    ensure(ds.pairs.len() == complex, || format!("{} pairs for {complex} complex items", ds.pairs.len()))?;
    let items: HashMap<&str, _> = bench.items.iter().map(|i| (i.id.as_str(), i)).collect();
    for p in &ds.pairs {
        let it = items[p.item_id.as_str()];
        let g = bench.graph(it).unwrap();
        verify_trace(g, &it.task, &p.chosen.steps, &p.chosen.answer).map_err(|v| format!("{}: {v}", p.id))?;
        ensure(p.chosen.answer == it.gold, || format!("{}: chosen answer is not gold", p.id))?;
        ensure(p.rejected.steps != p.chosen.steps || p.rejected.answer != p.chosen.answer, || {
            format!("{}: rejected trace equals chosen", p.id)
        })?;
        ensure(p.id.ends_with(p.error_category.name()), || format!("{}: category label mismatch", p.id))?;
    }
    let first = start.elapsed();

    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    write_benchmark(&bench, dirs[0].path()).map_err(|e| e.to_string())?;
    write_dataset(&ds, &dirs[0].path().join("dpo")).map_err(|e| e.to_string())?;
    drop(ds);
    let bench2 = generate_benchmark(&cfg).map_err(|e| e.to_string())?;
    write_benchmark(&bench2, dirs[1].path()).map_err(|e| e.to_string())?;
    let ds2 = build_preference_dataset(&bench2, &dpo).map_err(|e| e.to_string())?;
    write_dataset(&ds2, &dirs[1].path().join("dpo")).map_err(|e| e.to_string())?;
    let mut files = vec!["items.jsonl".to_string(), "manifest.json".into(), "dpo/pairs.jsonl".into(), "dpo/manifest.json".into()];
    files.extend(bench.graphs.keys().map(|k| format!("graphs/{k}.json")));
    for f in &files {
        let a = fs::read(dirs[0].path().join(f)).map_err(|e| format!("{f}: {e}"))?;
        let b = fs::read(dirs[1].path().join(f)).map_err(|e| format!("{f}: {e}"))?;
        ensure(a == b, || format!("{f} differs between equal-seed runs"))?;
    }
    Ok(format!(
        "8136 simple + 5724 complex, all gold revalidated, {} pairs step-true, {} files byte-identical ({:.0}s first pass)",
        complex,
        files.len(),
        first.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- live smoke

fn stub_reply(body: &serde_json::Value) -> (u16, String) {
    let system = body["messages"][0]["content"].as_str().unwrap_or_default();
    let user = body["messages"][1]["content"][0]["text"].as_str().unwrap_or_default();
    // answers text questions from the context; visual steps get a neutral observation
    let text = match ContextReader.complete(&ReasonerRequest::new(system, user)) {
        Ok(r) => r.text,
        Err(_) => format!("The drawing shows the extracted subgraph.\n{}", render_action(None)),
    };
    let reply = serde_json::json!({"choices": [{"message": {"role": "assistant", "content": text}}]});
    (200, reply.to_string())
}

fn live_smoke() -> Check {
    let bench = exemplar_benchmark(5).map_err(|e| e.to_string())?;
    let ids: BTreeSet<String> = bench.items.iter().step_by(3).take(20).map(|i| i.id.clone()).collect();
    let smoke = subset(&bench, &ids);
    let _stub;
    let (http, origin) = match HttpConfig::from_env() {
        Ok(c) => (c, "REASONER_URL"),
        Err(_) => {
            let s = graphvista::llm::stub::StubServer::start(stub_reply);
            let c = HttpConfig::new(s.url(), "stub");
            _stub = s;
            (c, "local stub server")
        }
    };
    let reasoner = HttpReasoner::new(http).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig { jobs: 4, ..Default::default() };
    let out = run_suite(&cfg, &smoke, &reasoner, dir.path()).map_err(|e| e.to_string())?;
    let backend_errors = out
        .results
        .iter()
        .filter(|r| matches!(&r.record.predicted, Prediction::Error { class, .. } if class == "backend"))
        .count();
    ensure(out.results.len() == 20, || format!("{} items answered", out.results.len()))?;
    ensure(backend_errors == 0, || format!("{backend_errors} backend failures against {origin}"))?;
    ensure(dir.path().join("report.json").exists(), || "no report written".into())?;
    Ok(format!(
        "20 items over HTTP ({origin}), report written, accuracy {:.2} (not asserted)",
        out.report.overall_acc()
    ))
}

// ---------------------------------------------------------------- driver

fn main() {
    if std::env::args().any(|a| a == "--scale-child") {
        scale_child();
        return;
    }
    let checks: [(&str, fn() -> Check); 10] = [
        ("oracle fidelity", oracle_fidelity),
        ("path-algorithm fidelity", path_fidelity),
        ("centrality fidelity", centrality_fidelity),
        ("tiered-base losslessness and coverage", tiered_base),
        ("pruning conformance", pruning_conformance),
        ("scale target", scale_target),
        ("closed visual reasoning loop", closed_loop),
        ("preference loss correctness", dpo_loss_check),
        ("dataset generation", dataset_generation),
        ("live backend smoke run", live_smoke),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1}s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{secs:.1}s]");
            }
        }
    }
    println!(
        "NOTE  not reproduced here: accuracies of hosted vision-language models, their ablations and fine-tuning \
         results require live model inference and training; the checks above cover the deterministic machinery, \
         and the smoke run exercises the HTTP path without an accuracy threshold."
    );
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
