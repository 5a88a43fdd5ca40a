use graphvista::graph::{
    betweenness, distance_matrix, generate_ba, generate_er, pagerank_default, shortest_path, yen_k_shortest, Graph,
    GraphBuilder,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn weighted(g: &Graph, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = GraphBuilder::new();
    for v in g.nodes() {
        b.add_node(v.clone());
    }
    for (u, v, _) in g.edges() {
        b.add_edge(g.id(u).clone(), g.id(v).clone(), Some([1.0, 2.0, 3.0][rng.gen_range(0..3)]));
    }
    b.build().unwrap()
}

/// Every simple s-t path with its length, sorted by (length, id sequence).
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

#[test]
fn yen_matches_exhaustive_enumeration() {
    for seed in 0..120u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = generate_er(rng.gen_range(3..=9), 0.45, seed).unwrap();
        let g = if seed % 2 == 0 { base } else { weighted(&base, seed) };
        let n = g.node_count();
        let (s, t) = (0, n - 1);
        let k = rng.gen_range(1..=8);
        let expected: Vec<_> = all_paths(&g, s, t).into_iter().take(k).collect();
        let got = yen_k_shortest(&g, g.id(s), g.id(t), k).unwrap();
        assert_eq!(got.len(), expected.len(), "seed {seed}");
        for (a, (p, len)) in got.iter().zip(&expected) {
            let idx: Vec<usize> = a.path.iter().map(|x| g.index(x).unwrap()).collect();
            assert_eq!(&idx, p, "seed {seed}");
            assert!((a.length - len).abs() < 1e-9);
        }
    }
}

#[test]
fn bfs_distances_match_floyd_warshall() {
    for seed in 0..60u64 {
        let g = generate_ba(40, 2, seed).unwrap();
        let n = g.node_count();
        let mut d = vec![vec![u64::MAX / 4; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0;
        }
        for (u, v, _) in g.edges() {
            d[u][v] = 1;
            d[v][u] = 1;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
                }
            }
        }
        let bfs = distance_matrix(&g);
        for i in 0..n {
            for j in 0..n {
                assert_eq!(bfs[i][j].map(|x| x as u64), (d[i][j] < u64::MAX / 4).then_some(d[i][j]));
            }
        }
    }
}

/// Stationary vector of the damped walk, by solving the linear system directly.
fn pagerank_linear(g: &Graph, damping: f64) -> Vec<f64> {
    let n = g.node_count();
    let mut p = DMatrix::<f64>::zeros(n, n);
    for u in 0..n {
        let deg = g.degree(u);
        for v in 0..n {
            p[(v, u)] = if deg == 0 { 1.0 / n as f64 } else if g.has_edge(u, v) { 1.0 / deg as f64 } else { 0.0 };
        }
    }
    let a = DMatrix::<f64>::identity(n, n) - p * damping;
    let b = DVector::<f64>::from_element(n, (1.0 - damping) / n as f64);
    let x = a.lu().solve(&b).unwrap();
    let total: f64 = x.iter().sum();
    x.iter().map(|v| v / total).collect()
}

#[test]
fn pagerank_matches_linear_solve() {
    for seed in 0..25u64 {
        let g = if seed % 2 == 0 { generate_er(60, 0.05, seed).unwrap() } else { generate_ba(60, 2, seed).unwrap() };
        let got = pagerank_default(&g).unwrap().to_vec();
        let want = pagerank_linear(&g, 0.85);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-7, "seed {seed}: {a} vs {b}");
        }
    }
}

#[test]
fn betweenness_matches_path_counting() {
    // for each pair, fraction of shortest paths through v, computed by enumeration
    for seed in 0..20u64 {
        let g = generate_er(9, 0.35, seed).unwrap();
        let n = g.node_count();
        let mut want = vec![0.0; n];
        for s in 0..n {
            for t in s + 1..n {
                let paths = all_paths(&g, s, t);
                let Some(best) = paths.first().map(|p| p.1) else { continue };
                let shortest: Vec<_> = paths.iter().filter(|p| p.1 == best).collect();
                for (v, slot) in want.iter_mut().enumerate() {
                    let through = shortest.iter().filter(|p| p.0[1..p.0.len() - 1].contains(&v)).count();
                    *slot += through as f64 / shortest.len() as f64;
                }
            }
        }
        let got = betweenness(&g).to_vec();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9, "seed {seed}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shortest_path_is_lexicographic_minimum(n in 3usize..9, p in 0.2f64..0.7, seed in any::<u64>()) {
        let g = generate_er(n, p, seed).unwrap();
        let want = all_paths(&g, 0, n - 1).into_iter().next();
        let got = shortest_path(&g, g.id(0), g.id(n - 1)).unwrap();
        match (want, got) {
            (None, None) => {}
            (Some((path, len)), Some(r)) => {
                let idx: Vec<usize> = r.path.iter().map(|x| g.index(x).unwrap()).collect();
                prop_assert_eq!(idx, path);
                prop_assert!((r.length - len).abs() < 1e-12);
            }
            (w, r) => prop_assert!(false, "{:?} vs {:?}", w, r),
        }
    }

    #[test]
    fn pagerank_sums_to_one(n in 1usize..80, p in 0.0f64..0.2, seed in any::<u64>()) {
        let g = generate_er(n, p, seed).unwrap();
        let pr = pagerank_default(&g).unwrap().to_vec();
        prop_assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(pr.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn edge_list_and_json_round_trip(n in 1usize..40, p in 0.0f64..0.3, seed in any::<u64>()) {
        let g = generate_er(n, p, seed).unwrap();
        prop_assert_eq!(&Graph::parse_edge_list(&g.to_edge_list()).unwrap(), &g);
        prop_assert_eq!(&Graph::parse_any(&g.to_json()).unwrap(), &g);
    }
}
