use graphvista::graph::{generate_ba, generate_er, Graph, GraphBuilder, NodeId};
use graphvista::oracles::{brute, reference::ReferenceSolver, solve_task, GoldAnswer, OracleError, TaskInstance, TaskType};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instances(g: &Graph, rng: &mut ChaCha8Rng) -> Vec<TaskInstance> {
    let n = g.node_count();
    let pick = |rng: &mut ChaCha8Rng| g.id(rng.gen_range(0..n)).clone();
    let mut out = Vec::new();
    for t in TaskType::ALL {
        let (_, hi) = t.arity();
        let mut ents = Vec::new();
        if hi >= 1 {
            ents.push(pick(rng));
        }
        if t.arity().0 == 2 {
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
        out.push(inst.clone());
        if t.arity() == (0, 1) {
            out.push(TaskInstance::new(t, vec![]));
        }
        if t == TaskType::TriangleCounting {
            out.push(inst.with_param("exists", 1));
        }
    }
    out
}

fn same(fast: &GoldAnswer, slow: &GoldAnswer) -> bool {
    match (fast, slow) {
        // brute force does not reproduce the forest-specific cycle witness
        (GoldAnswer::Boolean { value: a, .. }, GoldAnswer::Boolean { value: b, witness: None }) => a == b,
        (GoldAnswer::NodeSequence { value: a, length: la }, GoldAnswer::NodeSequence { value: b, length: lb }) => {
            a == b && (la.unwrap() - lb.unwrap()).abs() < 1e-9
        }
        (GoldAnswer::Real { value: a }, GoldAnswer::Real { value: b }) => (a - b).abs() < 1e-9,
        _ => fast == slow,
    }
}

fn check_graph(g: &Graph, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reference = ReferenceSolver::new(g);
    for t in instances(g, &mut rng) {
        let fast = solve_task(g, &t);
        let slow = brute::solve_task(g, &t);
        match (&fast, &slow) {
            (Ok(f), Ok(s)) => {
                assert!(same(f, s), "{t:?} on {}\nfast {f:?}\nbrute {s:?}", g.to_json());
                if let Err(e) = reference.verify(&t, f) {
                    panic!("{t:?} on {}: reference rejects {f:?}: {e}", g.to_json());
                }
            }
            (Err(OracleError::Unsatisfiable(_)), Err(OracleError::Unsatisfiable(_))) => {
                assert!(matches!(reference.answer(&t), Err(OracleError::Unsatisfiable(_))));
            }
            _ => panic!("{t:?} on {}: fast {fast:?} brute {slow:?}", g.to_json()),
        }
    }
}

#[test]
fn fast_brute_and_reference_agree_on_random_er() {
    for seed in 0..400u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=15);
        let p = rng.gen_range(0.05..0.6);
        check_graph(&generate_er(n, p, seed).unwrap(), seed);
    }
}

#[test]
fn fast_brute_and_reference_agree_on_random_ba() {
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(4..=15);
        let m = rng.gen_range(1..=3.min(n - 1));
        check_graph(&generate_ba(n, m, seed).unwrap(), seed);
    }
}

#[test]
fn weighted_graphs_agree() {
    for seed in 0..150u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = generate_er(rng.gen_range(2..=12), 0.35, seed).unwrap();
        let mut b = GraphBuilder::new();
        for v in base.nodes() {
            b.add_node(v.clone());
        }
        for (u, v, _) in base.edges() {
            // a few repeated small weights so ties actually occur
            let w = [1.0, 2.0, 0.5, 1.5][rng.gen_range(0..4)];
            b.add_edge(base.id(u).clone(), base.id(v).clone(), Some(w));
        }
        check_graph(&b.build().unwrap(), seed);
    }
}

#[test]
fn planarity_agrees_on_dense_and_sparse_small_graphs() {
    let mut planar = 0;
    let mut total = 0;
    for seed in 0..600u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let n = rng.gen_range(5..=12);
        let g = generate_er(n, rng.gen_range(0.2..0.7), seed).unwrap();
        let lr = graphvista::oracles::check_planarity(&g);
        assert_eq!(lr, brute::is_planar(&g), "seed {seed}: {}", g.to_json());
        assert_eq!(lr, graphvista::oracles::reference::dmp_planar(&g), "seed {seed}");
        planar += lr as usize;
        total += 1;
    }
    // make sure both outcomes were exercised
    assert!(planar > 50 && total - planar > 50, "planar {planar} of {total}");
}

#[test]
fn planarity_lr_and_dmp_agree_on_large_graphs() {
    for seed in 0..30u64 {
        for g in [generate_er(300, 2.2 / 300.0, seed).unwrap(), generate_ba(300, 2, seed).unwrap()] {
            assert_eq!(
                graphvista::oracles::check_planarity(&g),
                graphvista::oracles::reference::dmp_planar(&g),
                "seed {seed}"
            );
        }
    }
}

fn relabel(g: &Graph, perm: &[usize]) -> Graph {
    let name = |i: usize| NodeId::new(format!("n{}", perm[i])).unwrap();
    let mut b = GraphBuilder::new();
    for i in 0..g.node_count() {
        b.add_node(name(i));
    }
    for (u, v, _) in g.edges() {
        b.add_edge(name(u), name(v), None);
    }
    b.build().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn label_free_answers_survive_relabelling(n in 3usize..40, p in 0.02f64..0.3, seed in any::<u64>()) {
        let g = generate_er(n, p, seed).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let h = relabel(&g, &perm);
        for t in [
            TaskType::NodeCount, TaskType::EdgeCount, TaskType::ConnectivityCheck,
            TaskType::CycleDetection, TaskType::BipartiteDetection, TaskType::PlanarityTesting,
            TaskType::TriangleCounting,
        ] {
            let strip = |a: GoldAnswer| match a {
                GoldAnswer::Boolean { value, .. } => GoldAnswer::boolean(value),
                GoldAnswer::Integer { value, .. } => GoldAnswer::integer(value),
                other => other,
            };
            let a = strip(solve_task(&g, &TaskInstance::new(t, vec![])).unwrap());
            let b = strip(solve_task(&h, &TaskInstance::new(t, vec![])).unwrap());
            prop_assert_eq!(a, b, "{}", t);
        }
        let crit_g = solve_task(&g, &TaskInstance::new(TaskType::CriticalNodeDetection, vec![])).unwrap();
        let crit_h = solve_task(&h, &TaskInstance::new(TaskType::CriticalNodeDetection, vec![])).unwrap();
        let (GoldAnswer::NodeSet { value: cg }, GoldAnswer::NodeSet { value: ch }) = (crit_g, crit_h) else { unreachable!() };
        let mut mapped: Vec<NodeId> = cg.iter().map(|x| {
            let i = g.index(x).unwrap();
            NodeId::new(format!("n{}", perm[i])).unwrap()
        }).collect();
        mapped.sort();
        prop_assert_eq!(mapped, ch);
    }

    #[test]
    fn reference_accepts_every_fast_answer(n in 2usize..60, p in 0.01f64..0.2, seed in any::<u64>()) {
        let g = generate_er(n, p, seed).unwrap();
        let r = ReferenceSolver::new(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in instances(&g, &mut rng) {
            if let Ok(a) = solve_task(&g, &t) {
                prop_assert!(r.verify(&t, &a).is_ok(), "{:?} {:?}", t, r.verify(&t, &a));
            }
        }
    }
}
