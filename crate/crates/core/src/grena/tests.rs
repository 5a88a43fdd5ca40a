use super::*;
use crate::graph::Graph;
use crate::rag::{build_base, BaseConfig};
use crate::reasoning::Claim;
use crate::render::HighlightAction;
use crate::router::parse_question;
use crate::subgraph::ExtractionConfig;

fn small_config(seed: u64) -> BenchConfig {
    BenchConfig {
        node_sizes: vec![12, 24],
        graphs_per_size: 2,
        family: FamilyMix { er_fraction: 0.5, er_mean_degree: 3.0, ba_m: 2 },
        tasks_per_graph: TaskType::ALL.into_iter().map(|t| (t, 3)).collect(),
        seed,
        max_tries: 50,
    }
}

fn fixture() -> Graph {
    Graph::from_edges(
        &["A", "B", "C", "D", "E", "F", "G"],
        &[("A", "B"), ("A", "C"), ("B", "C"), ("A", "D"), ("C", "E"), ("D", "E"), ("E", "F"), ("B", "G")],
    )
    .unwrap()
}

fn trace_for(g: &Graph, t: TaskInstance) -> GoldTrace {
    let base = build_base(g, &BaseConfig::default()).unwrap();
    make_gold_trace(g, &base, &t, &ExtractionConfig::default(), 7).unwrap()
}

fn kinds(tr: &GoldTrace) -> Vec<Option<&'static str>> {
    tr.steps.iter().map(|s| s.action.as_ref().map(HighlightAction::kind_name)).collect()
}

fn id(s: &str) -> NodeId {
    NodeId::new(s).unwrap()
}

#[test]
fn single_node_count_item() {
    let cfg = BenchConfig {
        node_sizes: vec![50],
        graphs_per_size: 1,
        family: FamilyMix::default(),
        tasks_per_graph: [(TaskType::NodeCount, 1)].into(),
        seed: 1,
        max_tries: 50,
    };
    let b = generate_benchmark(&cfg).unwrap();
    assert_eq!(b.items.len(), 1);
    assert_eq!(b.items[0].gold, GoldAnswer::integer(50));
}

#[test]
fn large_scale_plan_hits_split() {
    let cfg = BenchConfig::large_scale(0);
    let p = cfg.planned();
    assert_eq!((p[&Category::Simple], p[&Category::Complex]), (8136, 5724));
}

#[test]
fn items_round_trip_through_parser() {
    let b = generate_benchmark(&small_config(3)).unwrap();
    assert!(b.manifest.notes.len() < b.items.len());
    let table = RoutingTable::default();
    for it in &b.items {
        let g = b.graph(it).unwrap();
        let parsed = parse_question(&it.question, g, None, &table).unwrap();
        assert_eq!(parsed.to_instance(), it.task, "{}", it.question);
        assert_eq!(solve_task(g, &it.task).unwrap(), it.gold);
    }
}

#[test]
fn triangle_trace_matches_exemplar_shape() {
    let g = fixture();
    let tr = trace_for(&g, TaskInstance::new(TaskType::TriangleCounting, vec![id("A")]).with_param("exists", 1));
    assert_eq!(kinds(&tr), [Some("highlight_nodes"), Some("highlight_edges"), Some("highlight_edges")]);
    assert_eq!(
        tr.steps[0].claims[0],
        Claim::Nodes { subject: crate::reasoning::Subject::Neighbors { node: id("A") }, nodes: vec![id("B"), id("C"), id("D")] }
    );
    assert_eq!(tr.answer.answer, GoldAnswer::Boolean { value: true, witness: Some(vec![id("A"), id("B"), id("C")]) });
    assert_eq!(tr.states.len(), 4);
    verify_trace(&g, &tr.task, &tr.steps, &tr.answer.answer).unwrap();
}

#[test]
fn shortest_path_trace_walks_layers() {
    let g = fixture();
    let tr = trace_for(&g, TaskInstance::new(TaskType::ShortestPath, vec![id("B"), id("F")]));
    assert_eq!(tr.steps.len(), 5);
    assert_eq!(kinds(&tr)[1..], [Some("highlight_path"); 4]);
    let GoldAnswer::NodeSequence { value, .. } = &tr.answer.answer else { panic!() };
    assert_eq!(value.len(), 4);
    verify_trace(&g, &tr.task, &tr.steps, &tr.answer.answer).unwrap();
}

#[test]
fn neighbor_trace_has_two_steps() {
    let g = fixture();
    let tr = trace_for(&g, TaskInstance::new(TaskType::NeighborConnections, vec![id("A")]));
    assert_eq!(kinds(&tr), [Some("highlight_nodes"); 2]);
    assert_eq!(tr.answer.answer, GoldAnswer::integer(1));
}

#[test]
fn simple_tasks_have_no_template() {
    let g = fixture();
    let base = build_base(&g, &BaseConfig::default()).unwrap();
    let t = TaskInstance::new(TaskType::NodeDegree, vec![id("A")]);
    let err = make_gold_trace(&g, &base, &t, &ExtractionConfig::default(), 0).unwrap_err();
    assert!(matches!(err, TraceError::TemplateMissing(TaskType::NodeDegree)));
}

#[test]
fn false_claims_are_caught() {
    let g = fixture();
    let tr = trace_for(&g, TaskInstance::new(TaskType::TriangleCounting, vec![id("A")]));
    let mut steps = tr.steps.clone();
    let Claim::Nodes { nodes, .. } = &mut steps[0].claims[0] else { panic!() };
    nodes[0] = id("F");
    let v = verify_trace(&g, &tr.task, &steps, &tr.answer.answer).unwrap_err();
    assert_eq!(v.step, 1);
    assert!(verify_trace(&g, &tr.task, &tr.steps, &GoldAnswer::integer(2)).is_err());
}

#[test]
fn every_gold_trace_is_sound_and_every_injection_differs() {
    let b = generate_benchmark(&small_config(11)).unwrap();
    let bases: BTreeMap<_, _> =
        b.graphs.iter().map(|(k, g)| (k.clone(), build_base(g, &BaseConfig::default()).unwrap())).collect();
    let mut applied: BTreeMap<ErrorCategory, usize> = BTreeMap::new();
    for it in b.items.iter().filter(|i| i.category == Category::Complex) {
        let g = b.graph(it).unwrap();
        let tr = make_gold_trace(g, &bases[&it.graph_ref], &it.task, &ExtractionConfig::default(), 1).unwrap();
        verify_trace(g, &it.task, &tr.steps, &tr.answer.answer).unwrap_or_else(|v| panic!("{}: {v}", it.id));
        for c in ErrorCategory::ALL {
            let Ok(r) = inject_error(g, &tr, c, 5) else { continue };
            *applied.entry(c).or_default() += 1;
            assert!(r.steps != tr.steps || r.answer != tr.answer.answer, "{} {c:?}", it.id);
            match c {
                ErrorCategory::Factual | ErrorCategory::Computation | ErrorCategory::Logical => {
                    assert!(verify_trace(g, &it.task, &r.steps, &r.answer).is_err(), "{} {c:?}", it.id);
                }
                ErrorCategory::OmittedSteps => {
                    assert_eq!(r.steps.len() + 1, tr.steps.len());
                    assert!(r.steps.iter().enumerate().all(|(i, s)| s.index == i + 1));
                }
                ErrorCategory::VisualNeglect => {
                    assert!(r.steps.iter().all(|s| s.action.is_none() && !s.observation.contains(VISUAL_MARK)));
                }
                ErrorCategory::VisualizationMisuse => {
                    let a: Vec<_> = tr.steps.iter().map(|s| &s.action).collect();
                    let b: Vec<_> = r.steps.iter().map(|s| &s.action).collect();
                    assert_ne!(a, b);
                }
                _ => {}
            }
        }
    }
    assert_eq!(applied.len(), 8, "{applied:?}");
}

#[test]
fn triangle_mix_stays_balanced() {
    let cfg = BenchConfig {
        node_sizes: vec![30, 40],
        graphs_per_size: 2,
        family: FamilyMix::default(),
        tasks_per_graph: [(TaskType::TriangleCounting, 25)].into(),
        seed: 5,
        max_tries: 50,
    };
    let b = generate_benchmark(&cfg).unwrap();
    assert_eq!(b.items.len(), 100);
    let ds = build_preference_dataset(&b, &DpoConfig::uniform(9)).unwrap();
    assert_eq!(ds.pairs.len(), 100);
    for (c, n) in &ds.manifest.histogram {
        assert!((9..=16).contains(n), "{c:?}: {n}");
    }
    for p in &ds.pairs {
        let it = b.items.iter().find(|i| i.id == p.item_id).unwrap();
        assert_eq!(p.chosen.answer, it.gold);
        assert!(p.rejected.steps != p.chosen.steps || p.rejected.answer != p.chosen.answer);
        assert!(ds.svgs.contains_key(&p.input.initial_svg));
        let back: PreferencePair = serde_json::from_str(&serde_json::to_string(p).unwrap()).unwrap();
        assert_eq!(&back, p);
    }
}

#[test]
fn quotas_use_largest_remainder() {
    let mix: BTreeMap<_, _> = ErrorCategory::ALL.into_iter().map(|c| (c, 1.0)).collect();
    let q = quotas(&mix, 100);
    assert_eq!(q.values().sum::<usize>(), 100);
    assert!(q.values().all(|&n| n == 12 || n == 13));
}

#[test]
fn equal_seeds_give_identical_files() {
    let cfg = small_config(21);
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let b = generate_benchmark(&cfg).unwrap();
        write_benchmark(&b, d.path()).unwrap();
        let ds = build_preference_dataset(&b, &DpoConfig::uniform(2)).unwrap();
        write_dataset(&ds, &d.path().join("dpo")).unwrap();
    }
    for f in ["items.jsonl", "manifest.json", "graphs/g000.json", "dpo/pairs.jsonl", "dpo/manifest.json"] {
        let a = fs::read(dirs[0].path().join(f)).unwrap();
        assert_eq!(a, fs::read(dirs[1].path().join(f)).unwrap(), "{f}");
    }
    let loaded = load_benchmark(dirs[0].path()).unwrap();
    assert_eq!(loaded.items, generate_benchmark(&cfg).unwrap().items);
    assert!(!load_pairs(&dirs[0].path().join("dpo")).unwrap().is_empty());
}

#[test]
fn config_validation() {
    let mut cfg = small_config(0);
    cfg.node_sizes.push(5000);
    assert!(matches!(generate_benchmark(&cfg), Err(GrenaError::Config(_))));
    let text = "node_sizes = [20]\ngraphs_per_size = 1\nseed = 4\n[tasks_per_graph]\nshortest_path = 2\n";
    let cfg = BenchConfig::from_toml(text).unwrap();
    assert_eq!(cfg.tasks_per_graph[&TaskType::ShortestPath], 2);
    assert_eq!(cfg.max_tries, 50);
}
