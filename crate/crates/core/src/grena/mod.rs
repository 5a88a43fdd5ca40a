//! Benchmark generation: graphs, questions with gold answers, gold traces and
//! the preference dataset built from them.

mod dataset;
mod inject;
mod trace;
mod verify;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use dataset::{
    build_preference_dataset, load_pairs, quotas, write_dataset, ChosenPath, DatasetManifest, DpoConfig, PairInput,
    PreferenceDataset, PreferencePair, RejectedPath,
};
pub use inject::{corrupt_answer, inject_error, Edit, ErrorCategory, Inapplicable, RejectedTrace};
pub use trace::{conclusion, make_gold_trace, trace_subgraph, GoldTrace, TraceError, VISUAL_MARK};
pub use verify::{first_false_claim, verify_trace, ClaimViolation};

use crate::graph::{generate_ba, generate_er, Graph, GraphError, NodeId};
use crate::oracles::{solve_task, GoldAnswer, OracleError, ReferenceSolver, TaskInstance, TaskType};
use crate::router::{render_question, Category, RoutingTable};

#[derive(Debug, thiserror::Error)]
pub enum GrenaError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("gold answer for {item} failed revalidation: {detail}")]
    Revalidation { item: String, detail: String },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Inject(#[from] Inapplicable),
    #[error("cannot access {path}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed {path}: {detail}")]
    Format { path: String, detail: String },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> GrenaError + '_ {
    move |source| GrenaError::Io { path: path.display().to_string(), source }
}

/// Seed for a named sub-stream of `master`, independent of generation order.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(label.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyMix {
    /// Share of Erdős–Rényi graphs; the rest are Barabási–Albert.
    pub er_fraction: f64,
    pub er_mean_degree: f64,
    pub ba_m: usize,
}

impl Default for FamilyMix {
    fn default() -> Self {
        Self { er_fraction: 0.5, er_mean_degree: 4.0, ba_m: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Er,
    Ba,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub node_sizes: Vec<usize>,
    pub graphs_per_size: usize,
    #[serde(default)]
    pub family: FamilyMix,
    pub tasks_per_graph: BTreeMap<TaskType, usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tries")]
    pub max_tries: usize,
}

fn default_tries() -> usize {
    50
}

const SIMPLE_PER_GRAPH: [(TaskType, usize); 7] = [
    (TaskType::NodeCount, 1),
    (TaskType::EdgeCount, 1),
    (TaskType::ConnectivityCheck, 1),
    (TaskType::NodeDegree, 44),
    (TaskType::EdgeExistence, 92),
    (TaskType::FindConnectedEdges, 44),
    (TaskType::HighestDegreeNeighbor, 43),
];

const COMPLEX_PER_GRAPH: [(TaskType, usize); 11] = [
    (TaskType::BipartiteDetection, 1),
    (TaskType::CriticalNodeDetection, 1),
    (TaskType::CycleDetection, 1),
    (TaskType::PlanarityTesting, 1),
    (TaskType::CliqueDetection, 3),
    (TaskType::TriangleCounting, 26),
    (TaskType::CommonThirdOrderNeighbors, 26),
    (TaskType::ConnectivityAnalysis, 25),
    (TaskType::NeighborConnections, 25),
    (TaskType::ShortestPath, 25),
    (TaskType::ThirdOrderNeighbors, 25),
];

impl BenchConfig {
    /// 36 graphs from 50 to 2050 nodes, 226 simple and 159 complex questions each.
    pub fn large_scale(seed: u64) -> Self {
        Self {
            node_sizes: vec![50, 100, 200, 300, 400, 512, 600, 800, 1024, 1200, 1600, 2050],
            graphs_per_size: 3,
            family: FamilyMix::default(),
            tasks_per_graph: SIMPLE_PER_GRAPH.into_iter().chain(COMPLEX_PER_GRAPH).collect(),
            seed,
            max_tries: default_tries(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, GrenaError> {
        let cfg: Self = toml::from_str(text).map_err(|e| GrenaError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), GrenaError> {
        let bad = |m: String| Err(GrenaError::Config(m));
        if let Some(&n) = self.node_sizes.iter().find(|&&n| !(3..=2050).contains(&n)) {
            return bad(format!("node size {n} outside [3, 2050]"));
        }
        if !(0.0..=1.0).contains(&self.family.er_fraction) {
            return bad(format!("er_fraction {} outside [0, 1]", self.family.er_fraction));
        }
        if !(self.family.er_mean_degree > 0.0) {
            return bad("er_mean_degree must be positive".into());
        }
        if self.family.er_fraction < 1.0 {
            if let Some(&n) = self.node_sizes.iter().find(|&&n| self.family.ba_m == 0 || self.family.ba_m >= n) {
                return bad(format!("ba_m {} invalid for {n} nodes", self.family.ba_m));
            }
        }
        if self.max_tries == 0 {
            return bad("max_tries must be positive".into());
        }
        Ok(())
    }

    pub fn graph_count(&self) -> usize {
        self.node_sizes.len() * self.graphs_per_size
    }

    /// Planned item totals per category.
    pub fn planned(&self) -> BTreeMap<Category, usize> {
        let table = RoutingTable::default();
        let mut out = BTreeMap::new();
        for (&t, &c) in &self.tasks_per_graph {
            *out.entry(table.categorize(t)).or_default() += c * self.graph_count();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphRecord {
    pub id: String,
    pub family: Family,
    pub nodes: usize,
    pub edges: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchItem {
    pub id: String,
    pub graph_ref: String,
    pub question: String,
    pub task: TaskInstance,
    pub gold: GoldAnswer,
    pub category: Category,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchManifest {
    pub seed: u64,
    pub config: BenchConfig,
    pub graphs: Vec<GraphRecord>,
    pub counts: BTreeMap<Category, usize>,
    pub per_task: BTreeMap<TaskType, usize>,
    pub total: usize,
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub graphs: BTreeMap<String, Graph>,
    pub items: Vec<BenchItem>,
    pub manifest: BenchManifest,
}

impl Benchmark {
    pub fn graph(&self, item: &BenchItem) -> Option<&Graph> {
        self.graphs.get(&item.graph_ref)
    }
}

fn make_graph(cfg: &BenchConfig, gi: usize) -> Result<(GraphRecord, Graph), GrenaError> {
    let n = cfg.node_sizes[gi / cfg.graphs_per_size];
    let j = gi % cfg.graphs_per_size;
    let id = format!("g{gi:03}");
    let seed = derive_seed(cfg.seed, &id);
    let er = (j as f64 + 0.5) / (cfg.graphs_per_size as f64) < cfg.family.er_fraction;
    let (family, g) = if er {
        let p = (cfg.family.er_mean_degree / (n - 1) as f64).min(1.0);
        (Family::Er, generate_er(n, p, seed)?)
    } else {
        (Family::Ba, generate_ba(n, cfg.family.ba_m, seed)?)
    };
    Ok((GraphRecord { id, family, nodes: g.node_count(), edges: g.edge_count(), seed }, g))
}

/// `pool` is a shuffled node list drawn from for single-entity questions, so
/// that small graphs do not run out of distinct instances.
fn sample_instance(
    g: &Graph,
    t: TaskType,
    k: usize,
    clique_order: &[u64],
    pool: &mut Vec<NodeId>,
    rng: &mut ChaCha8Rng,
) -> TaskInstance {
    let (lo, hi) = t.arity();
    let arity = rng.gen_range(lo..=hi);
    let entities: Vec<NodeId> = match (arity, pool.pop()) {
        (1, Some(v)) => vec![v],
        (1, None) => g.nodes().choose_multiple(rng, 1).cloned().collect(),
        (a, popped) => {
            pool.extend(popped);
            g.nodes().choose_multiple(rng, a).cloned().collect()
        }
    };
    let mut inst = TaskInstance::new(t, entities);
    match t {
        TaskType::CliqueDetection => inst = inst.with_param("k", clique_order[k % clique_order.len()]),
        TaskType::TriangleCounting if rng.gen_bool(0.5) => inst = inst.with_param("exists", 1),
        _ => {}
    }
    inst
}

struct GraphItems {
    record: GraphRecord,
    graph: Graph,
    items: Vec<BenchItem>,
    notes: Vec<String>,
}

fn items_for_graph(cfg: &BenchConfig, gi: usize) -> Result<GraphItems, GrenaError> {
    let (record, g) = make_graph(cfg, gi)?;
    let table = RoutingTable::default();
    let reference = ReferenceSolver::new(&g);
    let mut items = vec![];
    let mut notes = vec![];
    for (&t, &count) in &cfg.tasks_per_graph {
        let mut seen: HashSet<TaskInstance> = HashSet::new();
        let mut clique_order = vec![3u64, 4, 5];
        clique_order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(record.seed, "clique")));
        let mut pool = g.nodes().to_vec();
        pool.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(record.seed, t.name())));
        for k in 0..count {
            let id = format!("{}-{}-{k:03}", record.id, t.name());
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &id));
            let mut found = None;
            for _ in 0..cfg.max_tries {
                let inst = sample_instance(&g, t, k, &clique_order, &mut pool, &mut rng);
                if seen.contains(&inst) {
                    continue;
                }
                match solve_task(&g, &inst) {
                    Ok(gold) => {
                        found = Some((inst, gold));
                        break;
                    }
                    Err(OracleError::Unsatisfiable(_)) => {}
                    Err(e) => return Err(e.into()),
                }
            }
            let Some((inst, gold)) = found else {
                notes.push(format!("{id}: no satisfiable distinct instance in {} tries, skipped", cfg.max_tries));
                continue;
            };
            reference
                .verify(&inst, &gold)
                .map_err(|m| GrenaError::Revalidation { item: id.clone(), detail: m.to_string() })?;
            seen.insert(inst.clone());
            items.push(BenchItem {
                id,
                graph_ref: record.id.clone(),
                question: render_question(&inst),
                category: table.categorize(t),
                task: inst,
                gold,
            });
        }
    }
    Ok(GraphItems { record, graph: g, items, notes })
}

/// Generates every graph and item of `cfg`. Output depends only on `cfg`.
pub fn generate_benchmark(cfg: &BenchConfig) -> Result<Benchmark, GrenaError> {
    cfg.validate()?;
    let per_graph: Vec<GraphItems> =
        (0..cfg.graph_count()).into_par_iter().map(|gi| items_for_graph(cfg, gi)).collect::<Result<_, _>>()?;
    let mut graphs = BTreeMap::new();
    let mut records = vec![];
    let mut items = vec![];
    let mut notes = vec![];
    for p in per_graph {
        graphs.insert(p.record.id.clone(), p.graph);
        records.push(p.record);
        items.extend(p.items);
        notes.extend(p.notes);
    }
    let mut counts = BTreeMap::new();
    let mut per_task = BTreeMap::new();
    for it in &items {
        *counts.entry(it.category).or_default() += 1;
        *per_task.entry(it.task.task_type).or_default() += 1;
    }
    let manifest =
        BenchManifest { seed: cfg.seed, config: cfg.clone(), graphs: records, counts, per_task, total: items.len(), notes };
    Ok(Benchmark { graphs, items, manifest })
}

/// Writes `graphs/<id>.json`, `items.jsonl` and `manifest.json` under `dir`.
pub fn write_benchmark(b: &Benchmark, dir: &Path) -> Result<(), GrenaError> {
    let gdir = dir.join("graphs");
    fs::create_dir_all(&gdir).map_err(io_err(&gdir))?;
    for (id, g) in &b.graphs {
        let p = gdir.join(format!("{id}.json"));
        fs::write(&p, g.to_json()).map_err(io_err(&p))?;
    }
    let p = dir.join("items.jsonl");
    let mut f = std::io::BufWriter::new(fs::File::create(&p).map_err(io_err(&p))?);
    for it in &b.items {
        writeln!(f, "{}", serde_json::to_string(it).expect("item serializes")).map_err(io_err(&p))?;
    }
    f.flush().map_err(io_err(&p))?;
    let p = dir.join("manifest.json");
    fs::write(&p, serde_json::to_string_pretty(&b.manifest).expect("manifest serializes") + "\n").map_err(io_err(&p))?;
    Ok(())
}

pub fn load_benchmark(dir: &Path) -> Result<Benchmark, GrenaError> {
    let fmt = |p: &Path, e: &dyn std::fmt::Display| GrenaError::Format { path: p.display().to_string(), detail: e.to_string() };
    let p = dir.join("manifest.json");
    let text = fs::read_to_string(&p).map_err(io_err(&p))?;
    let manifest: BenchManifest = serde_json::from_str(&text).map_err(|e| fmt(&p, &e))?;
    let mut graphs = BTreeMap::new();
    for r in &manifest.graphs {
        let p = dir.join("graphs").join(format!("{}.json", r.id));
        let text = fs::read_to_string(&p).map_err(io_err(&p))?;
        graphs.insert(r.id.clone(), Graph::parse_any(&text).map_err(|e| fmt(&p, &e))?);
    }
    let p = dir.join("items.jsonl");
    let text = fs::read_to_string(&p).map_err(io_err(&p))?;
    let items = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| fmt(&p, &e)))
        .collect::<Result<Vec<BenchItem>, _>>()?;
    Ok(Benchmark { graphs, items, manifest })
}

#[cfg(test)]
mod tests;
