//! End-to-end question answering over a benchmark: parse, route, answer, score.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eval::{aggregate, EvalRecord, Prediction, Report};
use crate::graph::Graph;
use crate::grena::{derive_seed, make_gold_trace, trace_subgraph, BenchConfig, BenchItem, Benchmark, FamilyMix};
use crate::llm::{
    render_action, HttpConfig, HttpReasoner, LlmError, Reasoner, RecordingReasoner, ReplayReasoner, Sampling, ScriptKey,
    ScriptedReasoner, Slot,
};
use crate::oracles::TaskType;
use crate::rag::{build_base, BaseConfig, RagError, TieredBase};
use crate::reasoning::{answer_text, run_vgt, ContextReader, FinalAnswer, ReasoningError, SessionOptions};
use crate::router::{make_plan, parse_question, Category, Modality, RouterError, RoutingTable};
use crate::subgraph::ExtractionConfig;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("cannot access {path}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed {path}: {detail}")]
    Format { path: String, detail: String },
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Rag(#[from] RagError),
    #[error(transparent)]
    Grena(#[from] crate::grena::GrenaError),
    #[error(transparent)]
    Trace(#[from] crate::grena::TraceError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    /// Fixture replies, falling back to reading the retrieved context.
    #[default]
    Scripted,
    Http,
    Replay,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Scripted fixture file.
    pub fixtures: Option<PathBuf>,
    /// Directory of reasoner journals for replay.
    pub journals: Option<PathBuf>,
    /// Overrides `REASONER_URL`.
    pub url: Option<String>,
    /// Overrides `REASONER_MODEL`.
    pub model: Option<String>,
    pub timeout_secs: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub base: BaseConfig,
    pub extraction: ExtractionConfig,
    pub routing_table: Option<PathBuf>,
    pub backend: BackendConfig,
    pub sampling: Sampling,
    pub seed: u64,
    /// Retrieved-context budget in characters.
    pub context_budget: usize,
    pub jobs: usize,
    /// Benchmark to generate; `gen-bench` falls back to the large-scale split.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bench: Option<BenchConfig>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            base: BaseConfig::default(),
            extraction: ExtractionConfig::default(),
            routing_table: None,
            backend: BackendConfig::default(),
            sampling: Sampling::default(),
            seed: 0,
            context_budget: 8000,
            jobs: 1,
            bench: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let cfg: Self = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        Self::from_toml(&fs::read_to_string(path).map_err(io_err(path))?)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.base.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.extraction.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.jobs == 0 {
            return Err(PipelineError::Config("jobs must be at least 1".into()));
        }
        if self.context_budget == 0 {
            return Err(PipelineError::Config("context_budget must be positive".into()));
        }
        if let Some(b) = &self.bench {
            b.validate()?;
        }
        Ok(())
    }

    pub fn routing(&self) -> Result<RoutingTable, PipelineError> {
        match &self.routing_table {
            None => Ok(RoutingTable::default()),
            Some(p) => RoutingTable::from_toml(&fs::read_to_string(p).map_err(io_err(p))?)
                .map_err(|e| PipelineError::Config(e.to_string())),
        }
    }

    /// Reasoner named by the backend section. Replay needs a per-item journal
    /// and is built by [`replay_suite`] instead.
    pub fn reasoner(&self) -> Result<Box<dyn Reasoner>, PipelineError> {
        let b = &self.backend;
        match b.kind {
            BackendKind::Scripted => {
                let s = match &b.fixtures {
                    Some(p) => ScriptedReasoner::from_json(&fs::read_to_string(p).map_err(io_err(p))?)?,
                    None => ScriptedReasoner::new(),
                };
                Ok(Box::new(s.with_fallback(Box::new(ContextReader))))
            }
            BackendKind::Http => {
                let mut http = match &b.url {
                    Some(u) => HttpConfig::new(u.clone(), b.model.clone().unwrap_or_else(|| "default".into())),
                    None => HttpConfig::from_env()?,
                };
                if let Some(m) = &b.model {
                    http.model = m.clone();
                }
                if let Some(t) = b.timeout_secs {
                    http.timeout = std::time::Duration::from_secs(t);
                }
                Ok(Box::new(HttpReasoner::new(http)?))
            }
            BackendKind::Replay => Err(PipelineError::Config("replay backends are built per item".into())),
        }
    }
}

/// Per-item output of the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemResult {
    #[serde(flatten)]
    pub record: EvalRecord,
    pub modality: Modality,
    /// Content hashes of every drawing of a visual session, initial first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub svg_hashes: Vec<String>,
}

/// Header line of a session journal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionHeader {
    pub item_id: String,
    pub task_type: TaskType,
    pub modality: Modality,
    pub extraction: ExtractionConfig,
    pub layout_seed: u64,
}

fn err(class: &str, e: impl std::fmt::Display) -> Prediction {
    Prediction::Error { class: class.into(), message: e.to_string() }
}

fn reasoning_class(e: &ReasoningError) -> &'static str {
    match e {
        ReasoningError::Llm(_) => "backend",
        ReasoningError::AnswerFormat { .. } => "answer_format",
        ReasoningError::Render(_) => "render",
        ReasoningError::Journal(_) => "journal",
        _ => "reasoning",
    }
}

/// Context shared by every item of a run.
pub struct Runner<'a> {
    pub cfg: &'a PipelineConfig,
    pub table: RoutingTable,
    pub bases: BTreeMap<String, TieredBase>,
    pub journal_dir: Option<PathBuf>,
}

impl<'a> Runner<'a> {
    pub fn new(cfg: &'a PipelineConfig, bench: &Benchmark, journal_dir: Option<PathBuf>) -> Result<Self, PipelineError> {
        cfg.validate()?;
        let table = cfg.routing()?;
        let bases = bench
            .graphs
            .par_iter()
            .map(|(id, g)| build_base(g, &cfg.base).map(|b| (id.clone(), b)))
            .collect::<Result<_, _>>()?;
        if let Some(d) = &journal_dir {
            fs::create_dir_all(d).map_err(io_err(d))?;
        }
        Ok(Self { cfg, table, bases, journal_dir })
    }

    /// Parses, routes and answers one item; failures become error predictions.
    pub fn run_item(&self, item: &BenchItem, g: &Graph, reasoner: &dyn Reasoner) -> ItemResult {
        let start = Instant::now();
        let base = &self.bases[&item.graph_ref];
        let recorder;
        let file_sink = self.journal_dir.as_ref().map(|d| d.join(format!("{}.reasoner.jsonl", item.id)));
        let reasoner: &dyn Reasoner = match &file_sink {
            Some(p) => match fs::File::create(p) {
                Ok(f) => {
                    recorder = RecordingReasoner::new(reasoner).with_sink(Box::new(BufWriter::new(f)));
                    &recorder
                }
                Err(_) => reasoner,
            },
            None => reasoner,
        };
        let (prediction, modality, svg_hashes) = self.answer(&item.id, &item.question, g, base, reasoner);
        let latency = start.elapsed().as_millis() as u64;
        ItemResult { record: EvalRecord::new(item, g, prediction, latency), modality, svg_hashes }
    }

    fn answer(
        &self,
        id: &str,
        question: &str,
        g: &Graph,
        base: &TieredBase,
        reasoner: &dyn Reasoner,
    ) -> (Prediction, Modality, Vec<String>) {
        let parsed = match parse_question(question, g, Some(reasoner), &self.table) {
            Ok(p) => p,
            Err(RouterError::Llm(e)) => return (err("backend", e), Modality::Text, vec![]),
            Err(e) => return (err("parse", e), Modality::Text, vec![]),
        };
        let inst = parsed.to_instance();
        let mut opts = SessionOptions::new(parsed.question.clone(), inst.answer_kind(g.is_weighted()));
        opts.tag = Some(id.to_string());
        opts.sampling = self.cfg.sampling;
        opts.layout_seed = derive_seed(self.cfg.seed, &format!("layout/{id}"));
        if parsed.category == Category::Simple {
            let ctx = match base.retrieve(&parsed, self.cfg.context_budget) {
                Ok(c) => c,
                Err(e) => return (err("retrieval", e), Modality::Text, vec![]),
            };
            return match answer_text(&parsed, &ctx, reasoner, &opts) {
                Ok(a) => (Prediction::Answer(a), Modality::Text, vec![]),
                Err(e) => (err(reasoning_class(&e), e), Modality::Text, vec![]),
            };
        }
        let plan = match make_plan(&parsed) {
            Ok(p) => p,
            Err(e) => return (err("plan", e), Modality::Visual, vec![]),
        };
        let sub = match trace_subgraph(g, base, &inst, &self.cfg.extraction) {
            Ok(s) => s,
            Err(e) => return (err("extraction", e), Modality::Visual, vec![]),
        };
        let header = SessionHeader {
            item_id: id.to_string(),
            task_type: parsed.task_type,
            modality: Modality::Visual,
            extraction: self.cfg.extraction,
            layout_seed: opts.layout_seed,
        };
        let mut journal: Option<Box<dyn Write>> = None;
        if let Some(d) = &self.journal_dir {
            let p = d.join(format!("{id}.session.jsonl"));
            if let Ok(f) = fs::File::create(&p) {
                let mut w = BufWriter::new(f);
                let _ = writeln!(w, "{}", serde_json::to_string(&header).expect("header serializes"));
                journal = Some(Box::new(w));
            }
        }
        let out = run_vgt(&plan, sub, reasoner, &opts, journal.as_mut().map(|j| j.as_mut() as &mut dyn Write));
        match out {
            Ok(s) => {
                let hashes = s.svg_hashes();
                (Prediction::Answer(s.final_answer.expect("finished session has an answer")), Modality::Visual, hashes)
            }
            Err(abort) => (err(reasoning_class(&abort.error), &abort.error), Modality::Visual, abort.session.svg_hashes()),
        }
    }
}

/// Answer to a single free-form question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Asked {
    pub prediction: Prediction,
    pub modality: Modality,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub svg_hashes: Vec<String>,
}

/// Answers one question about `g`; `id` tags reasoner requests and journal files.
/// A prebuilt `base` must have been built from `g`.
pub fn ask(
    cfg: &PipelineConfig,
    g: &Graph,
    base: Option<&TieredBase>,
    id: &str,
    question: &str,
    reasoner: &dyn Reasoner,
    journal_dir: Option<PathBuf>,
) -> Result<Asked, PipelineError> {
    cfg.validate()?;
    if let Some(d) = &journal_dir {
        fs::create_dir_all(d).map_err(io_err(d))?;
    }
    let built;
    let base = match base {
        Some(b) => {
            if b.node_count() != g.node_count() {
                return Err(PipelineError::Config("base was built from a different graph".into()));
            }
            b
        }
        None => {
            built = build_base(g, &cfg.base)?;
            &built
        }
    };
    let runner = Runner { cfg, table: cfg.routing()?, bases: BTreeMap::new(), journal_dir };
    let (prediction, modality, svg_hashes) = runner.answer(id, question, g, base, reasoner);
    Ok(Asked { prediction, modality, svg_hashes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub report: Report,
    pub results: Vec<ItemResult>,
    /// Items answered in this invocation (the rest came from the progress file).
    pub fresh: usize,
}

impl SuiteOutcome {
    /// True when every item failed at the reasoner.
    pub fn backend_down(&self) -> bool {
        !self.results.is_empty()
            && self.results.iter().all(|r| matches!(&r.record.predicted, Prediction::Error { class, .. } if class == "backend"))
    }
}

fn read_progress(path: &Path) -> Result<BTreeMap<String, ItemResult>, PipelineError> {
    let Ok(text) = fs::read_to_string(path) else { return Ok(BTreeMap::new()) };
    let mut done = BTreeMap::new();
    for line in text.lines() {
        // a torn last line from an interrupted run is simply redone
        if let Ok(r) = serde_json::from_str::<ItemResult>(line) {
            done.insert(r.record.item_id.clone(), r);
        }
    }
    Ok(done)
}

/// Answers every item not yet in `out/progress.jsonl`, then writes
/// `results.jsonl`, `report.json` and `report.txt` under `out`.
pub fn run_suite(
    cfg: &PipelineConfig,
    bench: &Benchmark,
    reasoner: &dyn Reasoner,
    out: &Path,
) -> Result<SuiteOutcome, PipelineError> {
    run_suite_limited(cfg, bench, reasoner, out, None)
}

/// As [`run_suite`], stopping after `limit` fresh items (used to simulate interruption).
pub fn run_suite_limited(
    cfg: &PipelineConfig,
    bench: &Benchmark,
    reasoner: &dyn Reasoner,
    out: &Path,
    limit: Option<usize>,
) -> Result<SuiteOutcome, PipelineError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let runner = Runner::new(cfg, bench, Some(out.join("journals")))?;
    let progress_path = out.join("progress.jsonl");
    let mut done = read_progress(&progress_path)?;
    let todo: Vec<&BenchItem> =
        bench.items.iter().filter(|i| !done.contains_key(&i.id)).take(limit.unwrap_or(usize::MAX)).collect();
    let progress = Mutex::new(
        fs::OpenOptions::new().create(true).append(true).open(&progress_path).map_err(io_err(&progress_path))?,
    );
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let fresh: Vec<ItemResult> = pool.install(|| {
        todo.par_iter()
            .filter_map(|item| {
                let g = bench.graph(item)?;
                let r = runner.run_item(item, g, reasoner);
                log::info!("{}: correct={}", item.id, r.record.correct);
                let line = serde_json::to_string(&r).expect("result serializes");
                let mut f = progress.lock().unwrap();
                if let Err(e) = writeln!(f, "{line}").and_then(|_| f.flush()) {
                    log::error!("cannot append progress: {e}");
                }
                Some(r)
            })
            .collect()
    });
    let n_fresh = fresh.len();
    for r in fresh {
        done.insert(r.record.item_id.clone(), r);
    }
    let results: Vec<ItemResult> = bench.items.iter().filter_map(|i| done.remove(&i.id)).collect();
    let records: Vec<EvalRecord> = results.iter().map(|r| r.record.clone()).collect();
    let report = aggregate(&records)?;
    let complete = results.len() == bench.items.len();
    if complete {
        let p = out.join("results.jsonl");
        let mut f = BufWriter::new(fs::File::create(&p).map_err(io_err(&p))?);
        for r in &results {
            // latency varies run to run; keep the artifact reproducible
            let mut r = r.clone();
            r.record.latency_ms = 0;
            writeln!(f, "{}", serde_json::to_string(&r).expect("result serializes")).map_err(io_err(&p))?;
        }
        f.flush().map_err(io_err(&p))?;
        let p = out.join("report.json");
        fs::write(&p, serde_json::to_string_pretty(&report).expect("report serializes") + "\n").map_err(io_err(&p))?;
        let p = out.join("report.txt");
        fs::write(&p, report.to_table()).map_err(io_err(&p))?;
    }
    Ok(SuiteOutcome { report, results, fresh: n_fresh })
}

/// Reruns every item against its recorded reasoner journal under `out/journals`.
pub fn replay_suite(cfg: &PipelineConfig, bench: &Benchmark, out: &Path) -> Result<Vec<ItemResult>, PipelineError> {
    let jdir = out.join("journals");
    let runner = Runner::new(cfg, bench, None)?;
    bench
        .items
        .par_iter()
        .filter_map(|item| bench.graph(item).map(|g| (item, g)))
        .map(|(item, g)| {
            let p = jdir.join(format!("{}.reasoner.jsonl", item.id));
            let replay = ReplayReasoner::from_jsonl(&fs::read_to_string(&p).map_err(io_err(&p))?)?;
            Ok(runner.run_item(item, g, &replay))
        })
        .collect()
}

/// The closed-loop demonstration set: triangle, shortest path and neighbour
/// questions plus every simple type, on graphs small enough to bypass the base.
pub fn exemplar_benchmark(seed: u64) -> Result<Benchmark, PipelineError> {
    let types = [
        TaskType::TriangleCounting,
        TaskType::ShortestPath,
        TaskType::NeighborConnections,
        TaskType::NodeCount,
        TaskType::EdgeCount,
        TaskType::ConnectivityCheck,
        TaskType::NodeDegree,
        TaskType::EdgeExistence,
        TaskType::FindConnectedEdges,
        TaskType::HighestDegreeNeighbor,
    ];
    let cfg = BenchConfig {
        node_sizes: vec![10, 12, 14],
        graphs_per_size: 2,
        family: FamilyMix { er_fraction: 0.5, er_mean_degree: 3.0, ba_m: 2 },
        tasks_per_graph: types.into_iter().map(|t| (t, 1)).collect(),
        seed,
        max_tries: 50,
    };
    Ok(crate::grena::generate_benchmark(&cfg)?)
}

/// Scripted replies that walk each complex item through its gold trace.
/// Simple items are left to the context-reading fallback.
pub fn exemplar_fixtures(cfg: &PipelineConfig, bench: &Benchmark) -> Result<ScriptedReasoner, PipelineError> {
    let mut s = ScriptedReasoner::new();
    for item in bench.items.iter().filter(|i| i.category == Category::Complex) {
        let g = bench.graph(item).ok_or_else(|| PipelineError::Config(format!("missing graph {}", item.graph_ref)))?;
        let base = build_base(g, &cfg.base)?;
        let tr = make_gold_trace(g, &base, &item.task, &cfg.extraction, 0)?;
        for st in &tr.steps {
            let reply = format!("{}\n{}", st.observation, render_action(st.action.as_ref()));
            s.insert(ScriptKey { tag: Some(item.id.clone()), task_type: None, slot: Slot::Step(st.index) }, reply);
        }
        let fin = FinalAnswer { answer: tr.answer.answer.clone(), rationale: tr.answer.rationale.clone(), warnings: vec![] };
        s.insert(
            ScriptKey { tag: Some(item.id.clone()), task_type: None, slot: Slot::Summarize },
            serde_json::to_string(&fin).expect("answer serializes"),
        );
    }
    Ok(s)
}

/// Items whose id appears in `ids`, keeping benchmark order.
pub fn subset(bench: &Benchmark, ids: &BTreeSet<String>) -> Benchmark {
    Benchmark {
        graphs: bench.graphs.clone(),
        items: bench.items.iter().filter(|i| ids.contains(&i.id)).cloned().collect(),
        manifest: bench.manifest.clone(),
    }
}
