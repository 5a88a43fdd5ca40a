use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};

use graphvista::eval::{aggregate, evaluate_answers, parse_answer_lines, Prediction};
use graphvista::graph::{Graph, NodeId};
use graphvista::grena::{
    build_preference_dataset, generate_benchmark, load_benchmark, trace_subgraph, write_benchmark, write_dataset,
    BenchConfig, DpoConfig, ErrorCategory,
};
use graphvista::pipeline::{self, BackendKind, PipelineConfig};
use graphvista::rag::{build_base, TieredBase};
use graphvista::subgraph::extract_for_entities;
use graphvista::render::VisualState;
use graphvista::router::parse_question;

/// Graph question answering with retrieval, subgraph drawing and stepwise reasoning.
#[derive(Parser)]
#[command(name = "graphvista", version)]
struct Cli {
    /// Pipeline config (TOML). Flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Reasoner backend.
    #[arg(long, global = true, value_enum)]
    backend: Option<Backend>,
    /// Scripted fixture file (JSON).
    #[arg(long, global = true)]
    fixtures: Option<PathBuf>,
    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Scripted,
    Http,
}

#[derive(Subcommand)]
enum Command {
    /// Build the tiered neighbourhood base of a graph.
    BuildBase {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        k1: Option<f64>,
        #[arg(long)]
        k2: Option<f64>,
    },
    /// Parse a question into a structured task.
    Parse {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        question: String,
    },
    /// Extract the subgraph around one or two nodes, or the one a question is about.
    #[command(group = clap::ArgGroup::new("focus").required(true).args(["question", "center"]))]
    Extract {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        question: Option<String>,
        #[arg(long)]
        center: Option<String>,
        #[arg(long, requires = "center")]
        target: Option<String>,
        /// Hop radius.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        n_max: Option<usize>,
        /// Write the subgraph JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the drawing here.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Answer one question.
    Ask {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        question: String,
        /// Prebuilt base from `build-base`; built on the fly when absent.
        #[arg(long)]
        base: Option<PathBuf>,
        /// Directory for session and reasoner journals.
        #[arg(long)]
        journals: Option<PathBuf>,
    },
    /// Generate a synthetic benchmark from the config's `[bench]` table, or the
    /// large-scale split when it has none.
    GenBench {
        #[arg(long)]
        out: PathBuf,
        /// The small 60-item exemplar set instead.
        #[arg(long)]
        exemplar: bool,
    },
    /// Build chosen/rejected trace pairs from a benchmark's complex items.
    GenDpo {
        #[arg(long)]
        bench: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `uniform` or category weights such as `factual=2,logical=1`.
        #[arg(long)]
        mix: Option<String>,
        /// Skip writing the drawings.
        #[arg(long)]
        no_svgs: bool,
    },
    /// Score a file of predicted answers against a benchmark.
    Evaluate {
        #[arg(long)]
        bench: PathBuf,
        #[arg(long)]
        answers: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Answer every benchmark item and write a report. Resumes from `out/progress.jsonl`.
    RunSuite {
        #[arg(long)]
        bench: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Only the first N items.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Rerun a finished suite from its reasoner journals and check that every
    /// prediction matches `out/results.jsonl`.
    Replay {
        #[arg(long)]
        bench: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Exit classes: 1 usage, 2 data, 3 backend.
#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
    Backend(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Backend(_) => 3,
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let e = e.into();
        let backend = e.chain().any(|c| {
            c.downcast_ref::<graphvista::llm::LlmError>().is_some()
                || matches!(c.downcast_ref::<pipeline::PipelineError>(), Some(pipeline::PipelineError::Llm(_)))
        });
        if backend {
            Failure::Backend(e)
        } else {
            Failure::Data(e)
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(e) | Failure::Data(e) | Failure::Backend(e)) = &f;
            eprintln!("error: {e:#}");
            ExitCode::from(f.code())
        }
    }
}

fn pipeline_config(cli: &Cli) -> Result<PipelineConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p).map_err(|e| Failure::Usage(e.into()))?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    match cli.backend {
        Some(Backend::Scripted) => cfg.backend.kind = BackendKind::Scripted,
        Some(Backend::Http) => cfg.backend.kind = BackendKind::Http,
        None => {}
    }
    if let Some(f) = &cli.fixtures {
        cfg.backend.fixtures = Some(f.clone());
    }
    cfg.validate().map_err(|e| Failure::Usage(e.into()))?;
    Ok(cfg)
}

fn read_graph(p: &Path) -> anyhow::Result<Graph> {
    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    Graph::parse_any(&text).with_context(|| format!("parsing {}", p.display()))
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("value serializes"));
}

fn parse_mix(s: &str) -> Result<DpoConfig, Failure> {
    let mut cfg = DpoConfig::uniform(0);
    cfg.mix.clear();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, w) = part.split_once('=').ok_or_else(|| Failure::Usage(anyhow!("bad mix entry `{part}`")))?;
        let c = ErrorCategory::parse(k.trim()).ok_or_else(|| Failure::Usage(anyhow!("unknown category `{k}`")))?;
        let w: f64 = w.trim().parse().map_err(|_| Failure::Usage(anyhow!("bad weight `{w}`")))?;
        cfg.mix.insert(c, w);
    }
    Ok(cfg)
}

fn prediction_failure(p: &Prediction) -> Option<Failure> {
    match p {
        Prediction::Answer(_) => None,
        Prediction::Error { class, message } if class == "backend" => Some(Failure::Backend(anyhow!("{message}"))),
        Prediction::Error { class, message } => Some(Failure::Data(anyhow!("{class}: {message}"))),
    }
}

fn run(cli: Cli) -> Outcome {
    let cfg = pipeline_config(&cli)?;
    match &cli.cmd {
        Command::BuildBase { graph, out, k1, k2 } => {
            let g = read_graph(graph)?;
            let mut bc = cfg.base;
            if let Some(k) = k1 {
                bc.k1_percent = *k;
            }
            if let Some(k) = k2 {
                bc.k2_percent = *k;
            }
            bc.validate().map_err(|e| Failure::Usage(e.into()))?;
            let base = build_base(&g, &bc)?;
            fs::write(out, base.to_json()).with_context(|| format!("writing {}", out.display()))?;
            let cov = base.coverage(&g);
            log::info!("{} nodes, {} anchors, edge coverage {:.3}", base.node_count(), cov.anchors, cov.edge_coverage);
        }
        Command::Parse { graph, question } => {
            let g = read_graph(graph)?;
            let reasoner = cfg.reasoner()?;
            print_json(&parse_question(question, &g, Some(reasoner.as_ref()), &cfg.routing()?)?);
        }
        Command::Extract { graph, question, center, target, k, n_max, out, svg } => {
            let g = read_graph(graph)?;
            let mut ec = cfg.extraction;
            ec.k = k.unwrap_or(ec.k);
            ec.n_max = n_max.unwrap_or(ec.n_max);
            ec.validate().map_err(|e| Failure::Usage(e.into()))?;
            let base = build_base(&g, &cfg.base)?;
            let sub = match (question, center) {
                (Some(q), _) => {
                    let parsed = parse_question(q, &g, None, &cfg.routing()?)?;
                    trace_subgraph(&g, &base, &parsed.to_instance(), &ec)?
                }
                (None, Some(c)) => {
                    let ents = [Some(c), target.as_ref()]
                        .into_iter()
                        .flatten()
                        .map(|s| NodeId::new(s.as_str()))
                        .collect::<Result<Vec<_>, _>>()?;
                    extract_for_entities(&g, &base, &ents, &ec)?
                }
                (None, None) => unreachable!("clap requires one of them"),
            };
            if let Some(p) = svg {
                let state = VisualState::new(sub.clone(), cfg.seed)?;
                fs::write(p, state.render()).with_context(|| format!("writing {}", p.display()))?;
            }
            match out {
                Some(p) => fs::write(p, serde_json::to_string_pretty(&sub).expect("subgraph serializes"))
                    .with_context(|| format!("writing {}", p.display()))?,
                None => print_json(&sub),
            }
        }
        Command::Ask { graph, question, base, journals } => {
            let g = read_graph(graph)?;
            let base = match base {
                Some(p) => Some(TieredBase::from_json(
                    &fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
                )?),
                None => None,
            };
            let reasoner = cfg.reasoner()?;
            let out = pipeline::ask(&cfg, &g, base.as_ref(), "ask", question, reasoner.as_ref(), journals.clone())?;
            print_json(&out);
            if let Some(f) = prediction_failure(&out.prediction) {
                return Err(f);
            }
        }
        Command::GenBench { out, exemplar } => {
            let b = if *exemplar {
                pipeline::exemplar_benchmark(cfg.seed)?
            } else {
                // the master seed wins over any seed in the [bench] table
                let mut bc = cfg.bench.clone().unwrap_or_else(|| BenchConfig::large_scale(cfg.seed));
                bc.seed = cfg.seed;
                generate_benchmark(&bc)?
            };
            write_benchmark(&b, out)?;
            if *exemplar {
                let fx = pipeline::exemplar_fixtures(&cfg, &b)?;
                let p = out.join("fixtures.json");
                fs::write(&p, fx.to_json()).with_context(|| format!("writing {}", p.display()))?;
            }
            eprintln!("{} graphs, {} items", b.graphs.len(), b.items.len());
        }
        Command::GenDpo { bench, out, mix, no_svgs } => {
            let b = load_benchmark(bench)?;
            let mut dc = match mix.as_deref() {
                None | Some("uniform") => DpoConfig::uniform(0),
                Some(m) => parse_mix(m)?,
            };
            dc.seed = cfg.seed;
            dc.extraction = cfg.extraction;
            dc.keep_svgs = !no_svgs;
            let ds = build_preference_dataset(&b, &dc)?;
            write_dataset(&ds, out)?;
            eprintln!("{} pairs", ds.pairs.len());
        }
        Command::Evaluate { bench, answers, out } => {
            let b = load_benchmark(bench)?;
            let text = fs::read_to_string(answers).with_context(|| format!("reading {}", answers.display()))?;
            let records = evaluate_answers(&b, &parse_answer_lines(&text)?);
            let report = aggregate(&records)?;
            if let Some(p) = out {
                fs::write(p, serde_json::to_string_pretty(&report).expect("report serializes") + "\n")
                    .with_context(|| format!("writing {}", p.display()))?;
            }
            print!("{}", report.to_table());
        }
        Command::RunSuite { bench, out, limit } => {
            let b = load_benchmark(bench)?;
            let mut cfg = cfg;
            // an exemplar benchmark directory carries its own fixtures
            if cfg.backend.kind == BackendKind::Scripted && cfg.backend.fixtures.is_none() {
                let p = bench.join("fixtures.json");
                if p.exists() {
                    cfg.backend.fixtures = Some(p);
                }
            }
            let reasoner = cfg.reasoner()?;
            let o = pipeline::run_suite_limited(&cfg, &b, reasoner.as_ref(), out, *limit)?;
            print!("{}", o.report.to_table());
            if o.backend_down() {
                return Err(Failure::Backend(anyhow!("every item failed at the reasoner")));
            }
        }
        Command::Replay { bench, out } => {
            let b = load_benchmark(bench)?;
            let p = out.join("results.jsonl");
            let text = fs::read_to_string(&p).with_context(|| format!("cannot read {}", p.display()))?;
            let mut recorded = std::collections::HashMap::new();
            for (i, line) in text.lines().enumerate() {
                let v: serde_json::Value =
                    serde_json::from_str(line).with_context(|| format!("{} line {}", p.display(), i + 1))?;
                recorded.insert(v["item_id"].as_str().unwrap_or_default().to_string(), v["predicted"].clone());
            }
            let results = pipeline::replay_suite(&cfg, &b, out)?;
            let differ: Vec<&str> = results
                .iter()
                .filter(|r| {
                    let now = serde_json::to_value(&r.record.predicted).expect("prediction serializes");
                    recorded.get(&r.record.item_id) != Some(&now)
                })
                .map(|r| r.record.item_id.as_str())
                .collect();
            let records: Vec<_> = results.iter().map(|r| r.record.clone()).collect();
            print!("{}", aggregate(&records)?.to_table());
            if !differ.is_empty() {
                return Err(Failure::Data(anyhow!("{} replayed item(s) differ: {}", differ.len(), differ.join(", "))));
            }
        }
    }
    Ok(())
}
