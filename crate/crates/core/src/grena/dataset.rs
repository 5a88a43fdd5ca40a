use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{derive_seed, inject_error, io_err, make_gold_trace, verify_trace, BenchItem, Benchmark, Edit, ErrorCategory, GrenaError, RejectedTrace};
use crate::oracles::GoldAnswer;
use crate::rag::{build_base, BaseConfig};
use crate::reasoning::ReasoningStep;
use crate::render::svg_hash;
use crate::router::{Category, ExecutionPlan};
use crate::subgraph::ExtractionConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairInput {
    pub question: String,
    /// Content hash of the initial drawing under `svg/`.
    pub initial_svg: String,
    pub plan: ExecutionPlan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChosenPath {
    pub steps: Vec<ReasoningStep>,
    /// Drawing after each step, by content hash.
    pub svg_refs: Vec<String>,
    pub answer: GoldAnswer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedPath {
    pub steps: Vec<ReasoningStep>,
    pub answer: GoldAnswer,
    pub edit: Edit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub id: String,
    pub item_id: String,
    pub input: PairInput,
    pub chosen: ChosenPath,
    pub rejected: RejectedPath,
    pub error_category: ErrorCategory,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub mix: BTreeMap<ErrorCategory, f64>,
    /// Planned pairs per category after rounding.
    pub quotas: BTreeMap<ErrorCategory, usize>,
    pub histogram: BTreeMap<ErrorCategory, usize>,
    pub pairs: usize,
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PreferenceDataset {
    pub pairs: Vec<PreferencePair>,
    /// Drawings keyed by content hash; empty unless requested.
    pub svgs: BTreeMap<String, Vec<u8>>,
    pub manifest: DatasetManifest,
}

#[derive(Debug, Clone)]
pub struct DpoConfig {
    pub mix: BTreeMap<ErrorCategory, f64>,
    pub seed: u64,
    pub extraction: ExtractionConfig,
    pub keep_svgs: bool,
}

impl DpoConfig {
    pub fn uniform(seed: u64) -> Self {
        Self {
            mix: ErrorCategory::ALL.into_iter().map(|c| (c, 1.0)).collect(),
            seed,
            extraction: ExtractionConfig::default(),
            keep_svgs: true,
        }
    }
}

/// Largest-remainder rounding of `n * w / sum(w)`.
pub fn quotas(mix: &BTreeMap<ErrorCategory, f64>, n: usize) -> BTreeMap<ErrorCategory, usize> {
    let total: f64 = mix.values().sum();
    let mut out: BTreeMap<ErrorCategory, usize> = BTreeMap::new();
    let mut rem = vec![];
    for (&c, &w) in mix {
        let exact = n as f64 * w / total;
        out.insert(c, exact.floor() as usize);
        rem.push((exact - exact.floor(), c));
    }
    let left = n - out.values().sum::<usize>();
    rem.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, c) in rem.iter().take(left) {
        *out.get_mut(&c).unwrap() += 1;
    }
    out
}

struct Prepared {
    item: BenchItem,
    input: PairInput,
    chosen: ChosenPath,
    svgs: Vec<(String, Vec<u8>)>,
    /// Successful injections keyed by category.
    options: BTreeMap<ErrorCategory, RejectedTrace>,
}

fn prepare(bench: &Benchmark, item: &BenchItem, cfg: &DpoConfig, base: &crate::rag::TieredBase) -> Result<Prepared, GrenaError> {
    let g = bench.graph(item).ok_or_else(|| GrenaError::Format {
        path: item.id.clone(),
        detail: format!("unknown graph {}", item.graph_ref),
    })?;
    let trace = make_gold_trace(g, base, &item.task, &cfg.extraction, derive_seed(cfg.seed, &format!("layout/{}", item.id)))?;
    verify_trace(g, &item.task, &trace.steps, &trace.answer.answer)
        .map_err(|v| GrenaError::Revalidation { item: item.id.clone(), detail: v.to_string() })?;
    let rendered: Vec<Vec<u8>> = trace.states.iter().map(|s| s.render()).collect();
    let hashes: Vec<String> = rendered.iter().map(|b| svg_hash(b)).collect();
    // step t points at the drawing current after it
    let svg_refs = trace.steps.iter().map(|s| hashes[s.state_revision_after as usize].clone()).collect();
    let options = ErrorCategory::ALL
        .into_iter()
        .filter(|c| cfg.mix.get(c).is_some_and(|&w| w > 0.0))
        .filter_map(|c| {
            inject_error(g, &trace, c, derive_seed(cfg.seed, &format!("{}/{}", item.id, c.name()))).ok().map(|r| (c, r))
        })
        .collect();
    Ok(Prepared {
        item: item.clone(),
        input: PairInput { question: item.question.clone(), initial_svg: hashes[0].clone(), plan: trace.plan.clone() },
        chosen: ChosenPath { steps: trace.steps, svg_refs, answer: trace.answer.answer },
        svgs: if cfg.keep_svgs { hashes.into_iter().zip(rendered).collect() } else { vec![] },
        options,
    })
}

/// One chosen/rejected pair per complex item, categories drawn to match `cfg.mix`.
pub fn build_preference_dataset(bench: &Benchmark, cfg: &DpoConfig) -> Result<PreferenceDataset, GrenaError> {
    if cfg.mix.is_empty() || cfg.mix.values().any(|w| !(w.is_finite() && *w >= 0.0)) || cfg.mix.values().sum::<f64>() <= 0.0 {
        return Err(GrenaError::Config("category mix needs non-negative weights with a positive sum".into()));
    }
    let items: Vec<&BenchItem> = bench.items.iter().filter(|i| i.category == Category::Complex).collect();
    let bases: BTreeMap<&String, crate::rag::TieredBase> = bench
        .graphs
        .par_iter()
        .filter(|(id, _)| items.iter().any(|i| &i.graph_ref == *id))
        .map(|(id, g)| build_base(g, &BaseConfig::default()).map(|b| (id, b)))
        .collect::<Result<_, _>>()
        .map_err(|e| GrenaError::Config(e.to_string()))?;
    let prepared: Vec<Prepared> =
        items.par_iter().map(|it| prepare(bench, it, cfg, &bases[&it.graph_ref])).collect::<Result<_, _>>()?;

    let quotas = quotas(&cfg.mix, prepared.len());
    let mut slots: Vec<ErrorCategory> = quotas.iter().flat_map(|(&c, &k)| std::iter::repeat_n(c, k)).collect();
    slots.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "slots")));
    let mut notes = vec![];
    for i in 0..slots.len() {
        if prepared[i].options.contains_key(&slots[i]) {
            continue;
        }
        // trade slots with a later item that can take this category
        let swap = (i + 1..slots.len()).find(|&j| {
            prepared[i].options.contains_key(&slots[j]) && prepared[j].options.contains_key(&slots[i])
        });
        match swap {
            Some(j) => slots.swap(i, j),
            None => match prepared[i].options.keys().next() {
                Some(&c) => {
                    notes.push(format!("{}: {} inapplicable, used {}", prepared[i].item.id, slots[i].name(), c.name()));
                    slots[i] = c;
                }
                None => return Err(GrenaError::Config(format!("no error category applies to {}", prepared[i].item.id))),
            },
        }
    }

    let mut svgs = BTreeMap::new();
    let mut pairs = Vec::with_capacity(prepared.len());
    let mut histogram: BTreeMap<ErrorCategory, usize> = cfg.mix.keys().map(|&c| (c, 0)).collect();
    for (mut p, c) in prepared.into_iter().zip(slots) {
        let r = p.options.remove(&c).expect("slot is applicable");
        *histogram.entry(c).or_default() += 1;
        svgs.extend(p.svgs);
        pairs.push(PreferencePair {
            id: format!("{}/{}", p.item.id, c.name()),
            seed: derive_seed(cfg.seed, &format!("{}/{}", p.item.id, c.name())),
            item_id: p.item.id,
            input: p.input,
            chosen: p.chosen,
            rejected: RejectedPath { steps: r.steps, answer: r.answer, edit: r.edit },
            error_category: c,
        });
    }
    let manifest =
        DatasetManifest { seed: cfg.seed, mix: cfg.mix.clone(), quotas, histogram, pairs: pairs.len(), notes };
    Ok(PreferenceDataset { pairs, svgs, manifest })
}

/// Writes `pairs.jsonl`, `svg/<hash>.svg` and `manifest.json`.
pub fn write_dataset(ds: &PreferenceDataset, dir: &Path) -> Result<(), GrenaError> {
    let sdir = dir.join("svg");
    fs::create_dir_all(&sdir).map_err(io_err(&sdir))?;
    for (h, bytes) in &ds.svgs {
        let p = sdir.join(format!("{h}.svg"));
        fs::write(&p, bytes).map_err(io_err(&p))?;
    }
    let p = dir.join("pairs.jsonl");
    let mut f = std::io::BufWriter::new(fs::File::create(&p).map_err(io_err(&p))?);
    for pair in &ds.pairs {
        writeln!(f, "{}", serde_json::to_string(pair).expect("pair serializes")).map_err(io_err(&p))?;
    }
    f.flush().map_err(io_err(&p))?;
    let p = dir.join("manifest.json");
    fs::write(&p, serde_json::to_string_pretty(&ds.manifest).expect("manifest serializes") + "\n").map_err(io_err(&p))?;
    Ok(())
}

pub fn load_pairs(dir: &Path) -> Result<Vec<PreferencePair>, GrenaError> {
    let p = dir.join("pairs.jsonl");
    let text = fs::read_to_string(&p).map_err(io_err(&p))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| GrenaError::Format { path: p.display().to_string(), detail: e.to_string() }))
        .collect()
}
