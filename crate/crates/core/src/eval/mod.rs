//! Answer scoring and accuracy reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{edge_key, Graph, NodeId};
use crate::grena::{BenchItem, Benchmark};
use crate::oracles::{GoldAnswer, TaskInstance, TaskType};
use crate::reasoning::FinalAnswer;
use crate::router::Category;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("cannot aggregate an empty record list")]
    Empty,
    #[error("line {line}: {detail}")]
    Answers { line: usize, detail: String },
}

/// Relative tolerance for real-valued answers.
pub const REAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SizeBucket {
    #[serde(rename = "lt50")]
    Tiny,
    #[serde(rename = "50-511")]
    Small,
    #[serde(rename = "512-1023")]
    Medium,
    #[serde(rename = "1024-2050")]
    Large,
    #[serde(rename = "gt2050")]
    Huge,
}

impl SizeBucket {
    pub fn of(nodes: usize) -> Self {
        match nodes {
            0..50 => SizeBucket::Tiny,
            50..512 => SizeBucket::Small,
            512..1024 => SizeBucket::Medium,
            1024..=2050 => SizeBucket::Large,
            _ => SizeBucket::Huge,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SizeBucket::Tiny => "<50",
            SizeBucket::Small => "[50,512)",
            SizeBucket::Medium => "[512,1024)",
            SizeBucket::Large => "[1024,2050]",
            SizeBucket::Huge => ">2050",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Score {
    pub correct: bool,
    /// The prediction had a different answer kind than the gold.
    pub kind_mismatch: bool,
}

fn walk(g: &Graph, path: &[NodeId]) -> Option<f64> {
    let idx: Vec<usize> = path.iter().map(|v| g.index(v)).collect::<Option<_>>()?;
    idx.windows(2).map(|w| g.edge_weight(w[0], w[1])).sum()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Whether `pred` answers `task` on `g` as well as `gold` does.
///
/// Shortest paths accept any valid path of optimal length; set answers ignore
/// order and duplicates; witnesses are never graded.
pub fn score(pred: &GoldAnswer, gold: &GoldAnswer, task: &TaskInstance, g: &Graph) -> Score {
    if pred.kind() != gold.kind() {
        return Score { correct: false, kind_mismatch: true };
    }
    let correct = match (pred, gold) {
        (GoldAnswer::Boolean { value: a, .. }, GoldAnswer::Boolean { value: b, .. }) => a == b,
        (GoldAnswer::Integer { value: a, .. }, GoldAnswer::Integer { value: b, .. }) => a == b,
        (GoldAnswer::Real { value: a }, GoldAnswer::Real { value: b }) => a.is_finite() && rel_close(*a, *b, REAL_TOL),
        (GoldAnswer::Node { value: a }, GoldAnswer::Node { value: b }) => a == b,
        (GoldAnswer::NodeSet { value: a }, GoldAnswer::NodeSet { value: b }) => {
            a.iter().collect::<BTreeSet<_>>() == b.iter().collect::<BTreeSet<_>>()
        }
        (GoldAnswer::EdgeSet { value: a }, GoldAnswer::EdgeSet { value: b }) => {
            let canon = |es: &[(NodeId, NodeId)]| es.iter().map(|(u, v)| edge_key(u, v)).collect::<BTreeSet<_>>();
            canon(a) == canon(b)
        }
        (GoldAnswer::NodeSequence { value: p, .. }, GoldAnswer::NodeSequence { value: q, length }) => {
            let ends = |s: &[NodeId]| (s.first().cloned(), s.last().cloned());
            let want = match task.entities.as_slice() {
                [a, b] => (Some(a.clone()), Some(b.clone())),
                _ => ends(q),
            };
            let optimal = length.or_else(|| walk(g, q));
            ends(p) == want
                && match (walk(g, p), optimal) {
                    (Some(w), Some(o)) => rel_close(w, o, 1e-9),
                    _ => false,
                }
        }
        (
            GoldAnswer::AnalysisRecord { component_count: c1, sizes_desc: s1, component_of_query: q1 },
            GoldAnswer::AnalysisRecord { component_count: c2, sizes_desc: s2, component_of_query: q2 },
        ) => c1 == c2 && s1 == s2 && q1 == q2,
        _ => unreachable!("kinds already compared"),
    };
    Score { correct, kind_mismatch: false }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Prediction {
    Answer(FinalAnswer),
    /// The pipeline failed before producing an answer.
    Error { class: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub item_id: String,
    pub task_type: TaskType,
    pub predicted: Prediction,
    pub gold: GoldAnswer,
    pub correct: bool,
    #[serde(default)]
    pub kind_mismatch: bool,
    pub latency_ms: u64,
    pub category: Category,
    pub size_bucket: SizeBucket,
}

impl EvalRecord {
    pub fn new(item: &BenchItem, g: &Graph, predicted: Prediction, latency_ms: u64) -> Self {
        let s = match &predicted {
            Prediction::Answer(a) => score(&a.answer, &item.gold, &item.task, g),
            Prediction::Error { .. } => Score { correct: false, kind_mismatch: false },
        };
        Self {
            item_id: item.id.clone(),
            task_type: item.task.task_type,
            predicted,
            gold: item.gold.clone(),
            correct: s.correct,
            kind_mismatch: s.kind_mismatch,
            latency_ms,
            category: item.category,
            size_bucket: SizeBucket::of(g.node_count()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
    /// `correct / total`; absent when nothing was counted.
    pub acc: Option<f64>,
}

impl Accuracy {
    fn add(&mut self, ok: bool) {
        self.total += 1;
        self.correct += ok as usize;
        self.acc = Some(self.correct as f64 / self.total as f64);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Columns {
    pub simple: Accuracy,
    pub complex: Accuracy,
    pub overall: Accuracy,
    /// Unweighted mean of the simple and complex accuracies that exist.
    pub macro_overall: Option<f64>,
}

impl Columns {
    fn add(&mut self, r: &EvalRecord) {
        match r.category {
            Category::Simple => self.simple.add(r.correct),
            Category::Complex => self.complex.add(r.correct),
        }
        self.overall.add(r.correct);
        let accs: Vec<f64> = [self.simple.acc, self.complex.acc].into_iter().flatten().collect();
        self.macro_overall = Some(accs.iter().sum::<f64>() / accs.len() as f64);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    #[serde(flatten)]
    pub columns: Columns,
    pub by_size: BTreeMap<SizeBucket, Columns>,
    pub by_task: BTreeMap<TaskType, Accuracy>,
    pub errors: usize,
    pub kind_mismatches: usize,
    pub median_latency_ms: u64,
}

impl Report {
    pub fn simple_acc(&self) -> Option<f64> {
        self.columns.simple.acc
    }

    pub fn complex_acc(&self) -> Option<f64> {
        self.columns.complex.acc
    }

    /// Micro average over every record.
    pub fn overall_acc(&self) -> f64 {
        self.columns.overall.acc.unwrap_or(0.0)
    }

    /// Plain-text table with one row per size bucket and a total row.
    pub fn to_table(&self) -> String {
        let cell = |a: &Accuracy| a.acc.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        let mut s = String::new();
        let _ = writeln!(s, "{:<14} {:>8} {:>8} {:>8} {:>7}", "nodes", "simple", "complex", "overall", "items");
        let mut row = |name: &str, c: &Columns| {
            let _ = writeln!(
                s,
                "{:<14} {:>8} {:>8} {:>8} {:>7}",
                name,
                cell(&c.simple),
                cell(&c.complex),
                cell(&c.overall),
                c.overall.total
            );
        };
        for (b, c) in &self.by_size {
            row(b.label(), c);
        }
        row("all", &self.columns);
        s
    }
}

/// Micro-averaged accuracies; the result does not depend on record order.
pub fn aggregate(records: &[EvalRecord]) -> Result<Report, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut columns = Columns::default();
    let mut by_size: BTreeMap<SizeBucket, Columns> = BTreeMap::new();
    let mut by_task: BTreeMap<TaskType, Accuracy> = BTreeMap::new();
    for r in records {
        columns.add(r);
        by_size.entry(r.size_bucket).or_default().add(r);
        by_task.entry(r.task_type).or_default().add(r.correct);
    }
    let mut lat: Vec<u64> = records.iter().map(|r| r.latency_ms).collect();
    lat.sort_unstable();
    Ok(Report {
        columns,
        by_size,
        by_task,
        errors: records.iter().filter(|r| matches!(r.predicted, Prediction::Error { .. })).count(),
        kind_mismatches: records.iter().filter(|r| r.kind_mismatch).count(),
        median_latency_ms: lat[lat.len() / 2],
    })
}

/// One line of an answers file: either an answer or an error for an item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerLine {
    pub item_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<GoldAnswer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default)]
    pub latency_ms: u64,
}

pub fn parse_answer_lines(text: &str) -> Result<Vec<AnswerLine>, EvalError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| EvalError::Answers { line: i + 1, detail: e.to_string() }))
        .collect()
}

/// Scores `answers` against every item of `bench`; unanswered items count as errors.
pub fn evaluate_answers(bench: &Benchmark, answers: &[AnswerLine]) -> Vec<EvalRecord> {
    let by_id: BTreeMap<&str, &AnswerLine> = answers.iter().map(|a| (a.item_id.as_str(), a)).collect();
    bench
        .items
        .par_iter()
        .filter_map(|it| {
            let g = bench.graph(it)?;
            let (pred, lat) = match by_id.get(it.id.as_str()) {
                Some(AnswerLine { answer: Some(a), latency_ms, .. }) => (
                    Prediction::Answer(FinalAnswer { answer: a.clone(), rationale: String::new(), warnings: vec![] }),
                    *latency_ms,
                ),
                Some(AnswerLine { error, latency_ms, .. }) => (
                    Prediction::Error {
                        class: "backend".into(),
                        message: error.clone().unwrap_or_else(|| "no answer given".into()),
                    },
                    *latency_ms,
                ),
                None => (Prediction::Error { class: "missing".into(), message: "item not answered".into() }, 0),
            };
            Some(EvalRecord::new(it, g, pred, lat))
        })
        .collect()
}
