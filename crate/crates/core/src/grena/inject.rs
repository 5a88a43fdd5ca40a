//! Seeded error injection turning a chosen trace into a rejected one.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::trace::{conclusion, GoldTrace, VISUAL_MARK};
use crate::graph::{edge_key, Graph, NodeId};
use crate::oracles::{GoldAnswer, TaskInstance};
use crate::reasoning::{Claim, ReasoningStep, Subject};
use crate::render::HighlightAction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCategory {
    Factual,
    Logical,
    Computation,
    OmittedSteps,
    ElementMisrecognition,
    VisualNeglect,
    TextVisualInconsistency,
    VisualizationMisuse,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 8] = [
        ErrorCategory::Factual,
        ErrorCategory::Logical,
        ErrorCategory::Computation,
        ErrorCategory::OmittedSteps,
        ErrorCategory::ElementMisrecognition,
        ErrorCategory::VisualNeglect,
        ErrorCategory::TextVisualInconsistency,
        ErrorCategory::VisualizationMisuse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ErrorCategory::Factual => "factual",
            ErrorCategory::Logical => "logical",
            ErrorCategory::Computation => "computation",
            ErrorCategory::OmittedSteps => "omitted_steps",
            ErrorCategory::ElementMisrecognition => "element_misrecognition",
            ErrorCategory::VisualNeglect => "visual_neglect",
            ErrorCategory::TextVisualInconsistency => "text_visual_inconsistency",
            ErrorCategory::VisualizationMisuse => "visualization_misuse",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Where the perturbation happened; `step` is 1-based in the chosen trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub step: usize,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedTrace {
    pub steps: Vec<ReasoningStep>,
    pub answer: GoldAnswer,
    pub category: ErrorCategory,
    pub edit: Edit,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{} does not apply: {reason}", category.name())]
pub struct Inapplicable {
    pub category: ErrorCategory,
    pub reason: String,
}

/// Replaces whole-token mentions of node `from` inside id lists and phrases.
pub(crate) fn swap_id(text: &str, from: &NodeId, to: &NodeId) -> String {
    let re = Regex::new(&format!(
        r"(^|: |, |node |nodes |-> |-)({})($|[,.:]| ->| \(|-| )",
        regex::escape(from.as_str())
    ))
    .expect("escaped pattern");
    // two passes so adjacent mentions sharing a delimiter are both caught
    let once = re.replace_all(text, format!("${{1}}{}${{3}}", to.as_str()));
    re.replace_all(&once, format!("${{1}}{}${{3}}", to.as_str())).into_owned()
}

fn count_phrase(subject: &Subject) -> (&'static str, &'static str) {
    match subject {
        Subject::NodeCount | Subject::DegreeAtLeast { .. } => ("", " nodes"),
        Subject::CycleRank => ("rank is ", ""),
        Subject::ComponentCount => ("gives ", ""),
        _ => ("", " edges"),
    }
}

fn restate_count(text: &str, subject: &Subject, old: i64, new: i64) -> String {
    let (pre, post) = count_phrase(subject);
    let re = Regex::new(&format!(r"(^|[^0-9A-Za-z_]){}{old}{}\b", regex::escape(pre), regex::escape(post))).unwrap();
    re.replacen(text, 1, format!("${{1}}{pre}{new}{post}")).into_owned()
}

fn renumber(steps: &mut [ReasoningStep]) {
    let mut rev = 0;
    for (i, s) in steps.iter_mut().enumerate() {
        s.index = i + 1;
        if s.action.is_some() {
            rev += 1;
        }
        s.state_revision_after = rev;
    }
}

/// Fewest-edge path ignoring weights.
fn min_hop_path(g: &Graph, a: &NodeId, b: &NodeId) -> Option<Vec<NodeId>> {
    let (s, t) = (g.index(a)?, g.index(b)?);
    let mut parent = vec![usize::MAX; g.node_count()];
    parent[s] = s;
    let mut q = std::collections::VecDeque::from([s]);
    while let Some(u) = q.pop_front() {
        for &v in g.neighbors(u) {
            if parent[v] == usize::MAX {
                parent[v] = u;
                q.push_back(v);
            }
        }
    }
    if parent[t] == usize::MAX {
        return None;
    }
    let mut p = vec![t];
    while *p.last().unwrap() != s {
        p.push(parent[*p.last().unwrap()]);
    }
    Some(p.into_iter().rev().map(|i| g.id(i).clone()).collect())
}

fn node_list(g: &Graph) -> Vec<NodeId> {
    g.nodes().to_vec()
}

/// A different answer of the same kind.
pub fn corrupt_answer(g: &Graph, visible: &Graph, a: &GoldAnswer, rng: &mut ChaCha8Rng) -> GoldAnswer {
    let pool = if visible.node_count() > 1 { visible } else { g };
    let pick_other = |rng: &mut ChaCha8Rng, avoid: &BTreeSet<&NodeId>| -> Option<NodeId> {
        let cands: Vec<NodeId> = node_list(pool).into_iter().filter(|v| !avoid.contains(v)).collect();
        cands.choose(rng).cloned().or_else(|| node_list(g).into_iter().find(|v| !avoid.contains(v)))
    };
    match a {
        GoldAnswer::Boolean { value, .. } => GoldAnswer::boolean(!value),
        GoldAnswer::Integer { value, .. } => {
            let up = *value == 0 || rng.gen_bool(0.5);
            GoldAnswer::integer(if up { value + 1 } else { value - 1 })
        }
        GoldAnswer::Real { value } => GoldAnswer::Real { value: value + 1.0 },
        GoldAnswer::Node { value } => match pick_other(rng, &BTreeSet::from([value])) {
            Some(v) => GoldAnswer::Node { value: v },
            None => GoldAnswer::NodeSet { value: vec![] },
        },
        GoldAnswer::NodeSet { value } => {
            let mut v = value.clone();
            let avoid: BTreeSet<&NodeId> = value.iter().collect();
            match pick_other(rng, &avoid) {
                Some(x) if v.is_empty() || rng.gen_bool(0.5) => v.push(x),
                _ => {
                    let i = rng.gen_range(0..v.len());
                    v.remove(i);
                }
            }
            v.sort();
            GoldAnswer::NodeSet { value: v }
        }
        GoldAnswer::EdgeSet { value } => {
            let mut v = value.clone();
            let have: BTreeSet<_> = value.iter().cloned().collect();
            let extra: Vec<_> = pool
                .edges()
                .map(|(x, y, _)| edge_key(pool.id(x), pool.id(y)))
                .filter(|e| !have.contains(e))
                .collect();
            match extra.choose(rng) {
                Some(e) if v.is_empty() || rng.gen_bool(0.5) => v.push(e.clone()),
                _ if !v.is_empty() => {
                    let i = rng.gen_range(0..v.len());
                    v.remove(i);
                }
                _ => {}
            }
            v.sort();
            GoldAnswer::EdgeSet { value: v }
        }
        GoldAnswer::NodeSequence { value, length } => {
            let mut p = value.clone();
            let avoid: BTreeSet<&NodeId> = value.iter().collect();
            let Some(x) = pick_other(rng, &avoid) else {
                p.pop();
                return GoldAnswer::NodeSequence { value: p, length: length.map(|l| l - 1.0) };
            };
            if p.len() >= 3 && rng.gen_bool(0.5) {
                let i = rng.gen_range(1..p.len() - 1);
                p[i] = x;
                GoldAnswer::NodeSequence { value: p, length: *length }
            } else {
                let i = rng.gen_range(1..p.len().max(2));
                p.insert(i.min(p.len()), x);
                GoldAnswer::NodeSequence { value: p, length: length.map(|l| l + 1.0) }
            }
        }
        GoldAnswer::AnalysisRecord { component_count, sizes_desc, component_of_query } => GoldAnswer::AnalysisRecord {
            component_count: component_count + 1,
            sizes_desc: sizes_desc.clone(),
            component_of_query: component_of_query.clone(),
        },
    }
}

/// Sets the final verdict to `new`, restating the closing sentence.
fn replace_answer(steps: &mut [ReasoningStep], t: &TaskInstance, old: &GoldAnswer, new: &GoldAnswer) {
    let last = steps.last_mut().expect("non-empty trace");
    for c in &mut last.claims {
        if let Claim::Verdict { answer } = c {
            *answer = new.clone();
        }
    }
    last.observation = last.observation.replacen(&conclusion(t, old), &conclusion(t, new), 1);
}

fn rename_in_claim(c: &mut Claim, from: &NodeId, to: &NodeId) {
    let ren = |v: &mut NodeId| {
        if v == from {
            *v = to.clone();
        }
    };
    match c {
        Claim::Nodes { nodes, .. } => {
            nodes.iter_mut().for_each(ren);
            nodes.sort();
        }
        Claim::Edges { edges, .. } => {
            for e in edges.iter_mut() {
                let (mut a, mut b) = e.clone();
                ren(&mut a);
                ren(&mut b);
                *e = edge_key(&a, &b);
            }
            edges.sort();
        }
        Claim::PathPrefix { path, .. } => path.iter_mut().for_each(ren),
        Claim::Verdict { answer } => match answer {
            GoldAnswer::Boolean { witness: Some(w), .. } | GoldAnswer::Integer { witness: Some(w), .. } => {
                w.iter_mut().for_each(ren)
            }
            GoldAnswer::NodeSet { value } | GoldAnswer::NodeSequence { value, .. } => value.iter_mut().for_each(ren),
            GoldAnswer::Node { value } => ren(value),
            _ => {}
        },
        Claim::Count { .. } => {}
    }
}

fn action_nodes(a: &HighlightAction) -> Vec<NodeId> {
    match a {
        HighlightAction::HighlightNodes { nodes, .. } => nodes.clone(),
        HighlightAction::HighlightEdges { edges, .. } => {
            edges.iter().flat_map(|(u, v)| [u.clone(), v.clone()]).collect::<BTreeSet<_>>().into_iter().collect()
        }
        HighlightAction::HighlightPath { path, .. } => path.clone(),
        HighlightAction::Clear => vec![],
    }
}

fn claim_nodes(s: &ReasoningStep) -> BTreeSet<NodeId> {
    let mut out = BTreeSet::new();
    for c in &s.claims {
        match c {
            Claim::Nodes { nodes, .. } => out.extend(nodes.iter().cloned()),
            Claim::Edges { edges, .. } => out.extend(edges.iter().flat_map(|(a, b)| [a.clone(), b.clone()])),
            Claim::PathPrefix { path, .. } => out.extend(path.iter().cloned()),
            Claim::Verdict { answer } => match answer {
                GoldAnswer::Boolean { witness: Some(w), .. } | GoldAnswer::Integer { witness: Some(w), .. } => {
                    out.extend(w.iter().cloned())
                }
                GoldAnswer::NodeSet { value } | GoldAnswer::NodeSequence { value, .. } => out.extend(value.iter().cloned()),
                GoldAnswer::Node { value } => {
                    out.insert(value.clone());
                }
                _ => {}
            },
            Claim::Count { .. } => {}
        }
    }
    out
}

fn strip_visual(text: &str) -> String {
    match text.find(VISUAL_MARK) {
        Some(i) => {
            let tail = &text[i..];
            let end = tail.find(". ").map(|j| i + j + 2).unwrap_or(text.len());
            let mut s = format!("{}{}", &text[..i], &text[end..]);
            s.truncate(s.trim_end().len());
            s
        }
        None => text.to_string(),
    }
}

/// Swaps one element of an action for a different element that exists in `sub`.
fn retarget(a: &HighlightAction, sub: &Graph, rng: &mut ChaCha8Rng) -> Option<HighlightAction> {
    match a {
        HighlightAction::HighlightNodes { nodes, color } => {
            let have: BTreeSet<_> = nodes.iter().collect();
            let other: Vec<NodeId> = sub.nodes().iter().filter(|v| !have.contains(v)).cloned().collect();
            let x = other.choose(rng)?.clone();
            let mut n = nodes.clone();
            let i = rng.gen_range(0..n.len());
            n[i] = x;
            Some(HighlightAction::HighlightNodes { nodes: n, color: *color })
        }
        HighlightAction::HighlightEdges { edges, color } => {
            let have: BTreeSet<_> = edges.iter().cloned().collect();
            let other: Vec<_> =
                sub.edges().map(|(u, v, _)| edge_key(sub.id(u), sub.id(v))).filter(|e| !have.contains(e)).collect();
            let e = other.choose(rng)?.clone();
            let mut es = edges.clone();
            let i = rng.gen_range(0..es.len());
            es[i] = e;
            Some(HighlightAction::HighlightEdges { edges: es, color: *color })
        }
        // highlight the endpoints instead of tracing the path
        HighlightAction::HighlightPath { path, .. } if path.len() >= 2 => {
            Some(HighlightAction::nodes(vec![path[0].clone(), path[path.len() - 1].clone()]))
        }
        _ => None,
    }
}

/// Applies `category`'s recipe to `trace`, or reports why it cannot.
pub fn inject_error(
    g: &Graph,
    trace: &GoldTrace,
    category: ErrorCategory,
    seed: u64,
) -> Result<RejectedTrace, Inapplicable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sub = &trace.subgraph().graph;
    let t = &trace.task;
    let gold = &trace.answer.answer;
    let mut steps = trace.steps.clone();
    let last = steps.len() - 1;
    let nope = |reason: &str| Inapplicable { category, reason: reason.to_string() };
    let (step, description, answer) = match category {
        ErrorCategory::Factual => {
            let mut sites = vec![];
            for (si, s) in steps.iter().enumerate() {
                for (ci, c) in s.claims.iter().enumerate() {
                    if let Claim::Nodes { subject, nodes } = c {
                        if *subject != Subject::Endpoints && !nodes.is_empty() && nodes.len() < g.node_count() {
                            sites.push((matches!(subject, Subject::Neighbors { .. }), si, ci));
                        }
                    }
                }
            }
            let preferred: Vec<_> = sites.iter().filter(|s| s.0).copied().collect();
            let &(_, si, ci) = if preferred.is_empty() { &sites } else { &preferred }
                .choose(&mut rng)
                .ok_or_else(|| nope("no stated node set"))?;
            let Claim::Nodes { subject, nodes } = &steps[si].claims[ci] else { unreachable!() };
            let have: BTreeSet<&NodeId> = nodes.iter().collect();
            let subject_node = match subject {
                Subject::Neighbors { node } | Subject::HopLayer { node, .. } | Subject::ComponentOf { node } => Some(node),
                _ => None,
            };
            let outside = |pool: &Graph| -> Vec<NodeId> {
                pool.nodes().iter().filter(|v| !have.contains(v) && Some(*v) != subject_node).cloned().collect()
            };
            let mut cands = outside(sub);
            if cands.is_empty() {
                cands = outside(g);
            }
            let y = cands.choose(&mut rng).ok_or_else(|| nope("every node is in the set"))?.clone();
            let x = nodes.choose(&mut rng).unwrap().clone();
            let s = &mut steps[si];
            rename_in_claim(&mut s.claims[ci], &x, &y);
            s.observation = swap_id(&s.observation, &x, &y);
            if let Some(a) = &s.action {
                if sub.contains(&y) && action_nodes(a).contains(&x) {
                    if let HighlightAction::HighlightNodes { nodes, color } = a {
                        let mut n: Vec<NodeId> = nodes.iter().map(|v| if *v == x { y.clone() } else { v.clone() }).collect();
                        n.sort();
                        s.action = Some(HighlightAction::HighlightNodes { nodes: n, color: *color });
                    }
                }
            }
            let wrong = corrupt_answer(g, sub, gold, &mut rng);
            replace_answer(&mut steps, t, gold, &wrong);
            (si + 1, format!("stated node {x} as {y} in a node set"), wrong)
        }
        ErrorCategory::Logical => {
            let wrong = match gold {
                // weighted path questions compared by hop count
                GoldAnswer::NodeSequence { value, .. } if g.is_weighted() => {
                    let min_hop = min_hop_path(g, &t.entities[0], &t.entities[1]);
                    match min_hop {
                        Some(p) if p != *value => {
                            let w: f64 = p
                                .windows(2)
                                .map(|e| g.edge_weight(g.index(&e[0]).unwrap(), g.index(&e[1]).unwrap()).unwrap())
                                .sum();
                            GoldAnswer::NodeSequence { value: p, length: Some(w) }
                        }
                        _ => corrupt_answer(g, sub, gold, &mut rng),
                    }
                }
                _ => corrupt_answer(g, sub, gold, &mut rng),
            };
            replace_answer(&mut steps, t, gold, &wrong);
            (last + 1, "conclusion does not follow from the stated steps".to_string(), wrong)
        }
        ErrorCategory::Computation => {
            let sites: Vec<(usize, usize)> = steps
                .iter()
                .enumerate()
                .flat_map(|(si, s)| {
                    s.claims.iter().enumerate().filter(|(_, c)| matches!(c, Claim::Count { .. })).map(move |(ci, _)| (si, ci))
                })
                .collect();
            let wrong = corrupt_answer(g, sub, gold, &mut rng);
            let step = match sites.choose(&mut rng) {
                Some(&(si, ci)) => {
                    let Claim::Count { subject, value } = steps[si].claims[ci].clone() else { unreachable!() };
                    let nv = if value == 0 || rng.gen_bool(0.5) { value + 1 } else { value - 1 };
                    steps[si].claims[ci] = Claim::Count { subject: subject.clone(), value: nv };
                    steps[si].observation = restate_count(&steps[si].observation, &subject, value, nv);
                    si + 1
                }
                None => last + 1,
            };
            replace_answer(&mut steps, t, gold, &wrong);
            (step, "off-by-one in a counted quantity".to_string(), wrong)
        }
        ErrorCategory::OmittedSteps => {
            if steps.len() < 3 {
                return Err(nope("fewer than three steps"));
            }
            let i = rng.gen_range(1..steps.len() - 1);
            steps.remove(i);
            renumber(&mut steps);
            (i + 1, format!("removed step {}", i + 1), gold.clone())
        }
        ErrorCategory::ElementMisrecognition => {
            let visible: BTreeSet<&NodeId> = sub.nodes().iter().collect();
            let pick = |si: usize| -> Vec<NodeId> {
                claim_nodes(&steps[si])
                    .into_iter()
                    .filter(|v| visible.contains(v))
                    .filter(|v| steps[si].observation != swap_id(&steps[si].observation, v, &NodeId::new("_").unwrap()))
                    .collect()
            };
            let mut order: Vec<usize> = (0..last).collect();
            order.shuffle(&mut rng);
            order.push(last);
            let (si, x) = order
                .into_iter()
                .find_map(|si| pick(si).choose(&mut rng).cloned().map(|x| (si, x)))
                .ok_or_else(|| nope("no visible node is named"))?;
            let named = claim_nodes(&steps[si]);
            let others: Vec<NodeId> = sub.nodes().iter().filter(|v| !named.contains(v)).cloned().collect();
            let y = others.choose(&mut rng).ok_or_else(|| nope("no other visible node"))?.clone();
            let s = &mut steps[si];
            s.observation = swap_id(&s.observation, &x, &y);
            for c in &mut s.claims {
                rename_in_claim(c, &x, &y);
            }
            let mut answer = gold.clone();
            if si == last {
                if let Some(Claim::Verdict { answer: a }) = s.claims.iter().find(|c| matches!(c, Claim::Verdict { .. })) {
                    answer = a.clone();
                }
            }
            (si + 1, format!("read node {x} as {y}"), answer)
        }
        ErrorCategory::VisualNeglect => {
            if steps.iter().all(|s| s.action.is_none()) {
                return Err(nope("trace has no visual actions"));
            }
            let first = steps.iter().position(|s| s.action.is_some()).unwrap();
            for s in &mut steps {
                s.observation = strip_visual(&s.observation);
                s.action = None;
            }
            renumber(&mut steps);
            (first + 1, "dropped every image reference and action".to_string(), gold.clone())
        }
        ErrorCategory::TextVisualInconsistency => {
            let mut sites = vec![];
            for (si, s) in steps.iter().enumerate() {
                let Some(a) = &s.action else { continue };
                let shown = action_nodes(a);
                for (ci, c) in s.claims.iter().enumerate() {
                    if let Claim::Nodes { nodes, .. } = c {
                        for x in nodes.iter().filter(|x| shown.contains(x)) {
                            sites.push((si, ci, x.clone()));
                        }
                    }
                }
            }
            let (si, ci, x) = sites.choose(&mut rng).cloned().ok_or_else(|| nope("no highlighted node is stated"))?;
            let Claim::Nodes { nodes, .. } = &steps[si].claims[ci] else { unreachable!() };
            let have: BTreeSet<&NodeId> = nodes.iter().collect();
            let others: Vec<NodeId> = sub.nodes().iter().filter(|v| !have.contains(v)).cloned().collect();
            let y = others.choose(&mut rng).ok_or_else(|| nope("no other visible node"))?.clone();
            let s = &mut steps[si];
            rename_in_claim(&mut s.claims[ci], &x, &y);
            let (text, image) = match s.observation.find(VISUAL_MARK) {
                Some(i) => s.observation.split_at(i),
                None => (s.observation.as_str(), ""),
            };
            s.observation = format!("{}{image}", swap_id(text, &x, &y));
            (si + 1, format!("text names {y} where the image highlights {x}"), gold.clone())
        }
        ErrorCategory::VisualizationMisuse => {
            let sites: Vec<usize> = (0..steps.len()).filter(|&i| steps[i].action.is_some()).collect();
            let &si = sites.choose(&mut rng).ok_or_else(|| nope("trace has no visual actions"))?;
            let a = steps[si].action.clone().unwrap();
            let moved = if rng.gen_bool(0.5) { retarget(&a, sub, &mut rng) } else { None };
            let desc = match moved {
                Some(b) => {
                    steps[si].action = Some(b);
                    "highlight retargeted to other elements"
                }
                None => {
                    steps[si].action = None;
                    "highlight call dropped"
                }
            };
            renumber(&mut steps);
            (si + 1, desc.to_string(), gold.clone())
        }
    };
    if steps == trace.steps && answer == *gold {
        return Err(nope("perturbation left the trace unchanged"));
    }
    Ok(RejectedTrace { steps, answer, category, edit: Edit { step, description } })
}
