//! The visual reasoning loop, the text-branch answerer and the preference loss.
//!
//! A visual session walks an [`ExecutionPlan`]: at step `t` the reasoner sees
//! the current SVG, the serialized history and the step instruction, replies
//! with an observation and an optional highlight action, and the action is
//! applied to produce the next visual state. A final summarizer call turns
//! the history into a typed answer.

mod claim;
mod dpo;
mod reader;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::llm::{
    extract_json_object, parse_step_reply, render_action, ImagePayload, LlmError, Reasoner, ReasonerRequest,
    RequestMeta, Sampling, Slot,
};
use crate::oracles::{AnswerKind, GoldAnswer, TaskType};
use crate::rag::RetrievedContext;
use crate::render::{svg_hash, HighlightAction, RenderError, VisualState};
use crate::router::{ExecutionPlan, ParsedTask};
use crate::subgraph::Subgraph;

pub use claim::{Claim, Subject};
pub use dpo::{dpo_loss, dpo_loss_from_margin, dpo_loss_grad, softplus, DpoInputs};
pub use reader::ContextReader;

/// Steps of history replayed into each prompt.
pub const HISTORY_CAP: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum ReasoningError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("reply does not match the {expected:?} answer schema: {reply:?}")]
    AnswerFormat { expected: AnswerKind, reply: String },
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("journal write failed: {0}")]
    Journal(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningStep {
    pub index: usize,
    pub instruction: String,
    pub observation: String,
    pub action: Option<HighlightAction>,
    pub state_revision_after: u64,
    /// Why the parsed action was not applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub claims: Vec<Claim>,
}

impl ReasoningStep {
    /// Whether the action changed the visual state.
    pub fn applied(&self) -> bool {
        self.action.is_some() && self.action_error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalAnswer {
    pub answer: GoldAnswer,
    #[serde(default)]
    pub rationale: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ReasoningSession {
    pub plan: ExecutionPlan,
    pub states: Vec<VisualState>,
    pub history: Vec<ReasoningStep>,
    pub final_answer: Option<FinalAnswer>,
}

impl ReasoningSession {
    pub fn current(&self) -> &VisualState {
        self.states.last().expect("a session always has its initial state")
    }

    pub fn svg_hashes(&self) -> Vec<String> {
        self.states.iter().map(|s| svg_hash(&s.render())).collect()
    }
}

/// A session cut short by a reasoner failure; the partial history survives.
#[derive(Debug)]
pub struct SessionAbort {
    pub session: ReasoningSession,
    pub error: ReasoningError,
}

/// One line of a session journal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalLine {
    pub t: usize,
    pub instruction: String,
    pub observation: String,
    pub action: Option<HighlightAction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_error: Option<String>,
    pub svg_hash: String,
}

/// Per-session knobs that are not part of the plan.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionOptions {
    pub question: String,
    pub expected: AnswerKind,
    /// Routes scripted fixtures; also written to request metadata.
    pub tag: Option<String>,
    pub layout_seed: u64,
    pub sampling: Sampling,
}

impl SessionOptions {
    pub fn new(question: impl Into<String>, expected: AnswerKind) -> Self {
        Self { question: question.into(), expected, tag: None, layout_seed: 0, sampling: Sampling::default() }
    }

    fn meta(&self, task_type: TaskType, slot: Slot) -> RequestMeta {
        RequestMeta { tag: self.tag.clone(), task_type: Some(task_type), slot }
    }
}

pub const VGT_SYSTEM_PROMPT: &str = "You reason about graphs by looking at a rendered drawing and marking it up. \
At each step follow the instruction, describe what you see, and end your reply with exactly one line of the form \
`ACTION: <kind> <elements> [color=<tag>]` where kind is highlight_nodes (ids separated by commas), \
highlight_edges (pairs written A-B), highlight_path (ids in order), clear, or none. \
Colors are focus, frontier and path.";

pub const SUMMARY_SYSTEM_PROMPT: &str = "You turn a finished graph reasoning trace into a final answer. \
Reply with a single JSON object {\"answer\": <answer>, \"rationale\": <short string>}.";

pub const TEXT_SYSTEM_PROMPT: &str = "You answer graph questions from retrieved textual graph context. \
Reply with a single JSON object {\"answer\": <answer>, \"rationale\": <short string>}.";

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn step_line(s: &ReasoningStep) -> String {
    let action = render_action(s.action.as_ref());
    let action = action.trim_start_matches("ACTION: ");
    format!("Step {}: {} → {} [{action}]", s.index, one_line(&s.instruction), one_line(&s.observation))
}

/// `Step t: <instruction> → <observation> [<action>]` lines for the last
/// [`HISTORY_CAP`] steps.
pub fn serialize_history(history: &[ReasoningStep]) -> String {
    let skip = history.len().saturating_sub(HISTORY_CAP);
    history[skip..].iter().map(step_line).collect::<Vec<_>>().join("\n")
}

/// Shape description of an answer kind, embedded in answer prompts.
pub fn answer_schema(kind: AnswerKind) -> &'static str {
    match kind {
        AnswerKind::Boolean => r#"{"kind": "boolean", "value": true|false, "witness": [node ids, optional]}"#,
        AnswerKind::Integer => r#"{"kind": "integer", "value": <integer>}"#,
        AnswerKind::Real => r#"{"kind": "real", "value": <number>}"#,
        AnswerKind::Node => r#"{"kind": "node", "value": "<node id>"}"#,
        AnswerKind::NodeSet => r#"{"kind": "node_set", "value": ["<node id>", ...]}"#,
        AnswerKind::NodeSequence => r#"{"kind": "node_sequence", "value": ["<start>", ..., "<end>"]}"#,
        AnswerKind::EdgeSet => r#"{"kind": "edge_set", "value": [["<u>", "<v>"], ...]}"#,
        AnswerKind::AnalysisRecord => {
            r#"{"kind": "analysis_record", "component_count": <integer>, "sizes_desc": [<integer>, ...], "component_of_query": {"node": "<id>", "component": <index>, "size": <integer>} (only when a node is named)}"#
        }
    }
}

/// Reads a `{"answer": ..., "rationale": ...}` reply (or a bare answer object)
/// and checks its kind.
pub fn parse_answer(text: &str, expected: AnswerKind) -> Result<FinalAnswer, ReasoningError> {
    let bad = || ReasoningError::AnswerFormat { expected, reply: text.to_string() };
    let obj = extract_json_object(text).ok_or_else(bad)?;
    let v: serde_json::Value = serde_json::from_str(obj).map_err(|_| bad())?;
    let (answer, rationale) = match v.get("answer") {
        Some(a) => (a.clone(), v.get("rationale").and_then(|r| r.as_str()).unwrap_or_default().to_string()),
        None => (v, String::new()),
    };
    let answer: GoldAnswer = serde_json::from_value(answer).map_err(|_| bad())?;
    if answer.kind() != expected {
        return Err(bad());
    }
    Ok(FinalAnswer { answer, rationale, warnings: vec![] })
}

fn step_prompt(opts: &SessionOptions, plan: &ExecutionPlan, t: usize, history: &[ReasoningStep]) -> String {
    let step = &plan.steps[t - 1];
    let past = if history.is_empty() { "(none)".to_string() } else { serialize_history(history) };
    format!(
        "Question: {}\nPrevious steps:\n{past}\nStep {t} of {}: {}\nThe attached image shows the current state of the graph.",
        opts.question,
        plan.len(),
        step.instruction
    )
}

fn write_journal(journal: &mut Option<&mut dyn Write>, line: &JournalLine) -> Result<(), ReasoningError> {
    if let Some(w) = journal.as_mut() {
        let text = serde_json::to_string(line).expect("journal line serializes");
        writeln!(w, "{text}").map_err(|e| ReasoningError::Journal(e.to_string()))?;
    }
    Ok(())
}

/// Runs the closed visual loop over `plan` and summarizes the trace.
pub fn run_vgt(
    plan: &ExecutionPlan,
    sub: Subgraph,
    reasoner: &dyn Reasoner,
    opts: &SessionOptions,
    mut journal: Option<&mut dyn Write>,
) -> Result<ReasoningSession, Box<SessionAbort>> {
    let initial = VisualState::new(sub, opts.layout_seed);
    let mut session =
        ReasoningSession { plan: plan.clone(), states: vec![], history: vec![], final_answer: None };
    let abort = |session: ReasoningSession, error: ReasoningError| Box::new(SessionAbort { session, error });
    match initial {
        Ok(s) => session.states.push(s),
        Err(e) => return Err(abort(session, e.into())),
    }
    if plan.is_empty() {
        return Err(abort(session, ReasoningError::Precondition("empty plan".into())));
    }
    for t in 1..=plan.len() {
        let state = session.current();
        let req = ReasonerRequest::new(VGT_SYSTEM_PROMPT, step_prompt(opts, plan, t, &session.history))
            .with_image(ImagePayload::svg(state.render()))
            .with_sampling(opts.sampling)
            .with_meta(opts.meta(plan.task_type, Slot::Step(t)));
        let reply = match reasoner.complete(&req) {
            Ok(r) => r,
            Err(e) => return Err(abort(session, e.into())),
        };
        let parsed = reply.structured.unwrap_or_else(|| parse_step_reply(&reply.text));
        let mut action_error = None;
        if let Some(a) = &parsed.action {
            match session.current().apply_action(a) {
                Ok(next) => session.states.push(next),
                Err(e) => {
                    log::warn!("step {t}: action not applied: {e}");
                    action_error = Some(e.to_string());
                }
            }
        }
        let current = session.current();
        let step = ReasoningStep {
            index: t,
            instruction: plan.steps[t - 1].instruction.clone(),
            observation: parsed.observation,
            action: parsed.action,
            state_revision_after: current.revision,
            action_error,
            claims: vec![],
        };
        let line = JournalLine {
            t,
            instruction: step.instruction.clone(),
            observation: step.observation.clone(),
            action: step.action.clone(),
            action_error: step.action_error.clone(),
            svg_hash: svg_hash(&current.render()),
        };
        session.history.push(step);
        if let Err(e) = write_journal(&mut journal, &line) {
            return Err(abort(session, e));
        }
    }
    match summarize(&session.history, plan.task_type, opts, reasoner) {
        Ok(f) => {
            session.final_answer = Some(f);
            Ok(session)
        }
        Err(e) => Err(abort(session, e)),
    }
}

/// Aggregates a finished trace into a typed answer; one retry on schema failure.
pub fn summarize(
    history: &[ReasoningStep],
    task_type: TaskType,
    opts: &SessionOptions,
    reasoner: &dyn Reasoner,
) -> Result<FinalAnswer, ReasoningError> {
    if history.is_empty() {
        return Err(ReasoningError::Precondition("cannot summarize an empty history".into()));
    }
    let full: Vec<String> = history.iter().map(step_line).collect();
    let prompt = format!(
        "Question: {}\nReasoning trace:\n{}\nAnswer schema: {}",
        opts.question,
        full.join("\n"),
        answer_schema(opts.expected)
    );
    let req = ReasonerRequest::new(SUMMARY_SYSTEM_PROMPT, prompt)
        .with_sampling(opts.sampling)
        .with_meta(opts.meta(task_type, Slot::Summarize));
    let mut last = None;
    for _ in 0..2 {
        let reply = reasoner.complete(&req)?;
        match parse_answer(&reply.text, opts.expected) {
            Ok(f) => return Ok(f),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("loop ran"))
}

/// Prompt for the text branch.
pub fn text_prompt(question: &str, ctx: &RetrievedContext, expected: AnswerKind) -> String {
    let body = if ctx.assembled_text.trim().is_empty() { "(no context retrieved)" } else { ctx.assembled_text.trim_end() };
    format!("Question: {question}\nRetrieved graph context:\n{body}\nAnswer schema: {}", answer_schema(expected))
}

/// Single-shot answer from retrieved text; one retry on schema failure.
pub fn answer_text(
    task: &ParsedTask,
    ctx: &RetrievedContext,
    reasoner: &dyn Reasoner,
    opts: &SessionOptions,
) -> Result<FinalAnswer, ReasoningError> {
    let mut warnings = vec![];
    if ctx.entries.is_empty() {
        warnings.push("retrieved context is empty".to_string());
    }
    if ctx.truncated {
        warnings.push("retrieved context was truncated to the budget".to_string());
    }
    let req = ReasonerRequest::new(TEXT_SYSTEM_PROMPT, text_prompt(&task.question, ctx, opts.expected))
        .with_sampling(opts.sampling)
        .with_meta(opts.meta(task.task_type, Slot::TextAnswer));
    let mut last = None;
    for _ in 0..2 {
        let reply = reasoner.complete(&req)?;
        match parse_answer(&reply.text, opts.expected) {
            Ok(mut f) => {
                f.warnings = warnings;
                return Ok(f);
            }
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("loop ran"))
}
