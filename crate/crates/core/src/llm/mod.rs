//! Reasoner abstraction: request/reply types, an OpenAI-compatible HTTP
//! backend, scripted and replay backends, and the step-reply grammar.

mod http;
mod scripted;
mod step;
pub mod stub;

use serde::{Deserialize, Serialize};

use crate::oracles::TaskType;

pub use http::{HttpConfig, HttpReasoner, Rasterizer};
pub use scripted::{JournalRecord, RecordingReasoner, ReplayReasoner, ScriptKey, ScriptedReasoner};
pub use step::{parse_step_reply, render_action, ParsedStep};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Sampling {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
}

impl Default for Sampling {
    fn default() -> Self {
        Self { temperature: 0.01, top_p: 0.9, max_tokens: 2048 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImagePayload {
    pub media_type: String,
    pub data: Vec<u8>,
}

impl ImagePayload {
    pub fn svg(data: Vec<u8>) -> Self {
        Self { media_type: "image/svg+xml".into(), data }
    }
}

/// Which call of a session a request belongs to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Parse,
    Step(usize),
    Summarize,
    #[default]
    TextAnswer,
}

/// Routing information carried alongside the prompt; not sent to providers.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestMeta {
    pub tag: Option<String>,
    pub task_type: Option<TaskType>,
    pub slot: Slot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReasonerRequest {
    pub system_prompt: String,
    pub user_prompt: String,
    pub images: Vec<ImagePayload>,
    pub sampling: Sampling,
    pub meta: RequestMeta,
}

impl ReasonerRequest {
    pub fn new(system: impl Into<String>, user: impl Into<String>) -> Self {
        Self {
            system_prompt: system.into(),
            user_prompt: user.into(),
            images: vec![],
            sampling: Sampling::default(),
            meta: RequestMeta::default(),
        }
    }

    pub fn with_meta(mut self, meta: RequestMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn with_image(mut self, image: ImagePayload) -> Self {
        self.images.push(image);
        self
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.sampling.max_tokens < 1 {
            return Err(LlmError::Config("max_tokens must be at least 1".into()));
        }
        if !(self.sampling.temperature >= 0.0) {
            return Err(LlmError::Config("temperature must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasonerReply {
    pub text: String,
    /// Present only when the reply carried a well-formed action line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structured: Option<ParsedStep>,
    #[serde(default)]
    pub usage: Usage,
}

impl ReasonerReply {
    /// Wraps raw text, filling `structured` from the step grammar.
    pub fn from_text(text: impl Into<String>, usage: Usage) -> Self {
        let text = text.into();
        let structured = step::parse_structured(&text);
        Self { text, structured, usage }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("provider returned status {status}: {body}")]
    Provider { status: u16, body: String },
    #[error("request timed out after {0} ms")]
    Timeout(u64),
    #[error("reasoner misconfigured: {0}")]
    Config(String),
    #[error("no scripted reply for {0}")]
    Script(String),
    #[error("journal error: {0}")]
    Journal(String),
}

impl LlmError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, LlmError::Transport(_))
    }
}

pub trait Reasoner: Send + Sync {
    fn complete(&self, req: &ReasonerRequest) -> Result<ReasonerReply, LlmError>;
}

impl<R: Reasoner + ?Sized> Reasoner for &R {
    fn complete(&self, req: &ReasonerRequest) -> Result<ReasonerReply, LlmError> {
        (**self).complete(req)
    }
}

impl<R: Reasoner + ?Sized> Reasoner for Box<R> {
    fn complete(&self, req: &ReasonerRequest) -> Result<ReasonerReply, LlmError> {
        (**self).complete(req)
    }
}

impl<R: Reasoner + ?Sized> Reasoner for std::sync::Arc<R> {
    fn complete(&self, req: &ReasonerRequest) -> Result<ReasonerReply, LlmError> {
        (**self).complete(req)
    }
}

/// Rough token estimate used by offline backends.
pub fn estimate_tokens(text: &str) -> u64 {
    text.chars().count().div_ceil(4) as u64
}

/// First balanced `{...}` object in `text`, honouring JSON string escapes.
pub fn extract_json_object(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let bytes = text.as_bytes();
    let (mut depth, mut in_str, mut esc) = (0usize, false, false);
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_str {
            match b {
                _ if esc => esc = false,
                b'\\' => esc = true,
                b'"' => in_str = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_str = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..=i]);
                }
            }
            _ => {}
        }
    }
    None
}
