use std::collections::{BTreeMap, HashMap, VecDeque};
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{estimate_tokens, LlmError, Reasoner, ReasonerReply, ReasonerRequest, Slot, Usage};
use crate::oracles::TaskType;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ScriptKey {
    #[serde(default)]
    pub tag: Option<String>,
    #[serde(default)]
    pub task_type: Option<TaskType>,
    pub slot: Slot,
}

#[derive(Serialize, Deserialize)]
struct ScriptEntry {
    #[serde(flatten)]
    key: ScriptKey,
    reply: String,
}

/// Offline reasoner answering from fixed fixtures; never touches the network.
///
/// Lookup tries `(tag, task_type, slot)`, then `(tag, -, slot)`,
/// `(-, task_type, slot)` and `(-, -, slot)` before the optional fallback.
#[derive(Default)]
pub struct ScriptedReasoner {
    fixtures: BTreeMap<ScriptKey, String>,
    fallback: Option<Box<dyn Reasoner>>,
    calls: AtomicUsize,
}

impl ScriptedReasoner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: ScriptKey, reply: impl Into<String>) -> Self {
        self.insert(key, reply);
        self
    }

    pub fn insert(&mut self, key: ScriptKey, reply: impl Into<String>) {
        self.fixtures.insert(key, reply.into());
    }

    pub fn with_fallback(mut self, fallback: Box<dyn Reasoner>) -> Self {
        self.fallback = Some(fallback);
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn len(&self) -> usize {
        self.fixtures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixtures.is_empty()
    }

    pub fn to_json(&self) -> String {
        let entries: Vec<ScriptEntry> =
            self.fixtures.iter().map(|(k, v)| ScriptEntry { key: k.clone(), reply: v.clone() }).collect();
        serde_json::to_string_pretty(&entries).expect("fixtures serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, LlmError> {
        let entries: Vec<ScriptEntry> = serde_json::from_str(text).map_err(|e| LlmError::Config(e.to_string()))?;
        let mut s = Self::new();
        for e in entries {
            s.insert(e.key, e.reply);
        }
        Ok(s)
    }

    fn lookup(&self, req: &ReasonerRequest) -> Option<&String> {
        let m = &req.meta;
        let candidates = [
            (m.tag.clone(), m.task_type),
            (m.tag.clone(), None),
            (None, m.task_type),
            (None, None),
        ];
        candidates
            .into_iter()
            .find_map(|(tag, task_type)| self.fixtures.get(&ScriptKey { tag, task_type, slot: m.slot }))
    }
}

impl Reasoner for ScriptedReasoner {
    fn complete(&self, req: &ReasonerRequest) -> Result<ReasonerReply, LlmError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        req.validate()?;
        if let Some(text) = self.lookup(req) {
            let usage = Usage {
                prompt_tokens: estimate_tokens(&req.system_prompt) + estimate_tokens(&req.user_prompt),
                completion_tokens: estimate_tokens(text),
            };
            return Ok(ReasonerReply::from_text(text.clone(), usage));
        }
        match &self.fallback {
            Some(f) => f.complete(req),
            None => Err(LlmError::Script(format!("{:?}", req.meta))),
        }
    }
}

/// One request/reply exchange as written to a reasoner journal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalRecord {
    pub tag: Option<String>,
    pub task_type: Option<TaskType>,
    pub slot: Slot,
    pub system_prompt: String,
    pub user_prompt: String,
    pub image_hashes: Vec<String>,
    pub reply: ReasonerReply,
}

/// Passes requests through and journals every successful exchange.
pub struct RecordingReasoner<R> {
    inner: R,
    records: Mutex<Vec<JournalRecord>>,
    sink: Mutex<Option<Box<dyn Write + Send>>>,
}

impl<R: Reasoner> RecordingReasoner<R> {
    pub fn new(inner: R) -> Self {
        Self { inner, records: Mutex::new(vec![]), sink: Mutex::new(None) }
    }

    /// Also append each record as a JSON line to `sink`.
    pub fn with_sink(self, sink: Box<dyn Write + Send>) -> Self {
        *self.sink.lock().unwrap() = Some(sink);
        self
    }

    pub fn records(&self) -> Vec<JournalRecord> {
        self.records.lock().unwrap().clone()
    }

    pub fn into_inner(self) -> R {
        self.inner
    }
}

impl<R: Reasoner> Reasoner for RecordingReasoner<R> {
    fn complete(&self, req: &ReasonerRequest) -> Result<ReasonerReply, LlmError> {
        let reply = self.inner.complete(req)?;
        let rec = JournalRecord {
            tag: req.meta.tag.clone(),
            task_type: req.meta.task_type,
            slot: req.meta.slot,
            system_prompt: req.system_prompt.clone(),
            user_prompt: req.user_prompt.clone(),
            image_hashes: req.images.iter().map(|i| hex::encode(Sha256::digest(&i.data))).collect(),
            reply: reply.clone(),
        };
        if let Some(sink) = self.sink.lock().unwrap().as_mut() {
            let line = serde_json::to_string(&rec).expect("record serializes");
            writeln!(sink, "{line}").map_err(|e| LlmError::Journal(e.to_string()))?;
        }
        self.records.lock().unwrap().push(rec);
        Ok(reply)
    }
}

type ReplyQueues = HashMap<(Option<String>, Slot), VecDeque<ReasonerReply>>;

/// Serves journaled replies back in their original order per `(tag, slot)`.
pub struct ReplayReasoner {
    queues: Mutex<ReplyQueues>,
}

impl ReplayReasoner {
    pub fn new(records: impl IntoIterator<Item = JournalRecord>) -> Self {
        let mut queues: ReplyQueues = HashMap::new();
        for r in records {
            queues.entry((r.tag, r.slot)).or_default().push_back(r.reply);
        }
        Self { queues: Mutex::new(queues) }
    }

    pub fn from_jsonl(text: &str) -> Result<Self, LlmError> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str::<JournalRecord>(l).map_err(|e| LlmError::Journal(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(records))
    }
}

impl Reasoner for ReplayReasoner {
    fn complete(&self, req: &ReasonerRequest) -> Result<ReasonerReply, LlmError> {
        let key = (req.meta.tag.clone(), req.meta.slot);
        self.queues
            .lock()
            .unwrap()
            .get_mut(&key)
            .and_then(VecDeque::pop_front)
            .ok_or_else(|| LlmError::Script(format!("journal has no reply left for {key:?}")))
    }
}
