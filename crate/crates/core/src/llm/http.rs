use std::sync::Arc;
use std::time::Duration;

use base64::Engine as _;
use serde_json::{json, Value};

use super::{ImagePayload, LlmError, Reasoner, ReasonerReply, ReasonerRequest, Usage};

/// Converts an SVG payload into something the provider accepts (e.g. PNG).
pub type Rasterizer = Arc<dyn Fn(&ImagePayload) -> Result<ImagePayload, String> + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    /// Full chat-completions URL, or a base URL to which `/chat/completions` is appended.
    pub url: String,
    pub api_key: Option<String>,
    pub model: String,
    pub timeout: Duration,
    pub connect_timeout: Duration,
    /// Retries after connection failures only.
    pub max_retries: u32,
    pub backoff: Duration,
    pub accepts_svg: bool,
    pub max_idle_connections: usize,
}

impl HttpConfig {
    pub fn new(url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            api_key: None,
            model: model.into(),
            timeout: Duration::from_secs(120),
            connect_timeout: Duration::from_secs(10),
            max_retries: 3,
            backoff: Duration::from_millis(250),
            accepts_svg: true,
            max_idle_connections: 8,
        }
    }

    /// Reads `REASONER_URL`, `REASONER_API_KEY` and `REASONER_MODEL`.
    pub fn from_env() -> Result<Self, LlmError> {
        let url = std::env::var("REASONER_URL").map_err(|_| LlmError::Config("REASONER_URL is not set".into()))?;
        let model = std::env::var("REASONER_MODEL").unwrap_or_else(|_| "default".into());
        let mut cfg = Self::new(url, model);
        cfg.api_key = std::env::var("REASONER_API_KEY").ok().filter(|k| !k.is_empty());
        Ok(cfg)
    }

    pub fn endpoint(&self) -> String {
        if self.url.contains("/chat/completions") {
            self.url.clone()
        } else {
            format!("{}/chat/completions", self.url.trim_end_matches('/'))
        }
    }
}

/// OpenAI-compatible chat-completions backend.
pub struct HttpReasoner {
    cfg: HttpConfig,
    client: reqwest::blocking::Client,
    rasterizer: Option<Rasterizer>,
}

impl HttpReasoner {
    pub fn new(cfg: HttpConfig) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(cfg.timeout)
            .connect_timeout(cfg.connect_timeout)
            .pool_max_idle_per_host(cfg.max_idle_connections)
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(Self { cfg, client, rasterizer: None })
    }

    pub fn with_rasterizer(mut self, r: Rasterizer) -> Self {
        self.rasterizer = Some(r);
        self
    }

    pub fn config(&self) -> &HttpConfig {
        &self.cfg
    }

    fn image_part(&self, img: &ImagePayload) -> Result<Value, LlmError> {
        let img = if img.media_type == "image/svg+xml" && !self.cfg.accepts_svg {
            let r = self.rasterizer.as_ref().ok_or_else(|| {
                LlmError::Config("provider does not accept SVG and no rasterizer is configured".into())
            })?;
            r(img).map_err(LlmError::Config)?
        } else {
            img.clone()
        };
        let data = base64::engine::general_purpose::STANDARD.encode(&img.data);
        Ok(json!({"type": "image_url", "image_url": {"url": format!("data:{};base64,{data}", img.media_type)}}))
    }

    /// Request body in the chat-completions wire shape.
    pub fn payload(&self, req: &ReasonerRequest) -> Result<Value, LlmError> {
        let mut content = vec![json!({"type": "text", "text": req.user_prompt})];
        for img in &req.images {
            content.push(self.image_part(img)?);
        }
        Ok(json!({
            "model": self.cfg.model,
            "messages": [
                {"role": "system", "content": req.system_prompt},
                {"role": "user", "content": content},
            ],
            "temperature": req.sampling.temperature,
            "top_p": req.sampling.top_p,
            "max_tokens": req.sampling.max_tokens,
        }))
    }

    fn send_once(&self, body: &Value) -> Result<ReasonerReply, LlmError> {
        let mut rb = self.client.post(self.cfg.endpoint()).json(body);
        if let Some(key) = &self.cfg.api_key {
            rb = rb.bearer_auth(key);
        }
        let resp = rb.send().map_err(|e| self.classify(e))?;
        let status = resp.status().as_u16();
        let text = resp.text().map_err(|e| self.classify(e))?;
        if status != 200 {
            return Err(LlmError::Provider { status, body: text });
        }
        parse_completion(&text).ok_or(LlmError::Provider { status, body: format!("malformed response: {text}") })
    }

    fn classify(&self, e: reqwest::Error) -> LlmError {
        if e.is_timeout() {
            LlmError::Timeout(self.cfg.timeout.as_millis() as u64)
        } else if e.is_connect() {
            LlmError::Transport(e.to_string())
        } else {
            // the request may have reached the provider; not safe to resend
            LlmError::Provider { status: 0, body: e.to_string() }
        }
    }
}

fn parse_completion(text: &str) -> Option<ReasonerReply> {
    let v: Value = serde_json::from_str(text).ok()?;
    let content = &v.get("choices")?.get(0)?.get("message")?.get("content")?;
    let text = match content {
        Value::String(s) => s.clone(),
        Value::Array(parts) => parts.iter().filter_map(|p| p.get("text")?.as_str()).collect::<Vec<_>>().join(""),
        _ => return None,
    };
    let usage = v
        .get("usage")
        .map(|u| Usage {
            prompt_tokens: u.get("prompt_tokens").and_then(Value::as_u64).unwrap_or(0),
            completion_tokens: u.get("completion_tokens").and_then(Value::as_u64).unwrap_or(0),
        })
        .unwrap_or_default();
    Some(ReasonerReply::from_text(text, usage))
}

impl Reasoner for HttpReasoner {
    fn complete(&self, req: &ReasonerRequest) -> Result<ReasonerReply, LlmError> {
        req.validate()?;
        let body = self.payload(req)?;
        let mut attempt = 0;
        loop {
            match self.send_once(&body) {
                Err(e) if e.is_retryable() && attempt < self.cfg.max_retries => {
                    let wait = self.cfg.backoff.saturating_mul(1 << attempt.min(6)).min(Duration::from_secs(5));
                    log::warn!("reasoner connection failed ({e}), retrying in {wait:?}");
                    std::thread::sleep(wait);
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}
