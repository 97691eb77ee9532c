//! Chat-LLM access with a hard constrained-choice contract, free-text
//! generation with stop sequences, retry/backoff, a full prompt/response
//! audit transcript, and a scripted offline backend for tests and demos.

use std::collections::HashSet;
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("llm backend unreachable after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("constrained choice requires at least one option")]
    EmptyOptions,
    #[error("constrained choice options not distinct after normalization: `{0}`")]
    DuplicateOption(String),
    #[error("empty generation after {attempts} attempts")]
    EmptyGeneration { attempts: u32 },
    #[error("scripted backend exhausted at call {call_index} (prompt digest {prompt_digest})")]
    ScriptExhausted {
        call_index: usize,
        prompt_digest: String,
    },
    #[error("scripted backend has no entry matching call {call_index} (prompt digest {prompt_digest})")]
    ScriptUnmatched {
        call_index: usize,
        prompt_digest: String,
    },
    #[error("script parse error: {0}")]
    ScriptParse(String),
    #[error("replay mismatch at call {call_index}: expected digest {expected}, got {got}")]
    ReplayMismatch {
        call_index: usize,
        expected: String,
        got: String,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", content = "text", rename_all = "snake_case")]
pub enum Turn {
    User(String),
    /// Text the assistant is assumed to have already produced; the backend
    /// continues from it.
    AssistantPrefix(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system: String,
    pub turns: Vec<Turn>,
    pub stop: Option<String>,
    pub max_tokens: u32,
    pub temperature: f64,
}

impl ChatRequest {
    pub fn new(system: impl Into<String>, user: impl Into<String>) -> Self {
        let system = system.into();
        debug_assert!(!system.trim().is_empty(), "system prompt must be non-empty");
        ChatRequest {
            system,
            turns: vec![Turn::User(user.into())],
            stop: None,
            max_tokens: 256,
            temperature: 0.0,
        }
    }

    pub fn with_assistant_prefix(mut self, prefix: impl Into<String>) -> Self {
        self.turns.push(Turn::AssistantPrefix(prefix.into()));
        self
    }

    pub fn with_stop(mut self, stop: impl Into<String>) -> Self {
        self.stop = Some(stop.into());
        self
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    /// The full rendered text a scripted backend matches against.
    pub fn rendered(&self) -> String {
        let mut out = self.system.clone();
        for turn in &self.turns {
            out.push('\n');
            match turn {
                Turn::User(t) => out.push_str(t),
                Turn::AssistantPrefix(t) => out.push_str(t),
            }
        }
        out
    }

    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("request serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        crate::embedding::hex(&hasher.finalize())
    }
}

/// Normalization applied before option matching: case-fold + trim.
pub fn normalize_option(text: &str) -> String {
    text.trim().to_lowercase()
}

#[derive(Debug, Clone)]
pub struct ConstrainedChoice {
    options: Vec<String>,
}

impl ConstrainedChoice {
    pub fn new(options: Vec<String>) -> Result<Self, LlmError> {
        if options.is_empty() {
            return Err(LlmError::EmptyOptions);
        }
        let mut seen = HashSet::new();
        for option in &options {
            let norm = normalize_option(option);
            if norm.is_empty() {
                return Err(LlmError::DuplicateOption(option.clone()));
            }
            if !seen.insert(norm) {
                return Err(LlmError::DuplicateOption(option.clone()));
            }
        }
        Ok(ConstrainedChoice { options })
    }

    pub fn options(&self) -> &[String] {
        &self.options
    }
}

/// How a constrained choice was resolved, or how a generation terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    NativeConstrained,
    ExactMatch,
    PrefixMatch,
    TokenOverlapFallback,
    Generated,
    /// Stop sequence never appeared; the full output was kept.
    GeneratedNoStop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallKind {
    Choose,
    Generate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub index: usize,
    pub kind: CallKind,
    pub prompt_digest: String,
    /// Full request, stored the first time a digest appears; repeats are
    /// deduplicated by digest.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub request: Option<ChatRequest>,
    pub raw_response: String,
    pub resolved: String,
    pub resolution: Resolution,
    pub attempts: u32,
    pub latency_ms: u64,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&serde_json::to_string(entry).expect("entry serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let mut entries = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            entries.push(serde_json::from_str(line)?);
        }
        Ok(Transcript { entries })
    }
}

/// A chat backend. `complete_constrained` returns `None` when the endpoint
/// has no native grammar/logit restriction, which sends the gateway down its
/// matching ladder.
pub trait LlmBackend: Send + Sync {
    fn name(&self) -> String;

    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError>;

    fn complete_constrained(
        &self,
        request: &ChatRequest,
        options: &[String],
    ) -> Option<Result<String, LlmError>> {
        let _ = (request, options);
        None
    }
}

// ---------------------------------------------------------------------------
// Scripted backend
// ---------------------------------------------------------------------------

/// One script entry: a reusable substring route, an all-of route, a
/// position trigger (1-based call index), or a bare sequential response.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substring: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substrings: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
    pub response: String,
}

struct ScriptState {
    call_index: usize,
    next_bare: usize,
}

/// Fully deterministic backend driven by an ordered entry list. Substring
/// and all-of routes are reusable; bare entries are consumed in order when
/// no route matches.
pub struct ScriptedBackend {
    entries: Vec<ScriptEntry>,
    bare_order: Vec<usize>,
    state: Mutex<ScriptState>,
}

impl ScriptedBackend {
    pub fn new(entries: Vec<ScriptEntry>) -> Self {
        let bare_order = entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.substring.is_none() && e.substrings.is_none() && e.position.is_none())
            .map(|(i, _)| i)
            .collect();
        ScriptedBackend {
            entries,
            bare_order,
            state: Mutex::new(ScriptState {
                call_index: 0,
                next_bare: 0,
            }),
        }
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, LlmError> {
        let entries: Vec<ScriptEntry> =
            serde_json::from_str(text).map_err(|e| LlmError::ScriptParse(e.to_string()))?;
        Ok(Self::new(entries))
    }
}

impl LlmBackend for ScriptedBackend {
    fn name(&self) -> String {
        "scripted".to_string()
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let prompt = request.rendered();
        let mut state = self.state.lock().expect("script state lock");
        state.call_index += 1;
        let call_index = state.call_index;

        for entry in &self.entries {
            let matched = if let Some(s) = &entry.substring {
                prompt.contains(s.as_str())
            } else if let Some(ss) = &entry.substrings {
                ss.iter().all(|s| prompt.contains(s.as_str()))
            } else if let Some(p) = entry.position {
                p == call_index
            } else {
                continue;
            };
            if matched {
                return Ok(entry.response.clone());
            }
        }
        if state.next_bare < self.bare_order.len() {
            let idx = self.bare_order[state.next_bare];
            state.next_bare += 1;
            return Ok(self.entries[idx].response.clone());
        }
        if !self.bare_order.is_empty() {
            Err(LlmError::ScriptExhausted {
                call_index,
                prompt_digest: request.digest(),
            })
        } else {
            Err(LlmError::ScriptUnmatched {
                call_index,
                prompt_digest: request.digest(),
            })
        }
    }
}

/// Backend that replays a recorded transcript: raw responses are returned in
/// order, with each call's digest checked against the recording.
pub struct ReplayBackend {
    responses: Mutex<std::collections::VecDeque<(String, String)>>,
}

impl ReplayBackend {
    pub fn new(transcript: &Transcript) -> Self {
        let responses = transcript
            .entries
            .iter()
            .map(|e| (e.prompt_digest.clone(), e.raw_response.clone()))
            .collect();
        ReplayBackend {
            responses: Mutex::new(responses),
        }
    }
}

impl LlmBackend for ReplayBackend {
    fn name(&self) -> String {
        "replay".to_string()
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let mut responses = self.responses.lock().expect("replay lock");
        let call_index = usize::MAX - responses.len();
        match responses.pop_front() {
            None => Err(LlmError::ScriptExhausted {
                call_index,
                prompt_digest: request.digest(),
            }),
            Some((digest, raw)) => {
                let got = request.digest();
                if digest != got {
                    return Err(LlmError::ReplayMismatch {
                        call_index,
                        expected: digest,
                        got,
                    });
                }
                Ok(raw)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// HTTP chat-completions backend
// ---------------------------------------------------------------------------

/// Remote backend speaking the chat-completions wire shape:
/// `POST {model, messages, temperature, max_tokens, stop}`.
pub struct HttpBackend {
    pub url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
}

impl HttpBackend {
    /// Configure from `TAXOFORGE_LLM_URL`, `TAXOFORGE_LLM_MODEL`,
    /// `TAXOFORGE_LLM_KEY`.
    pub fn from_env() -> Option<Self> {
        Some(HttpBackend {
            url: std::env::var("TAXOFORGE_LLM_URL").ok()?,
            model: std::env::var("TAXOFORGE_LLM_MODEL").ok()?,
            api_key: std::env::var("TAXOFORGE_LLM_KEY").ok(),
            max_retries: 3,
            backoff_base_ms: 500,
        })
    }
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    content: String,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

impl LlmBackend for HttpBackend {
    fn name(&self) -> String {
        format!("http:{}", self.model)
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let mut messages = vec![serde_json::json!({
            "role": "system",
            "content": request.system,
        })];
        for turn in &request.turns {
            messages.push(match turn {
                Turn::User(t) => serde_json::json!({"role": "user", "content": t}),
                Turn::AssistantPrefix(t) => {
                    serde_json::json!({"role": "assistant", "content": t})
                }
            });
        }
        let mut body = serde_json::json!({
            "model": self.model,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        if let Some(stop) = &request.stop {
            body["stop"] = serde_json::json!([stop]);
        }
        let mut last_err = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                std::thread::sleep(std::time::Duration::from_millis(
                    self.backoff_base_ms << (attempt - 1),
                ));
            }
            let mut req = ureq::post(&self.url).set("content-type", "application/json");
            if let Some(key) = &self.api_key {
                req = req.set("authorization", &format!("Bearer {key}"));
            }
            match req.send_json(body.clone()) {
                Ok(resp) => {
                    let parsed: ChatResponse = resp.into_json().map_err(|e| {
                        LlmError::Transport {
                            attempts: attempt + 1,
                            message: format!("bad response body: {e}"),
                        }
                    })?;
                    return parsed
                        .choices
                        .into_iter()
                        .next()
                        .map(|c| c.message.content)
                        .ok_or_else(|| LlmError::Transport {
                            attempts: attempt + 1,
                            message: "response had no choices".to_string(),
                        });
                }
                Err(ureq::Error::Status(code, _)) if code >= 500 => {
                    last_err = format!("server status {code}");
                }
                Err(ureq::Error::Status(code, resp)) => {
                    return Err(LlmError::Transport {
                        attempts: attempt + 1,
                        message: format!(
                            "status {code}: {}",
                            resp.into_string().unwrap_or_default()
                        ),
                    });
                }
                Err(e) => last_err = e.to_string(),
            }
        }
        Err(LlmError::Transport {
            attempts: self.max_retries + 1,
            message: last_err,
        })
    }
}

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

/// Uniform gateway in front of a backend. Every call appends exactly one
/// transcript entry; `choose` never returns text outside its option set.
pub struct LlmGateway {
    backend: Box<dyn LlmBackend>,
    transcript: Mutex<Transcript>,
    seen_digests: Mutex<HashSet<String>>,
    pub retries: u32,
    pub backoff_base_ms: u64,
}

impl LlmGateway {
    pub fn new(backend: Box<dyn LlmBackend>) -> Self {
        LlmGateway {
            backend,
            transcript: Mutex::new(Transcript::default()),
            seen_digests: Mutex::new(HashSet::new()),
            retries: 3,
            backoff_base_ms: 500,
        }
    }

    pub fn backend_name(&self) -> String {
        self.backend.name()
    }

    pub fn transcript(&self) -> Transcript {
        self.transcript.lock().expect("transcript lock").clone()
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &self,
        kind: CallKind,
        request: &ChatRequest,
        raw: String,
        resolved: String,
        resolution: Resolution,
        attempts: u32,
        started: Instant,
    ) {
        let digest = request.digest();
        let first_time = self
            .seen_digests
            .lock()
            .expect("digest lock")
            .insert(digest.clone());
        let mut transcript = self.transcript.lock().expect("transcript lock");
        let index = transcript.entries.len();
        transcript.entries.push(TranscriptEntry {
            index,
            kind,
            prompt_digest: digest,
            request: first_time.then(|| request.clone()),
            raw_response: raw,
            resolved,
            resolution,
            attempts,
            latency_ms: started.elapsed().as_millis() as u64,
        });
    }

    fn call_backend(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.backend.complete(request) {
                Ok(raw) => return Ok(raw),
                Err(LlmError::Transport { message, .. }) if attempts <= self.retries => {
                    std::thread::sleep(std::time::Duration::from_millis(
                        self.backoff_base_ms << (attempts - 1),
                    ));
                    let _ = message;
                }
                Err(LlmError::Transport { message, .. }) => {
                    return Err(LlmError::Transport { attempts, message })
                }
                Err(other) => return Err(other),
            }
        }
    }

    /// Resolve a raw output against the option set: exact normalized match,
    /// then longest option-prefix match.
    fn match_options<'a>(raw: &str, choice: &'a ConstrainedChoice) -> Option<(&'a str, Resolution)> {
        let norm_raw = normalize_option(raw);
        for option in choice.options() {
            if norm_raw == normalize_option(option) {
                return Some((option, Resolution::ExactMatch));
            }
        }
        let mut best: Option<&str> = None;
        for option in choice.options() {
            let norm_opt = normalize_option(option);
            if norm_raw.starts_with(&norm_opt) {
                match best {
                    Some(b) if normalize_option(b).len() >= norm_opt.len() => {}
                    _ => best = Some(option),
                }
            }
        }
        best.map(|b| (b, Resolution::PrefixMatch))
    }

    fn token_overlap_fallback<'a>(raw: &str, choice: &'a ConstrainedChoice) -> &'a str {
        let raw_tokens: HashSet<String> = tokenize_simple(raw);
        let mut best = &choice.options()[0];
        let mut best_overlap = 0usize;
        for option in choice.options() {
            let overlap = tokenize_simple(option)
                .iter()
                .filter(|t| raw_tokens.contains(*t))
                .count();
            if overlap > best_overlap {
                best_overlap = overlap;
                best = option;
            }
        }
        best
    }

    /// Ask the backend to pick one of `choice.options()`. The returned text
    /// is always exactly one of the options; the resolution rung lands in
    /// the transcript.
    pub fn choose(
        &self,
        request: &ChatRequest,
        choice: &ConstrainedChoice,
    ) -> Result<String, LlmError> {
        let started = Instant::now();
        if let Some(native) = self
            .backend
            .complete_constrained(request, choice.options())
        {
            let raw = native?;
            // native constraints still get verified before trusting
            if let Some((option, _)) = Self::match_options(&raw, choice) {
                let resolved = option.to_string();
                self.record(
                    CallKind::Choose,
                    request,
                    raw,
                    resolved.clone(),
                    Resolution::NativeConstrained,
                    1,
                    started,
                );
                return Ok(resolved);
            }
        }

        let mut attempts = 0u32;
        let mut last_raw = String::new();
        let max_attempts = 1 + self.retries;
        while attempts < max_attempts {
            attempts += 1;
            let attempt_request = if attempts == 1 {
                request.clone()
            } else {
                // retries pin temperature to 0
                request.clone().with_temperature(0.0)
            };
            last_raw = self.call_backend(&attempt_request)?;
            if let Some((option, resolution)) = Self::match_options(&last_raw, choice) {
                let resolved = option.to_string();
                self.record(
                    CallKind::Choose,
                    request,
                    last_raw,
                    resolved.clone(),
                    resolution,
                    attempts,
                    started,
                );
                return Ok(resolved);
            }
        }
        let resolved = Self::token_overlap_fallback(&last_raw, choice).to_string();
        self.record(
            CallKind::Choose,
            request,
            last_raw,
            resolved.clone(),
            Resolution::TokenOverlapFallback,
            attempts,
            started,
        );
        Ok(resolved)
    }

    /// Free-text generation, truncated at the stop sequence and trimmed.
    /// Never returns an empty string.
    pub fn generate(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let started = Instant::now();
        let mut attempts = 0u32;
        let max_attempts = 1 + self.retries;
        while attempts < max_attempts {
            attempts += 1;
            let raw = self.call_backend(request)?;
            let (text, resolution) = match &request.stop {
                Some(stop) => match raw.find(stop.as_str()) {
                    Some(pos) => (raw[..pos].trim().to_string(), Resolution::Generated),
                    None => (raw.trim().to_string(), Resolution::GeneratedNoStop),
                },
                None => (raw.trim().to_string(), Resolution::Generated),
            };
            if !text.is_empty() {
                self.record(
                    CallKind::Generate,
                    request,
                    raw,
                    text.clone(),
                    resolution,
                    attempts,
                    started,
                );
                return Ok(text);
            }
        }
        Err(LlmError::EmptyGeneration { attempts })
    }
}

fn tokenize_simple(text: &str) -> HashSet<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}
