//! Text-in/text-out LLM clients: a scripted mock and an HTTP chat-completion client.

use std::fs;
use std::path::Path;
use std::time::Duration;

use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("{0}")]
    Scripted(String),
    #[error("mock script has no entries")]
    EmptyScript,
    #[error("api key variable {0} is not set")]
    MissingKey(String),
    #[error("request failed: {0}")]
    Transport(String),
    #[error("endpoint answered {status}: {body}")]
    Http { status: u16, body: String },
    #[error("unexpected response shape: {0}")]
    BadResponse(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub trait LlmClient {
    fn complete(&mut self, prompt: &str) -> Result<String, LlmError>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptEntry {
    Response(String),
    Error(String),
}

/// Replays a fixed list of replies in order, wrapping around at the end.
///
/// Script format: entries start with a line `--- response` or `--- error <message>`; the lines
/// after a response marker, up to the next marker, are the reply. A file without markers is a
/// single response.
#[derive(Debug, Clone)]
pub struct MockLlm {
    entries: Vec<ScriptEntry>,
    next: usize,
    pub prompts: Vec<String>,
}

impl MockLlm {
    pub fn new(entries: Vec<ScriptEntry>) -> Result<Self, LlmError> {
        if entries.is_empty() {
            return Err(LlmError::EmptyScript);
        }
        Ok(Self { entries, next: 0, prompts: Vec::new() })
    }

    pub fn parse(text: &str) -> Result<Self, LlmError> {
        let mut entries = Vec::new();
        let mut body: Option<Vec<&str>> = None;
        let mut saw_marker = false;
        let flush = |body: &mut Option<Vec<&str>>, entries: &mut Vec<ScriptEntry>| {
            if let Some(lines) = body.take() {
                entries.push(ScriptEntry::Response(lines.join("\n").trim_matches('\n').to_string()));
            }
        };
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("--- ") {
                let rest = rest.trim();
                if rest == "response" {
                    flush(&mut body, &mut entries);
                    saw_marker = true;
                    body = Some(Vec::new());
                    continue;
                }
                if let Some(msg) = rest.strip_prefix("error") {
                    flush(&mut body, &mut entries);
                    saw_marker = true;
                    entries.push(ScriptEntry::Error(msg.trim().to_string()));
                    continue;
                }
            }
            if let Some(b) = body.as_mut() {
                b.push(line);
            }
        }
        flush(&mut body, &mut entries);
        if !saw_marker && !text.trim().is_empty() {
            entries.push(ScriptEntry::Response(text.trim_matches('\n').to_string()));
        }
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl LlmClient for MockLlm {
    fn complete(&mut self, prompt: &str) -> Result<String, LlmError> {
        self.prompts.push(prompt.to_string());
        let entry = &self.entries[self.next % self.entries.len()];
        self.next += 1;
        match entry {
            ScriptEntry::Response(r) => Ok(r.clone()),
            ScriptEntry::Error(e) => Err(LlmError::Scripted(e.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatConfig {
    /// Base URL; `/chat/completions` is appended.
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub timeout: Duration,
}

impl Default for ChatConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1".into(),
            model: "gpt-4o-2024-08-06".into(),
            temperature: 0.8,
            api_key_env: "OPENAI_API_KEY".into(),
            timeout: Duration::from_secs(300),
        }
    }
}

/// Chat-completion client: one user message in, `choices[0].message.content` out.
pub struct ChatClient {
    cfg: ChatConfig,
    key: String,
    agent: ureq::Agent,
}

impl ChatClient {
    pub fn new(cfg: ChatConfig) -> Result<Self, LlmError> {
        let key = std::env::var(&cfg.api_key_env).map_err(|_| LlmError::MissingKey(cfg.api_key_env.clone()))?;
        let agent = ureq::Agent::new_with_config(
            ureq::Agent::config_builder().timeout_global(Some(cfg.timeout)).http_status_as_error(false).build(),
        );
        Ok(Self { cfg, key, agent })
    }

    pub fn request_body(&self, prompt: &str) -> Value {
        chat_request(&self.cfg, prompt)
    }
}

pub fn chat_request(cfg: &ChatConfig, prompt: &str) -> Value {
    json!({
        "model": cfg.model,
        "temperature": cfg.temperature,
        "messages": [{ "role": "user", "content": prompt }],
    })
}

pub fn parse_chat_response(body: &str) -> Result<String, LlmError> {
    let v: Value = serde_json::from_str(body).map_err(|e| LlmError::BadResponse(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| LlmError::BadResponse(excerpt(body)))
}

fn excerpt(s: &str) -> String {
    s.chars().take(300).collect()
}

impl LlmClient for ChatClient {
    fn complete(&mut self, prompt: &str) -> Result<String, LlmError> {
        let url = format!("{}/chat/completions", self.cfg.endpoint.trim_end_matches('/'));
        let mut resp = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {}", self.key))
            .content_type("application/json")
            .send(self.request_body(prompt).to_string())
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(|e| LlmError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(LlmError::Http { status, body: excerpt(&body) });
        }
        parse_chat_response(&body)
    }
}
