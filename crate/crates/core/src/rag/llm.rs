use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::prompts::{input_section, template_name};
use super::tokens::{TokenCounter, WhitespaceCounter};

#[derive(Debug, Clone, Error, PartialEq, Serialize, Deserialize)]
pub enum LlmError {
    #[error("request failed: {0}")]
    Request(String),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response: {0}")]
    Protocol(String),
    #[error("{0}")]
    Injected(String),
}

/// A text completion backend.
pub trait LlmInterface: Send + Sync {
    fn complete(&self, prompt: &str, max_tokens: usize) -> Result<String, LlmError>;
    /// Maximum prompt size in tokens.
    fn context_window(&self) -> usize;
}

impl<T: LlmInterface + ?Sized> LlmInterface for Box<T> {
    fn complete(&self, prompt: &str, max_tokens: usize) -> Result<String, LlmError> {
        (**self).complete(prompt, max_tokens)
    }
    fn context_window(&self) -> usize {
        (**self).context_window()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MockMode {
    /// The prompt's input section, unchanged.
    EchoInput,
    /// The whole prompt.
    EchoPrompt,
    /// The first `max_tokens` words of the input section.
    Extractive,
}

/// Deterministic stand-in for a real model.
#[derive(Debug, Clone)]
pub struct MockLlm {
    pub mode: MockMode,
    pub window: usize,
}

impl MockLlm {
    pub fn new(mode: MockMode, window: usize) -> Self {
        MockLlm { mode, window }
    }

    pub fn extractive(window: usize) -> Self {
        MockLlm::new(MockMode::Extractive, window)
    }
}

impl LlmInterface for MockLlm {
    fn complete(&self, prompt: &str, max_tokens: usize) -> Result<String, LlmError> {
        Ok(match self.mode {
            MockMode::EchoInput => input_section(prompt).to_string(),
            MockMode::EchoPrompt => prompt.to_string(),
            MockMode::Extractive => {
                let input = input_section(prompt);
                let end = WhitespaceCounter.split_after(input, max_tokens);
                input[..end].trim_end().to_string()
            }
        })
    }

    fn context_window(&self) -> usize {
        self.window
    }
}

/// Looks the input section up in a table; unknown inputs fall through to
/// `fallback`.
pub struct CannedLlm<F: LlmInterface> {
    pub answers: BTreeMap<String, String>,
    pub fallback: F,
}

impl<F: LlmInterface> LlmInterface for CannedLlm<F> {
    fn complete(&self, prompt: &str, max_tokens: usize) -> Result<String, LlmError> {
        match self.answers.get(input_section(prompt)) {
            Some(a) => Ok(a.clone()),
            None => self.fallback.complete(prompt, max_tokens),
        }
    }

    fn context_window(&self) -> usize {
        self.fallback.context_window()
    }
}

/// Fails every prompt rendered from the named template.
pub struct FailingLlm<F: LlmInterface> {
    pub template: String,
    pub inner: F,
}

impl<F: LlmInterface> LlmInterface for FailingLlm<F> {
    fn complete(&self, prompt: &str, max_tokens: usize) -> Result<String, LlmError> {
        if template_name(prompt) == Some(self.template.as_str()) {
            return Err(LlmError::Injected(format!("injected failure for {}", self.template)));
        }
        self.inner.complete(prompt, max_tokens)
    }

    fn context_window(&self) -> usize {
        self.inner.context_window()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpLlmConfig {
    /// Chat-completions URL, e.g. `http://localhost:8000/v1/chat/completions`.
    pub endpoint: String,
    pub model: String,
    pub context_window: usize,
    #[serde(default)]
    pub api_key: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_timeout() -> u64 {
    120
}

/// OpenAI-style chat-completions client with greedy decoding.
pub struct HttpLlm {
    config: HttpLlmConfig,
    agent: ureq::Agent,
}

impl HttpLlm {
    pub fn new(config: HttpLlmConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpLlm { config, agent }
    }
}

fn extract_text(v: &Value) -> Option<String> {
    let choice = v.get("choices")?.get(0)?;
    choice
        .pointer("/message/content")
        .or_else(|| choice.get("text"))
        .and_then(Value::as_str)
        .map(str::to_string)
}

impl LlmInterface for HttpLlm {
    fn complete(&self, prompt: &str, max_tokens: usize) -> Result<String, LlmError> {
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "max_tokens": max_tokens,
            "temperature": 0,
        });
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| LlmError::Request(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| LlmError::Request(e.to_string()))?;
        if status != 200 {
            return Err(LlmError::Status { status, body: text });
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| LlmError::Protocol(e.to_string()))?;
        extract_text(&v).ok_or_else(|| LlmError::Protocol("no completion text in response".into()))
    }

    fn context_window(&self) -> usize {
        self.config.context_window
    }
}
