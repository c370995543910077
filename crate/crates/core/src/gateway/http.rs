use std::error::Error as _;
use std::io;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use url::Url;

use super::limiter::{EndpointLimiter, Semaphore};
use super::{validate_history, ChatMessage, ChatModel, GatewayError};

pub const DEFAULT_TEMPERATURE: f64 = 0.2;
pub const DEFAULT_MAX_TOKENS: u32 = 4096;
pub const DEFAULT_TIMEOUT_S: u64 = 120;
pub const DEFAULT_MAX_CONCURRENT: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestParams {
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE
}
fn default_max_tokens() -> u32 {
    DEFAULT_MAX_TOKENS
}
fn default_timeout_s() -> u64 {
    DEFAULT_TIMEOUT_S
}

impl Default for RequestParams {
    fn default() -> Self {
        Self {
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
            timeout_s: DEFAULT_TIMEOUT_S,
            seed: None,
        }
    }
}

/// Exponential backoff: `base_delay_ms * 2^(attempt-1)`, capped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetryPolicy {
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_base_delay")]
    pub base_delay_ms: u64,
    #[serde(default = "default_max_delay")]
    pub max_delay_ms: u64,
}

fn default_retries() -> u32 {
    3
}
fn default_base_delay() -> u64 {
    500
}
fn default_max_delay() -> u64 {
    30_000
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_retries: default_retries(), base_delay_ms: default_base_delay(), max_delay_ms: default_max_delay() }
    }
}

impl RetryPolicy {
    pub fn delay_before_retry(&self, retry: u32) -> Duration {
        let factor = 1u64.checked_shl(retry.saturating_sub(1)).unwrap_or(u64::MAX);
        Duration::from_millis(self.base_delay_ms.saturating_mul(factor).min(self.max_delay_ms))
    }
}

/// Connection details for one chat-completion model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHandle {
    pub model_id: String,
    pub endpoint: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_ref: Option<String>,
    #[serde(default, flatten)]
    pub request_params: RequestParams,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default = "default_max_concurrent")]
    pub max_concurrent: usize,
}

fn default_max_concurrent() -> usize {
    DEFAULT_MAX_CONCURRENT
}

impl ModelHandle {
    pub fn new(model_id: impl Into<String>, endpoint: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            endpoint: endpoint.into(),
            auth_ref: None,
            request_params: RequestParams::default(),
            retry: RetryPolicy::default(),
            max_concurrent: DEFAULT_MAX_CONCURRENT,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let url = Url::parse(&self.endpoint)
            .map_err(|e| format!("{}: invalid endpoint {:?}: {e}", self.model_id, self.endpoint))?;
        if !matches!(url.scheme(), "http" | "https") {
            return Err(format!("{}: endpoint must be http or https", self.model_id));
        }
        if self.request_params.timeout_s == 0 {
            return Err(format!("{}: timeout_s must be positive", self.model_id));
        }
        Ok(())
    }

    /// Reads the credential named by `auth_ref`, if any.
    pub fn credential(&self) -> Result<Option<String>, GatewayError> {
        match &self.auth_ref {
            None => Ok(None),
            Some(var) => std::env::var(var)
                .map(Some)
                .map_err(|_| GatewayError::MissingCredential { model_id: self.model_id.clone(), var: var.clone() }),
        }
    }

    pub fn request_body(&self, history: &[ChatMessage]) -> Value {
        let mut body = json!({
            "model": self.model_id,
            "messages": history,
            "temperature": self.request_params.temperature,
            "max_tokens": self.request_params.max_tokens,
        });
        if let Some(seed) = self.request_params.seed {
            body["seed"] = json!(seed);
        }
        body
    }
}

/// Blocking chat-completion client.
pub struct HttpModel {
    handle: ModelHandle,
    token: Option<String>,
    agent: ureq::Agent,
    permits: Arc<Semaphore>,
}

impl HttpModel {
    pub fn new(handle: ModelHandle, limiter: &EndpointLimiter) -> Result<Self, GatewayError> {
        let token = handle.credential()?;
        let agent = ureq::AgentBuilder::new().timeout(Duration::from_secs(handle.request_params.timeout_s)).build();
        let permits = limiter.semaphore_for(&handle.endpoint, handle.max_concurrent);
        Ok(Self { handle, token, agent, permits })
    }

    pub fn handle(&self) -> &ModelHandle {
        &self.handle
    }

    fn attempt(&self, body: &Value, attempt: u32) -> Result<String, GatewayError> {
        let model_id = || self.handle.model_id.clone();
        let mut request = self.agent.post(&self.handle.endpoint).set("Content-Type", "application/json");
        if let Some(token) = &self.token {
            request = request.set("Authorization", &format!("Bearer {token}"));
        }
        let response = match request.send_json(body) {
            Ok(response) => response,
            Err(ureq::Error::Status(status, response)) => {
                let body = response.into_string().unwrap_or_default();
                return Err(GatewayError::Status { model_id: model_id(), attempt, status, body: truncate(&body, 500) });
            }
            Err(ureq::Error::Transport(transport)) => {
                if is_timeout(&transport) {
                    return Err(GatewayError::Timeout { model_id: model_id(), attempt });
                }
                return Err(GatewayError::Transport { model_id: model_id(), attempt, detail: transport.to_string() });
            }
        };
        let text = response.into_string().map_err(|e| {
            if e.kind() == io::ErrorKind::TimedOut || e.kind() == io::ErrorKind::WouldBlock {
                GatewayError::Timeout { model_id: model_id(), attempt }
            } else {
                GatewayError::Transport { model_id: model_id(), attempt, detail: e.to_string() }
            }
        })?;
        extract_content(&text).map_err(|detail| GatewayError::MalformedResponse {
            model_id: model_id(),
            attempt,
            detail,
        })
    }
}

impl ChatModel for HttpModel {
    fn model_id(&self) -> &str {
        &self.handle.model_id
    }

    fn complete(&mut self, history: &[ChatMessage]) -> Result<ChatMessage, GatewayError> {
        validate_history(&self.handle.model_id, history)?;
        let body = self.handle.request_body(history);
        let policy = &self.handle.retry;
        let mut attempt = 1;
        loop {
            let result = {
                let _permit = self.permits.acquire();
                self.attempt(&body, attempt)
            };
            match result {
                Ok(content) => return Ok(ChatMessage::assistant(content)),
                Err(err) if err.is_retryable() && attempt <= policy.max_retries => {
                    let delay = policy.delay_before_retry(attempt);
                    log::warn!("{err}; retrying in {delay:?}");
                    thread::sleep(delay);
                    attempt += 1;
                }
                Err(err) => return Err(err),
            }
        }
    }
}

/// Reads `choices[0].message.content` from a chat-completion response.
pub(crate) fn extract_content(body: &str) -> Result<String, String> {
    let value: Value = serde_json::from_str(body).map_err(|e| format!("response is not JSON: {e}"))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| format!("no choices[0].message.content in {}", truncate(body, 200)))
}

fn is_timeout(transport: &ureq::Transport) -> bool {
    let mut source = transport.source();
    while let Some(err) = source {
        if let Some(io_err) = err.downcast_ref::<io::Error>() {
            if matches!(io_err.kind(), io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock) {
                return true;
            }
        }
        source = err.source();
    }
    transport.to_string().contains("timed out")
}

fn truncate(text: &str, max_chars: usize) -> String {
    match text.char_indices().nth(max_chars) {
        Some((idx, _)) => format!("{}...", &text[..idx]),
        None => text.to_string(),
    }
}
