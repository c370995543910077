//! Uniform chat interface over model backends.
//!
//! Two backends exist: [`HttpModel`], a JSON-over-HTTP chat-completion client,
//! and [`ScriptedModel`], which replays canned responses for offline runs.
//! Both take the full conversation on every call; the server side is treated
//! as stateless.

mod http;
mod limiter;
mod scripted;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{HttpModel, ModelHandle, RequestParams, RetryPolicy};
pub use limiter::{EndpointLimiter, Permit, Semaphore};
pub use scripted::{ScriptBook, ScriptedModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GatewayError {
    #[error("{model_id}: invalid history: {reason}")]
    InvalidHistory { model_id: String, reason: &'static str },
    #[error("script exhausted")]
    ScriptExhausted,
    #[error("{model_id}: credential variable {var} is not set")]
    MissingCredential { model_id: String, var: String },
    #[error("{model_id} (attempt {attempt}): transport failure: {detail}")]
    Transport { model_id: String, attempt: u32, detail: String },
    #[error("{model_id} (attempt {attempt}): request timed out")]
    Timeout { model_id: String, attempt: u32 },
    #[error("{model_id} (attempt {attempt}): HTTP status {status}: {body}")]
    Status { model_id: String, attempt: u32, status: u16, body: String },
    #[error("{model_id} (attempt {attempt}): malformed response: {detail}")]
    MalformedResponse { model_id: String, attempt: u32, detail: String },
}

impl GatewayError {
    /// Client errors other than 408 and 429 will not improve on retry.
    pub fn is_retryable(&self) -> bool {
        match self {
            GatewayError::Transport { .. } | GatewayError::Timeout { .. } | GatewayError::MalformedResponse { .. } => {
                true
            }
            GatewayError::Status { status, .. } => *status == 408 || *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

pub trait ChatModel: Send {
    fn model_id(&self) -> &str;

    /// Sends the whole history and returns one assistant message.
    fn complete(&mut self, history: &[ChatMessage]) -> Result<ChatMessage, GatewayError>;
}

pub(crate) fn validate_history(model_id: &str, history: &[ChatMessage]) -> Result<(), GatewayError> {
    let reason = match history.first() {
        None => "history is empty",
        Some(first) if first.role != Role::System => "first message must have role system",
        Some(_) => return Ok(()),
    };
    Err(GatewayError::InvalidHistory { model_id: model_id.to_string(), reason })
}
