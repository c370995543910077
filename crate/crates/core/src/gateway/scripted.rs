use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{validate_history, ChatMessage, ChatModel, GatewayError};

/// Replays a fixed list of assistant responses, one per call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptedModel {
    model_id: String,
    script: Vec<String>,
    cursor: usize,
}

impl ScriptedModel {
    pub fn new(model_id: impl Into<String>, script: Vec<String>) -> Self {
        Self { model_id: model_id.into(), script, cursor: 0 }
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn remaining(&self) -> usize {
        self.script.len() - self.cursor
    }
}

impl ChatModel for ScriptedModel {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn complete(&mut self, history: &[ChatMessage]) -> Result<ChatMessage, GatewayError> {
        validate_history(&self.model_id, history)?;
        let reply = self.script.get(self.cursor).ok_or(GatewayError::ScriptExhausted)?;
        self.cursor += 1;
        Ok(ChatMessage::assistant(reply.clone()))
    }
}

/// Script file for offline runs.
///
/// Responses are looked up per run, most specific first:
/// `strategies[strategy][task_id]`, then `tasks[task_id]`, then `default`.
/// Every run starts its own cursor at zero, so a resumed run sees exactly the
/// responses an uninterrupted one would.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptBook {
    #[serde(default)]
    pub default: Vec<String>,
    #[serde(default)]
    pub tasks: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub strategies: BTreeMap<String, BTreeMap<String, Vec<String>>>,
}

impl ScriptBook {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn responses_for(&self, strategy: &str, task_id: &str) -> &[String] {
        self.strategies
            .get(strategy)
            .and_then(|by_task| by_task.get(task_id))
            .or_else(|| self.tasks.get(task_id))
            .unwrap_or(&self.default)
    }

    pub fn model_for(&self, model_id: &str, strategy: &str, task_id: &str) -> ScriptedModel {
        ScriptedModel::new(model_id, self.responses_for(strategy, task_id).to_vec())
    }
}
