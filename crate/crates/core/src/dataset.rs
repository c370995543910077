//! HumanEval-X style task ingestion from line-delimited JSON.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::source::{parse_compilation_unit, select_primary_class};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub task_id: String,
    /// Natural-language problem plus declaration stub, sent verbatim.
    pub description: String,
    pub declaration: String,
    pub expected_class_name: String,
    pub test_code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example_test: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canonical_solution: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSet {
    pub tasks: Vec<Task>,
    /// Hex SHA-256 of the input file bytes.
    pub source_digest: String,
}

impl TaskSet {
    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn get(&self, task_id: &str) -> Option<&Task> {
        self.tasks.iter().find(|t| t.task_id == task_id)
    }
}

/// Record-field names used to read each task. Defaults are the HumanEval-X
/// names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldMap {
    pub task_id: String,
    pub description: String,
    pub declaration: String,
    pub test: String,
    pub example_test: Option<String>,
    pub canonical_solution: Option<String>,
    /// Field holding a language tag. When absent the prefix of the task id
    /// before `/` is used (`Java/0` -> `Java`).
    pub language: Option<String>,
}

impl Default for FieldMap {
    fn default() -> Self {
        Self {
            task_id: "task_id".into(),
            description: "prompt".into(),
            declaration: "declaration".into(),
            test: "test".into(),
            example_test: Some("example_test".into()),
            canonical_solution: Some("canonical_solution".into()),
            language: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: invalid JSON: {message}")]
    InvalidJson { line: usize, message: String },
    #[error("line {line}: expected a JSON object")]
    NotObject { line: usize },
    #[error("line {line}: missing or non-string field {field:?}")]
    MissingField { line: usize, field: String },
    #[error("line {line}: duplicate task id {task_id:?}")]
    DuplicateId { line: usize, task_id: String },
    #[error("line {line}: test code is empty")]
    EmptyTest { line: usize },
    #[error("line {line}: declaration of {task_id:?} contains no class")]
    NoClass { line: usize, task_id: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedTasks {
    pub task_set: TaskSet,
    pub warnings: Vec<String>,
}

pub fn load_tasks(path: &Path, field_map: &FieldMap) -> Result<LoadedTasks, DatasetError> {
    let bytes = std::fs::read(path).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })?;
    parse_tasks(&bytes, field_map)
}

pub fn parse_tasks(bytes: &[u8], field_map: &FieldMap) -> Result<LoadedTasks, DatasetError> {
    let source_digest = hex::encode(Sha256::digest(bytes));
    let text = String::from_utf8_lossy(bytes);
    let mut tasks = Vec::new();
    let mut warnings = Vec::new();
    let mut seen = HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(raw).map_err(|e| DatasetError::InvalidJson { line, message: e.to_string() })?;
        let Value::Object(obj) = value else {
            return Err(DatasetError::NotObject { line });
        };

        let task_id = required(&obj, &field_map.task_id, line)?;
        let language = match &field_map.language {
            Some(field) => optional(&obj, field),
            None => task_id.split_once('/').map(|(lang, _)| lang.to_string()),
        };
        if let Some(lang) = language {
            if !lang.eq_ignore_ascii_case("java") {
                warnings.push(format!("line {line}: skipping {task_id:?} with language {lang:?}"));
                continue;
            }
        }

        let description = required(&obj, &field_map.description, line)?;
        let declaration = required(&obj, &field_map.declaration, line)?;
        let test_code = required(&obj, &field_map.test, line)?;
        if test_code.trim().is_empty() {
            return Err(DatasetError::EmptyTest { line });
        }
        if !seen.insert(task_id.clone()) {
            return Err(DatasetError::DuplicateId { line, task_id });
        }
        let classes = parse_compilation_unit(&declaration);
        let Some(primary) = select_primary_class(&classes, None) else {
            return Err(DatasetError::NoClass { line, task_id });
        };

        tasks.push(Task {
            expected_class_name: primary.class_name.clone(),
            task_id,
            description,
            declaration,
            test_code,
            example_test: field_map.example_test.as_deref().and_then(|f| optional(&obj, f)),
            canonical_solution: field_map.canonical_solution.as_deref().and_then(|f| optional(&obj, f)),
        });
    }

    if tasks.is_empty() {
        warnings.push("dataset contains no tasks".to_string());
    }
    Ok(LoadedTasks { task_set: TaskSet { tasks, source_digest }, warnings })
}

fn required(obj: &Map<String, Value>, field: &str, line: usize) -> Result<String, DatasetError> {
    optional(obj, field).ok_or_else(|| DatasetError::MissingField { line, field: field.to_string() })
}

fn optional(obj: &Map<String, Value>, field: &str) -> Option<String> {
    obj.get(field).and_then(Value::as_str).map(str::to_string)
}
