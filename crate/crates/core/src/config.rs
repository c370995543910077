//! Run configuration loaded from a JSON file.
//!
//! Relative paths are resolved against the directory holding the config file.
//! The digest stamped into every record is the SHA-256 of the resolved config
//! serialized back to JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::FieldMap;
use crate::exec::{JavaToolchain, DEFAULT_BUDGET_S};
use crate::gateway::ModelHandle;
use crate::guidance::{Strategy, StrategyKind, DEFAULT_MAX_ITERATIONS};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Http(ModelHandle),
    /// Offline model replaying responses from a script book.
    Scripted {
        model_id: String,
        script: PathBuf,
    },
}

impl ModelSpec {
    pub fn model_id(&self) -> &str {
        match self {
            ModelSpec::Http(h) => &h.model_id,
            ModelSpec::Scripted { model_id, .. } => model_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecConfig {
    pub javac: PathBuf,
    pub java: PathBuf,
    pub budget_s: u64,
    /// Scratch root; defaults to `<output_dir>/<run_id>/scratch`.
    pub workdir: Option<PathBuf>,
    pub test_adaptation: bool,
    pub keep_scratch: bool,
    /// Concurrent compile-and-run jobs.
    pub workers: usize,
}

impl Default for ExecConfig {
    fn default() -> Self {
        let tc = JavaToolchain::default();
        Self {
            javac: tc.javac,
            java: tc.java,
            budget_s: DEFAULT_BUDGET_S,
            workdir: None,
            test_adaptation: false,
            keep_scratch: false,
            workers: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run_id: String,
    pub dataset_path: PathBuf,
    #[serde(default)]
    pub field_map: FieldMap,
    pub output_dir: PathBuf,
    pub models: Vec<ModelSpec>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<StrategyKind>,
    #[serde(default = "default_cap")]
    pub iteration_cap: u32,
    /// Replaces the shipped few-shot exemplars; exactly two files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exemplar_paths: Option<Vec<PathBuf>>,
    #[serde(default)]
    pub exec: ExecConfig,
    /// Concurrent (model, strategy) workers.
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_strategies() -> Vec<StrategyKind> {
    StrategyKind::ALL.to_vec()
}

fn default_cap() -> u32 {
    DEFAULT_MAX_ITERATIONS
}

fn default_parallelism() -> usize {
    4
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| ConfigError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        config.resolve_paths(&base);
        config.normalize()?;
        Ok(config)
    }

    /// Makes relative paths absolute against `base`. Tool names without a
    /// directory part (`javac`) are left for `PATH` lookup.
    pub fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.dataset_path);
        join(&mut self.output_dir);
        if let Some(paths) = &mut self.exemplar_paths {
            paths.iter_mut().for_each(join);
        }
        for tool in [&mut self.exec.javac, &mut self.exec.java] {
            if tool.components().count() > 1 {
                join(tool);
            }
        }
        if let Some(w) = &mut self.exec.workdir {
            join(w);
        }
        for model in &mut self.models {
            if let ModelSpec::Scripted { script, .. } = model {
                join(script);
            }
        }
    }

    /// Validates fields and puts strategies in canonical order with
    /// duplicates removed. Baseline is added when missing since every delta
    /// is taken against it.
    pub fn normalize(&mut self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.run_id.trim().is_empty() || crate::exec::sanitize(&self.run_id) != self.run_id {
            return invalid(format!("run_id {:?} must be non-empty and use only [A-Za-z0-9._-]", self.run_id));
        }
        if self.models.is_empty() {
            return invalid("no models configured".into());
        }
        let mut ids: Vec<&str> = self.models.iter().map(ModelSpec::model_id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return invalid(format!("duplicate model_id {:?}", w[0]));
        }
        for model in &self.models {
            if let ModelSpec::Http(h) = model {
                h.validate().map_err(|e| ConfigError::Invalid(format!("model {}: {e}", h.model_id)))?;
            }
        }
        if self.iteration_cap == 0 {
            return invalid("iteration_cap must be at least 1".into());
        }
        if self.exec.budget_s == 0 || self.exec.workers == 0 || self.parallelism == 0 {
            return invalid("exec.budget_s, exec.workers and parallelism must be at least 1".into());
        }
        if !self.strategies.contains(&StrategyKind::Baseline) {
            log::info!("adding baseline to the configured strategies");
            self.strategies.push(StrategyKind::Baseline);
        }
        self.strategies.sort();
        self.strategies.dedup();
        if let Some(paths) = &self.exemplar_paths {
            if paths.len() != 2 {
                return invalid(format!("exemplar_paths needs exactly 2 files, got {}", paths.len()));
            }
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(&self.run_id)
    }

    pub fn scratch_dir(&self) -> PathBuf {
        self.exec.workdir.clone().unwrap_or_else(|| self.run_dir().join("scratch"))
    }

    pub fn toolchain(&self) -> JavaToolchain {
        JavaToolchain { javac: self.exec.javac.clone(), java: self.exec.java.clone() }
    }

    /// Builds the strategies, reading exemplar files when configured.
    pub fn build_strategies(&self) -> Result<Vec<Strategy>, ConfigError> {
        let exemplars = match &self.exemplar_paths {
            None => None,
            Some(paths) => Some(
                paths
                    .iter()
                    .map(|p| std::fs::read_to_string(p).map_err(|source| ConfigError::Io { path: p.clone(), source }))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
        };
        self.strategies
            .iter()
            .map(|&kind| {
                Strategy::new(kind, self.iteration_cap, exemplars.clone())
                    .map_err(|e| ConfigError::Invalid(e.to_string()))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "run_id": "r1",
        "dataset_path": "data/tasks.jsonl",
        "output_dir": "out",
        "models": [
            {"kind": "scripted", "model_id": "mock", "script": "script.json"},
            {"kind": "http", "model_id": "llama", "endpoint": "http://localhost:8000/v1/chat/completions",
             "auth_ref": "LLAMA_KEY", "temperature": 0.0}
        ],
        "strategies": ["predicate_feedback", "instruct", "instruct"]
    }"#;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let mut c: RunConfig =
            serde_json::from_str(text).map_err(|e| ConfigError::Parse { path: "x".into(), message: e.to_string() })?;
        c.resolve_paths(Path::new("/cfg"));
        c.normalize()?;
        Ok(c)
    }

    #[test]
    fn defaults_and_resolution() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.dataset_path, Path::new("/cfg/data/tasks.jsonl"));
        assert_eq!(c.run_dir(), Path::new("/cfg/out/r1"));
        assert_eq!(c.scratch_dir(), Path::new("/cfg/out/r1/scratch"));
        assert_eq!(c.exec.javac, Path::new("javac"));
        assert_eq!(c.iteration_cap, 10);
        assert_eq!(c.strategies, [StrategyKind::Baseline, StrategyKind::Instruct, StrategyKind::PredicateFeedback]);
        match &c.models[1] {
            ModelSpec::Http(h) => {
                assert_eq!(h.request_params.temperature, 0.0);
                assert_eq!(h.auth_ref.as_deref(), Some("LLAMA_KEY"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(&c.models[0], ModelSpec::Scripted { script, .. } if script == Path::new("/cfg/script.json")));
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = parse(MINIMAL).unwrap();
        assert_eq!(a.digest(), parse(MINIMAL).unwrap().digest());
        let mut b = a.clone();
        b.iteration_cap = 3;
        assert_ne!(a.digest(), b.digest());
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(back.digest(), a.digest());
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = |from: &str, to: &str| parse(&MINIMAL.replace(from, to)).unwrap_err().to_string();
        assert!(bad("\"r1\"", "\"../x\"").contains("run_id"));
        assert!(bad("\"llama\"", "\"mock\"").contains("duplicate"));
        assert!(bad("http://localhost", "ftp://localhost").contains("llama"));
        assert!(bad("\"strategies\"", "\"iteration_cap\": 0, \"strategies\"").contains("iteration_cap"));
        assert!(bad("\"strategies\"", "\"bogus\": 1, \"strategies\"").contains("bogus"));
        assert!(bad("\"instruct\", \"instruct\"", "\"few_shot\"").contains("few_shot"));
    }

    #[test]
    fn custom_exemplars_are_checked() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("a.java");
        let bad = dir.path().join("b.java");
        std::fs::write(&good, crate::guidance::EAGER_EXEMPLAR).unwrap();
        std::fs::write(&bad, "class B { public B() {} }").unwrap();
        let mut c = parse(MINIMAL).unwrap();
        c.strategies.push(StrategyKind::FewshotFeedback);
        c.exemplar_paths = Some(vec![good.clone(), good.clone()]);
        assert_eq!(c.build_strategies().unwrap().len(), 4);
        c.exemplar_paths = Some(vec![good, bad]);
        assert!(c.build_strategies().unwrap_err().to_string().contains("exemplar 1"));
    }
}
