//! On-disk run store.
//!
//! ```text
//! <output_dir>/<run_id>/
//!     config.json                      resolved RunConfig snapshot
//!     records/<model>__<strategy>.jsonl one RunRecord per line, task order
//!     summary.json                     written after the run
//! ```
//!
//! Record files are append-only. A trailing line cut short by a crash is
//! dropped when the store is reopened.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::RunConfig;
use crate::exec::sanitize;
use crate::guidance::{RunRecord, StrategyKind};

pub const CONFIG_FILE: &str = "config.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const RECORDS_DIR: &str = "records";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: not a run store (missing {CONFIG_FILE})")]
    Missing { path: PathBuf },
    #[error("{path} line {line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error("{path}: store already exists; pass --resume to continue it")]
    Exists { path: PathBuf },
    #[error("{path}: stored config differs from the requested one")]
    ConfigMismatch { path: PathBuf },
    #[error("{path} line {line}: record digest {found} does not match config digest {expected}")]
    DigestMismatch { path: PathBuf, line: usize, found: String, expected: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

pub fn record_file_name(model_id: &str, strategy: StrategyKind) -> String {
    format!("{}__{}.jsonl", sanitize(model_id), strategy)
}

#[derive(Debug, Clone)]
pub struct RunStore {
    pub root: PathBuf,
    pub config: RunConfig,
}

impl RunStore {
    /// Creates the store for `config`, or reopens it when `resume` is set.
    /// Reopening requires the stored config to match exactly.
    pub fn open_for_run(config: &RunConfig, resume: bool) -> Result<Self, StoreError> {
        let root = config.run_dir();
        let config_path = root.join(CONFIG_FILE);
        if config_path.exists() {
            if !resume {
                return Err(StoreError::Exists { path: root });
            }
            let store = Self::open(&root)?;
            if store.config.digest() != config.digest() {
                return Err(StoreError::ConfigMismatch { path: config_path });
            }
            return Ok(store);
        }
        fs::create_dir_all(root.join(RECORDS_DIR)).map_err(io_err(&root))?;
        let json = serde_json::to_string_pretty(config).expect("config serializes");
        fs::write(&config_path, json + "\n").map_err(io_err(&config_path))?;
        Ok(Self { root, config: config.clone() })
    }

    /// Opens an existing store read-only.
    pub fn open(root: &Path) -> Result<Self, StoreError> {
        let config_path = root.join(CONFIG_FILE);
        if !config_path.is_file() {
            return Err(StoreError::Missing { path: root.to_path_buf() });
        }
        let text = fs::read_to_string(&config_path).map_err(io_err(&config_path))?;
        let config: RunConfig = serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
            path: config_path.clone(),
            line: e.line(),
            message: e.to_string(),
        })?;
        Ok(Self { root: root.to_path_buf(), config })
    }

    pub fn record_path(&self, model_id: &str, strategy: StrategyKind) -> PathBuf {
        self.root.join(RECORDS_DIR).join(record_file_name(model_id, strategy))
    }

    /// Reads one record file; a missing file is empty. With `repair`, a
    /// partial final line is truncated away on disk.
    pub fn read_records(
        &self,
        model_id: &str,
        strategy: StrategyKind,
        repair: bool,
    ) -> Result<Vec<RunRecord>, StoreError> {
        let path = self.record_path(model_id, strategy);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io_err(&path)(e)),
        };
        let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        if complete < bytes.len() {
            log::warn!("{}: dropping {} bytes of an unfinished record", path.display(), bytes.len() - complete);
            if repair {
                let f = OpenOptions::new().write(true).open(&path).map_err(io_err(&path))?;
                f.set_len(complete as u64).map_err(io_err(&path))?;
            }
        }
        let text = String::from_utf8_lossy(&bytes[..complete]);
        let expected = self.config.digest();
        let mut records = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: RunRecord = serde_json::from_str(line).map_err(|e| StoreError::Corrupt {
                path: path.clone(),
                line: idx + 1,
                message: e.to_string(),
            })?;
            if record.config_digest != expected {
                return Err(StoreError::DigestMismatch {
                    path: path.clone(),
                    line: idx + 1,
                    found: record.config_digest,
                    expected,
                });
            }
            records.push(record);
        }
        Ok(records)
    }

    /// All records keyed by (model, strategy), for every configured pair.
    pub fn all_records(&self) -> Result<BTreeMap<(String, StrategyKind), Vec<RunRecord>>, StoreError> {
        let mut out = BTreeMap::new();
        for model in &self.config.models {
            for &strategy in &self.config.strategies {
                let records = self.read_records(model.model_id(), strategy, false)?;
                if !records.is_empty() {
                    out.insert((model.model_id().to_string(), strategy), records);
                }
            }
        }
        Ok(out)
    }

    pub fn appender(&self, model_id: &str, strategy: StrategyKind) -> Result<RecordAppender, StoreError> {
        let path = self.record_path(model_id, strategy);
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(io_err(&path))?;
        Ok(RecordAppender { path, file })
    }

    pub fn write_summary(&self, json: &str) -> Result<(), StoreError> {
        let path = self.root.join(SUMMARY_FILE);
        fs::write(&path, json).map_err(io_err(&path))
    }
}

/// Appends whole records, one write and flush per line.
#[derive(Debug)]
pub struct RecordAppender {
    path: PathBuf,
    file: File,
}

impl RecordAppender {
    pub fn append(&mut self, record: &RunRecord) -> Result<(), StoreError> {
        let mut line = serde_json::to_string(record).expect("record serializes");
        line.push('\n');
        self.file.write_all(line.as_bytes()).map_err(io_err(&self.path))?;
        self.file.flush().map_err(io_err(&self.path))?;
        self.file.sync_data().map_err(io_err(&self.path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::PredicateReport;

    fn config(dir: &Path) -> RunConfig {
        let mut c: RunConfig = serde_json::from_value(serde_json::json!({
            "run_id": "r",
            "dataset_path": "d.jsonl",
            "output_dir": "out",
            "models": [{"kind": "scripted", "model_id": "m/1", "script": "s.json"}],
            "strategies": ["baseline"]
        }))
        .unwrap();
        c.resolve_paths(dir);
        c.normalize().unwrap();
        c
    }

    fn record(task: &str, digest: &str) -> RunRecord {
        RunRecord {
            model_id: "m/1".into(),
            strategy: StrategyKind::Baseline,
            task_id: task.into(),
            system_prompt: "s".into(),
            exemplars: vec![],
            iterations: vec![],
            selected_candidate: String::new(),
            selected_iteration: 0,
            selected_report: PredicateReport::all_false(),
            singleton_score: 0.0,
            functional_outcome: None,
            compile_error_category: None,
            error: None,
            wall_time_ms: 1,
            config_digest: digest.into(),
        }
    }

    #[test]
    fn create_append_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path());
        let store = RunStore::open_for_run(&cfg, false).unwrap();
        assert!(store.record_path("m/1", StrategyKind::Baseline).ends_with("records/m_1__baseline.jsonl"));
        let mut app = store.appender("m/1", StrategyKind::Baseline).unwrap();
        app.append(&record("A", &cfg.digest())).unwrap();
        app.append(&record("B", &cfg.digest())).unwrap();

        assert!(matches!(RunStore::open_for_run(&cfg, false), Err(StoreError::Exists { .. })));
        let reopened = RunStore::open_for_run(&cfg, true).unwrap();
        let recs = reopened.read_records("m/1", StrategyKind::Baseline, false).unwrap();
        assert_eq!(recs.iter().map(|r| r.task_id.as_str()).collect::<Vec<_>>(), ["A", "B"]);

        let mut other = cfg.clone();
        other.iteration_cap = 2;
        assert!(matches!(RunStore::open_for_run(&other, true), Err(StoreError::ConfigMismatch { .. })));
    }

    #[test]
    fn partial_line_is_dropped_and_repaired() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path());
        let store = RunStore::open_for_run(&cfg, false).unwrap();
        store.appender("m/1", StrategyKind::Baseline).unwrap().append(&record("A", &cfg.digest())).unwrap();
        let path = store.record_path("m/1", StrategyKind::Baseline);
        let full = fs::read(&path).unwrap();
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"model_id\": \"m/1\", \"strat").unwrap();
        drop(f);
        assert_eq!(store.read_records("m/1", StrategyKind::Baseline, true).unwrap().len(), 1);
        assert_eq!(fs::read(&path).unwrap(), full);
    }

    #[test]
    fn corrupt_and_foreign_records_are_named() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path());
        let store = RunStore::open_for_run(&cfg, false).unwrap();
        let path = store.record_path("m/1", StrategyKind::Baseline);
        fs::write(&path, "{\"bad\": 1}\n").unwrap();
        let err = store.read_records("m/1", StrategyKind::Baseline, false).unwrap_err();
        assert!(err.to_string().contains("m_1__baseline.jsonl line 1"), "{err}");
        store.appender("m/1", StrategyKind::Baseline).unwrap();
        fs::write(&path, serde_json::to_string(&record("A", "other")).unwrap() + "\n").unwrap();
        assert!(matches!(
            store.read_records("m/1", StrategyKind::Baseline, false),
            Err(StoreError::DigestMismatch { .. })
        ));
        assert!(matches!(RunStore::open(&dir.path().join("nope")), Err(StoreError::Missing { .. })));
    }
}
