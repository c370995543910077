//! Executes a run: every (model, strategy) pair over every task, each record
//! evaluated and appended to the store as soon as it is finished.
//!
//! Pairs are spread over `parallelism` worker threads; inside a pair tasks run
//! in dataset order so each record file is written in a fixed order. Tasks
//! that already have a record are skipped, which makes an interrupted run
//! resumable.

use std::collections::{HashSet, VecDeque};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use thiserror::Error;

use crate::config::{ConfigError, ModelSpec, RunConfig};
use crate::dataset::{load_tasks, DatasetError, TaskSet};
use crate::exec::{ExecError, Harness, OutcomeKind, ScratchKey};
use crate::gateway::{ChatModel, EndpointLimiter, GatewayError, HttpModel, ModelHandle, ScriptBook, Semaphore};
use crate::guidance::{run_task, Strategy};
use crate::report::{render_json, summarize_store};
use crate::store::{RunStore, StoreError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("dataset: {0}")]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Toolchain(#[from] ExecError),
    #[error("script for {model_id}: {message}")]
    Script { model_id: String, message: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("no usable models (all were skipped)")]
    NoModels,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub resume: bool,
    /// Stop once this many new records have been written, as if the process
    /// had been killed. Used to test resumption.
    pub stop_after: Option<usize>,
}

#[derive(Debug)]
pub struct RunSummary {
    pub store: RunStore,
    pub new_records: usize,
    pub skipped_records: usize,
    pub skipped_models: Vec<String>,
    pub failed_jobs: Vec<String>,
    pub interrupted: bool,
}

enum Backend {
    Http(ModelHandle),
    Scripted(Arc<ScriptBook>),
}

struct Job {
    model_id: String,
    backend: Arc<Backend>,
    strategy: Strategy,
}

struct Shared {
    config: RunConfig,
    store: RunStore,
    tasks: TaskSet,
    harness: Harness,
    exec_permits: Arc<Semaphore>,
    limiter: EndpointLimiter,
    digest: String,
    written: AtomicUsize,
    skipped: AtomicUsize,
    stop_after: Option<usize>,
    stop: AtomicBool,
    append_lock: Mutex<()>,
}

pub fn execute(config: &RunConfig, options: &RunOptions) -> Result<RunSummary, RunError> {
    let loaded = load_tasks(&config.dataset_path, &config.field_map)?;
    for w in &loaded.warnings {
        log::warn!("dataset: {w}");
    }
    let strategies = config.build_strategies()?;
    let toolchain = config.toolchain();
    toolchain.verify()?;

    let mut skipped_models = Vec::new();
    let mut backends: Vec<(String, Arc<Backend>)> = Vec::new();
    for model in &config.models {
        match model {
            ModelSpec::Http(handle) => match handle.credential() {
                Ok(_) => backends.push((handle.model_id.clone(), Arc::new(Backend::Http(handle.clone())))),
                Err(e) => {
                    log::warn!("skipping model: {e}");
                    skipped_models.push(handle.model_id.clone());
                }
            },
            ModelSpec::Scripted { model_id, script } => {
                let book = ScriptBook::load(script)
                    .map_err(|message| RunError::Script { model_id: model_id.clone(), message })?;
                backends.push((model_id.clone(), Arc::new(Backend::Scripted(Arc::new(book)))));
            }
        }
    }
    if backends.is_empty() {
        return Err(RunError::NoModels);
    }

    let store = RunStore::open_for_run(config, options.resume)?;
    let mut harness = Harness::new(toolchain, config.scratch_dir());
    harness.budget = Duration::from_secs(config.exec.budget_s);
    harness.test_adaptation = config.exec.test_adaptation;
    harness.keep_scratch = config.exec.keep_scratch;

    let jobs: VecDeque<Job> = backends
        .iter()
        .flat_map(|(model_id, backend)| {
            strategies.iter().map(|s| Job {
                model_id: model_id.clone(),
                backend: Arc::clone(backend),
                strategy: s.clone(),
            })
        })
        .collect();
    let job_count = jobs.len();
    let shared = Arc::new(Shared {
        digest: config.digest(),
        config: config.clone(),
        store,
        tasks: loaded.task_set,
        harness,
        exec_permits: Semaphore::new(config.exec.workers),
        limiter: EndpointLimiter::new(),
        written: AtomicUsize::new(0),
        skipped: AtomicUsize::new(0),
        stop_after: options.stop_after,
        stop: AtomicBool::new(false),
        append_lock: Mutex::new(()),
    });
    log::info!(
        "run {}: {} tasks, {} model(s), {} strategies",
        config.run_id,
        shared.tasks.len(),
        backends.len(),
        strategies.len()
    );

    let queue = Arc::new(Mutex::new(jobs));
    let failed = Arc::new(Mutex::new(Vec::new()));
    let workers = config.parallelism.min(job_count).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let (queue, failed, shared) = (Arc::clone(&queue), Arc::clone(&failed), Arc::clone(&shared));
            scope.spawn(move || loop {
                if shared.stop.load(Ordering::SeqCst) {
                    break;
                }
                let Some(job) = queue.lock().expect("job queue").pop_front() else { break };
                let label = format!("{} / {}", job.model_id, job.strategy.kind);
                if let Err(e) = run_job(&shared, &job) {
                    log::error!("{label}: {e}");
                    failed.lock().expect("failure list").push(format!("{label}: {e}"));
                }
            });
        }
    });

    let shared = Arc::into_inner(shared).expect("workers have finished");
    let interrupted = shared.stop.load(Ordering::SeqCst);
    let failed_jobs = Arc::into_inner(failed).expect("workers have finished").into_inner().expect("failure list");
    if !interrupted {
        let summary = summarize_store(&shared.store)?;
        shared.store.write_summary(&render_json(&summary))?;
    }
    Ok(RunSummary {
        store: shared.store,
        new_records: shared.written.into_inner(),
        skipped_records: shared.skipped.into_inner(),
        skipped_models,
        failed_jobs,
        interrupted,
    })
}

fn run_job(shared: &Shared, job: &Job) -> Result<(), RunError> {
    let kind = job.strategy.kind;
    let done: HashSet<String> =
        shared.store.read_records(&job.model_id, kind, true)?.into_iter().map(|r| r.task_id).collect();
    let mut appender = shared.store.appender(&job.model_id, kind)?;
    let mut http = match job.backend.as_ref() {
        Backend::Http(handle) => Some(HttpModel::new(handle.clone(), &shared.limiter)?),
        Backend::Scripted(_) => None,
    };
    let slot = format!("{}__{}", job.model_id, kind);

    for task in &shared.tasks.tasks {
        if shared.stop.load(Ordering::SeqCst) {
            return Ok(());
        }
        if done.contains(&task.task_id) {
            shared.skipped.fetch_add(1, Ordering::SeqCst);
            continue;
        }
        let mut record = match (job.backend.as_ref(), http.as_mut()) {
            (Backend::Scripted(book), _) => {
                let mut model = book.model_for(&job.model_id, kind.as_str(), &task.task_id);
                run_task(&mut model, &job.strategy, task, &shared.digest)
            }
            (Backend::Http(_), Some(model)) => {
                run_task(model as &mut dyn ChatModel, &job.strategy, task, &shared.digest)
            }
            (Backend::Http(_), None) => unreachable!("http backends build their client up front"),
        };
        if !record.aborted() {
            let key =
                ScratchKey { run_id: shared.config.run_id.clone(), task_id: task.task_id.clone(), slot: slot.clone() };
            let (outcome, category) = {
                let _permit = shared.exec_permits.acquire();
                shared.harness.evaluate(&record.selected_candidate, task, &key)
            };
            record.functional_outcome = Some(outcome);
            record.compile_error_category = category;
        }
        log::info!(
            "{} {} {}: score {:.1}, {}",
            job.model_id,
            kind,
            task.task_id,
            record.singleton_score,
            record.outcome_kind().unwrap_or(OutcomeKind::Aborted)
        );

        // the stop check and the append happen under one lock so exactly
        // `stop_after` records land
        let written = {
            let _guard = shared.append_lock.lock().expect("append lock");
            if shared.stop.load(Ordering::SeqCst) {
                return Ok(());
            }
            appender.append(&record)?;
            shared.written.fetch_add(1, Ordering::SeqCst) + 1
        };
        if shared.stop_after.is_some_and(|limit| written >= limit) {
            shared.stop.store(true, Ordering::SeqCst);
            return Ok(());
        }
    }
    Ok(())
}
