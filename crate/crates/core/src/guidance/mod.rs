//! The five generation protocols as one iterative loop per
//! (model, strategy, task).
//!
//! Every protocol starts from the role prompt. `baseline` asks once with the
//! bare task. The four guided strategies add the Singleton instruction and
//! keep re-prompting a nonconforming candidate until it passes all three
//! predicates or the iteration cap is reached:
//!
//! | kind                 | re-prompt carries                          |
//! |----------------------|--------------------------------------------|
//! | `instruct`           | the candidate only                         |
//! | `binary_feedback`    | the candidate and a yes/no verdict         |
//! | `predicate_feedback` | the candidate and each failed predicate    |
//! | `fewshot_feedback`   | as above plus two exemplar Singletons      |

mod extract;
pub mod prompts;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checker::{check_source, singleton_score, PredicateReport};
use crate::dataset::Task;
use crate::exec::{CompileErrorCategory, OutcomeKind, OutcomeLabel};
use crate::gateway::ChatModel;

pub use extract::extract_code;
pub use prompts::{feedback_prompt, initial_prompt};

pub const DEFAULT_MAX_ITERATIONS: u32 = 10;

pub const EAGER_EXEMPLAR: &str = include_str!("../../exemplars/EagerSingleton.java");
pub const LAZY_EXEMPLAR: &str = include_str!("../../exemplars/LazySingleton.java");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Baseline,
    Instruct,
    BinaryFeedback,
    PredicateFeedback,
    FewshotFeedback,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::Baseline,
        StrategyKind::Instruct,
        StrategyKind::BinaryFeedback,
        StrategyKind::PredicateFeedback,
        StrategyKind::FewshotFeedback,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Baseline => "baseline",
            StrategyKind::Instruct => "instruct",
            StrategyKind::BinaryFeedback => "binary_feedback",
            StrategyKind::PredicateFeedback => "predicate_feedback",
            StrategyKind::FewshotFeedback => "fewshot_feedback",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = GuidanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| GuidanceError::UnknownStrategy(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GuidanceError {
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
    #[error("max_iterations must be at least 1")]
    ZeroIterations,
    #[error("fewshot_feedback needs exactly 2 exemplars, got {0}")]
    ExemplarCount(usize),
    #[error("exemplar {index} is not a conforming Singleton: {failed}")]
    ExemplarNotSingleton { index: usize, failed: String },
    #[error("feedback requested for a conforming candidate")]
    FeedbackOnConforming,
    #[error("baseline never sends feedback")]
    FeedbackOnBaseline,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategy {
    pub kind: StrategyKind,
    pub max_iterations: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exemplars: Vec<String>,
}

impl Strategy {
    /// Builds a strategy. Baseline is always one iteration; few-shot gets the
    /// shipped exemplars unless `exemplars` is given. Exemplars are checked
    /// against the predicates here.
    pub fn new(kind: StrategyKind, max_iterations: u32, exemplars: Option<Vec<String>>) -> Result<Self, GuidanceError> {
        if max_iterations == 0 {
            return Err(GuidanceError::ZeroIterations);
        }
        let (max_iterations, exemplars) = match kind {
            StrategyKind::Baseline => (1, Vec::new()),
            StrategyKind::FewshotFeedback => {
                let exemplars =
                    exemplars.unwrap_or_else(|| vec![EAGER_EXEMPLAR.to_string(), LAZY_EXEMPLAR.to_string()]);
                verify_exemplars(&exemplars)?;
                (max_iterations, exemplars)
            }
            _ => (max_iterations, Vec::new()),
        };
        Ok(Self { kind, max_iterations, exemplars })
    }

    pub fn baseline() -> Self {
        Self { kind: StrategyKind::Baseline, max_iterations: 1, exemplars: Vec::new() }
    }

    pub fn with_defaults(kind: StrategyKind) -> Self {
        Self::new(kind, DEFAULT_MAX_ITERATIONS, None).expect("shipped exemplars conform")
    }
}

pub fn verify_exemplars(exemplars: &[String]) -> Result<(), GuidanceError> {
    if exemplars.len() != 2 {
        return Err(GuidanceError::ExemplarCount(exemplars.len()));
    }
    for (index, exemplar) in exemplars.iter().enumerate() {
        let (_, report) = check_source(exemplar, None);
        if !report.is_singleton() {
            return Err(GuidanceError::ExemplarNotSingleton { index, failed: report.failed_checks.join("; ") });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based.
    pub index: u32,
    pub prompt_sent: String,
    pub raw_response: String,
    pub extracted_code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primary_class: Option<String>,
    pub predicate_report: PredicateReport,
    pub conforming: bool,
}

/// Transcript and verdicts of one (model, strategy, task) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub model_id: String,
    pub strategy: StrategyKind,
    pub task_id: String,
    pub system_prompt: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exemplars: Vec<String>,
    pub iterations: Vec<IterationRecord>,
    pub selected_candidate: String,
    /// 1-based; 0 when no iteration completed.
    pub selected_iteration: u32,
    pub selected_report: PredicateReport,
    pub singleton_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional_outcome: Option<OutcomeLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compile_error_category: Option<CompileErrorCategory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_time_ms: u64,
    pub config_digest: String,
}

impl RunRecord {
    pub fn outcome_kind(&self) -> Option<OutcomeKind> {
        self.functional_outcome.as_ref().map(|o| o.kind)
    }

    pub fn passed(&self) -> bool {
        self.outcome_kind() == Some(OutcomeKind::Pass)
    }

    pub fn aborted(&self) -> bool {
        self.outcome_kind() == Some(OutcomeKind::Aborted)
    }
}

/// Runs the protocol for one task. Gateway failures end the loop and yield a
/// record whose outcome is already `Aborted`; every other record leaves
/// `functional_outcome` for the exec harness to fill.
pub fn run_task(model: &mut dyn ChatModel, strategy: &Strategy, task: &Task, config_digest: &str) -> RunRecord {
    let started = Instant::now();
    let mut history = initial_prompt(strategy, task);
    let system_prompt = history[0].content.clone();
    let mut iterations: Vec<IterationRecord> = Vec::new();
    let mut error = None;

    for index in 1..=strategy.max_iterations {
        let prompt_sent = history.last().expect("history has a user turn").content.clone();
        let reply = match model.complete(&history) {
            Ok(reply) => reply,
            Err(err) => {
                log::warn!("{} {} {}: {err}", model.model_id(), strategy.kind, task.task_id);
                error = Some(err.to_string());
                break;
            }
        };
        let extracted_code = extract_code(&reply.content);
        let (primary_class, predicate_report) = check_source(&extracted_code, Some(&task.expected_class_name));
        let conforming = predicate_report.is_singleton();
        iterations.push(IterationRecord {
            index,
            prompt_sent,
            raw_response: reply.content.clone(),
            extracted_code: extracted_code.clone(),
            primary_class,
            predicate_report: predicate_report.clone(),
            conforming,
        });
        if conforming || index == strategy.max_iterations || strategy.kind == StrategyKind::Baseline {
            break;
        }
        let feedback = feedback_prompt(strategy, &extracted_code, &predicate_report)
            .expect("feedback is only built for nonconforming, non-baseline runs");
        history.push(reply);
        history.push(feedback);
    }

    let selected = iterations.iter().find(|it| it.conforming).or_else(|| iterations.last());
    let (selected_candidate, selected_iteration, selected_report) = match selected {
        Some(it) => (it.extracted_code.clone(), it.index, it.predicate_report.clone()),
        None => (String::new(), 0, PredicateReport::all_false()),
    };
    let functional_outcome = error.as_ref().map(|e| OutcomeLabel::new(OutcomeKind::Aborted, e.clone()));

    RunRecord {
        model_id: model.model_id().to_string(),
        strategy: strategy.kind,
        task_id: task.task_id.clone(),
        system_prompt,
        exemplars: strategy.exemplars.clone(),
        iterations,
        selected_candidate,
        selected_iteration,
        singleton_score: singleton_score(&selected_report).value(),
        selected_report,
        functional_outcome,
        compile_error_category: None,
        error,
        wall_time_ms: started.elapsed().as_millis() as u64,
        config_digest: config_digest.to_string(),
    }
}

/// Rebuilds every user prompt of a record from the templates. Used to verify
/// that stored transcripts match what the templates produce.
pub fn rerender_prompts(strategy: &Strategy, task: &Task, record: &RunRecord) -> Vec<String> {
    let mut prompts = vec![initial_prompt(strategy, task)[1].content.clone()];
    for it in record.iterations.iter().take(record.iterations.len().saturating_sub(1)) {
        if let Ok(msg) = feedback_prompt(strategy, &it.extracted_code, &it.predicate_report) {
            prompts.push(msg.content);
        }
    }
    prompts
}
