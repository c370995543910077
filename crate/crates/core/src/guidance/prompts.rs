//! Prompt templates. The wording is fixed; only the placeholders vary.

use crate::checker::PredicateReport;
use crate::dataset::Task;
use crate::gateway::ChatMessage;

use super::{GuidanceError, Strategy, StrategyKind};

pub const ROLE_PROMPT: &str =
    "You are a Java programmer. You respond with the code in Java to solve the task. No comments or explanations";

pub const INSTRUCT_PREFIX: &str = "The primary class in the following task should follow the singleton design pattern.";

pub const EXEMPLAR_HEADER: &str = "Examples of correctly implemented Singleton classes:";

pub fn instruct_prompt(task_description: &str) -> String {
    format!("{INSTRUCT_PREFIX}{task_description}")
}

pub fn iterate_prompt(candidate: &str) -> String {
    format!("Make sure that the primary class in the following code follows the singleton design pattern. {candidate}")
}

pub fn binary_feedback_prompt(candidate: &str) -> String {
    format!(
        "The following code does not include a correctly formatted Singleton class: {candidate}. \
         Please correct the code and return the complete code."
    )
}

pub fn predicate_feedback_prompt(candidate: &str, singleton_errors: &str) -> String {
    format!(
        "The following code does not include a correctly formatted Singleton class: {candidate}. \
         It failed the following checks {singleton_errors}. Please correct the code and return the complete code"
    )
}

/// Failure strings in predicate order, joined by `"; "`.
pub fn render_singleton_errors(report: &PredicateReport) -> String {
    report.failed_checks.join("; ")
}

pub fn exemplar_block(exemplars: &[String]) -> String {
    let mut block = format!("\n\n{EXEMPLAR_HEADER}");
    for exemplar in exemplars {
        block.push_str("\n\n");
        block.push_str(exemplar.trim_end());
    }
    block
}

/// System role message plus the first user message.
pub fn initial_prompt(strategy: &Strategy, task: &Task) -> Vec<ChatMessage> {
    let user = match strategy.kind {
        StrategyKind::Baseline => task.description.clone(),
        StrategyKind::Instruct | StrategyKind::BinaryFeedback | StrategyKind::PredicateFeedback => {
            instruct_prompt(&task.description)
        }
        StrategyKind::FewshotFeedback => {
            format!("{}{}", instruct_prompt(&task.description), exemplar_block(&strategy.exemplars))
        }
    };
    vec![ChatMessage::system(ROLE_PROMPT), ChatMessage::user(user)]
}

/// The re-prompt sent after a nonconforming candidate.
pub fn feedback_prompt(
    strategy: &Strategy,
    candidate: &str,
    report: &PredicateReport,
) -> Result<ChatMessage, GuidanceError> {
    if report.is_singleton() {
        return Err(GuidanceError::FeedbackOnConforming);
    }
    let content = match strategy.kind {
        StrategyKind::Baseline => return Err(GuidanceError::FeedbackOnBaseline),
        StrategyKind::Instruct => iterate_prompt(candidate),
        StrategyKind::BinaryFeedback => binary_feedback_prompt(candidate),
        StrategyKind::PredicateFeedback => predicate_feedback_prompt(candidate, &render_singleton_errors(report)),
        StrategyKind::FewshotFeedback => format!(
            "{}{}",
            predicate_feedback_prompt(candidate, &render_singleton_errors(report)),
            exemplar_block(&strategy.exemplars)
        ),
    };
    Ok(ChatMessage::user(content))
}
