//! Functional correctness: compile a candidate with the task's test harness
//! and run it under a time budget.
//!
//! Each evaluation owns a scratch directory
//! `<workdir>/<run-id>/<task-id>/<slot>/` holding the candidate source, the
//! test source, `classes/` and the compiler and runtime logs. The exit code of
//! the test process is the verdict.

mod classify;

use std::fmt;
use std::fs::{self, File};
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, ExitStatus, Stdio};
use std::sync::OnceLock;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use wait_timeout::ChildExt;

use crate::checker::evaluate_predicates;
use crate::dataset::Task;
use crate::source::{parse_compilation_unit, select_primary_class, Modifier};

pub use classify::classify_compile_error;

pub const DEFAULT_BUDGET_S: u64 = 30;

const DETAIL_LIMIT: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeKind {
    Pass,
    TestFail,
    CompileError,
    Timeout,
    Aborted,
}

impl OutcomeKind {
    pub const ALL: [OutcomeKind; 5] = [
        OutcomeKind::Pass,
        OutcomeKind::TestFail,
        OutcomeKind::CompileError,
        OutcomeKind::Timeout,
        OutcomeKind::Aborted,
    ];
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeLabel {
    pub kind: OutcomeKind,
    pub detail: String,
}

impl OutcomeLabel {
    pub fn new(kind: OutcomeKind, detail: impl Into<String>) -> Self {
        Self { kind, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompileErrorCategory {
    MissingExternalLibrary,
    NonCodeOutput,
    OtherCompileError,
}

impl CompileErrorCategory {
    pub const ALL: [CompileErrorCategory; 3] = [
        CompileErrorCategory::MissingExternalLibrary,
        CompileErrorCategory::NonCodeOutput,
        CompileErrorCategory::OtherCompileError,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CompileErrorCategory::MissingExternalLibrary => "missing_external_library",
            CompileErrorCategory::NonCodeOutput => "non_code_output",
            CompileErrorCategory::OtherCompileError => "other_compile_error",
        }
    }
}

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("Java toolchain not usable: {tool} ({detail})")]
    ToolchainMissing { tool: String, detail: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JavaToolchain {
    pub javac: PathBuf,
    pub java: PathBuf,
}

impl Default for JavaToolchain {
    fn default() -> Self {
        Self { javac: "javac".into(), java: "java".into() }
    }
}

impl JavaToolchain {
    /// Runs `-version` on both tools; fails when either cannot be started or
    /// exits unsuccessfully.
    pub fn verify(&self) -> Result<(), ExecError> {
        for tool in [&self.javac, &self.java] {
            let missing = |detail: String| ExecError::ToolchainMissing { tool: tool.display().to_string(), detail };
            let mut child = Command::new(tool)
                .arg("-version")
                .stdin(Stdio::null())
                .stdout(Stdio::null())
                .stderr(Stdio::null())
                .spawn()
                .map_err(|e| missing(e.to_string()))?;
            match child.wait_timeout(Duration::from_secs(60)).map_err(|e| missing(e.to_string()))? {
                Some(status) if status.success() => {}
                Some(status) => return Err(missing(format!("-version exited with {status}"))),
                None => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(missing("-version did not finish".into()));
                }
            }
        }
        Ok(())
    }

    pub fn is_available(&self) -> bool {
        self.verify().is_ok()
    }
}

/// Identifies one evaluation's scratch directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScratchKey {
    pub run_id: String,
    pub task_id: String,
    /// Distinguishes concurrent evaluations of the same task, e.g.
    /// `<model>__<strategy>`.
    pub slot: String,
}

impl ScratchKey {
    pub fn path_under(&self, workdir: &Path) -> PathBuf {
        workdir.join(sanitize(&self.run_id)).join(sanitize(&self.task_id)).join(sanitize(&self.slot))
    }
}

pub fn sanitize(component: &str) -> String {
    let cleaned: String = component
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect();
    match cleaned.as_str() {
        "" | "." | ".." => format!("_{cleaned}"),
        _ => cleaned,
    }
}

#[derive(Debug, Clone)]
pub struct Harness {
    pub toolchain: JavaToolchain,
    pub workdir: PathBuf,
    pub budget: Duration,
    /// Rewrite `new C()` to a call of C's static accessor in the test when the candidate's
    /// class has private constructors.
    pub test_adaptation: bool,
    pub keep_scratch: bool,
}

struct Prepared {
    dir: PathBuf,
    sources: Vec<String>,
    entry_class: String,
}

enum Finished {
    Exited(ExitStatus),
    TimedOut,
}

impl Harness {
    pub fn new(toolchain: JavaToolchain, workdir: impl Into<PathBuf>) -> Self {
        Self {
            toolchain,
            workdir: workdir.into(),
            budget: Duration::from_secs(DEFAULT_BUDGET_S),
            test_adaptation: false,
            keep_scratch: false,
        }
    }

    pub fn evaluate_functionality(&self, candidate: &str, task: &Task, key: &ScratchKey) -> OutcomeLabel {
        if candidate.trim().is_empty() {
            return OutcomeLabel::new(OutcomeKind::CompileError, "empty candidate");
        }
        let dir = key.path_under(&self.workdir);
        let prepared = match self.prepare(&dir, candidate, task) {
            Ok(p) => p,
            Err(e) => {
                return OutcomeLabel::new(OutcomeKind::Aborted, format!("scratch directory {}: {e}", dir.display()))
            }
        };
        let outcome = self.compile_and_run(&prepared);
        if !self.keep_scratch {
            if let Err(e) = fs::remove_dir_all(&prepared.dir) {
                log::warn!("could not remove {}: {e}", prepared.dir.display());
            }
        }
        outcome
    }

    /// Full evaluation plus the compile-error bucket when applicable.
    pub fn evaluate(
        &self,
        candidate: &str,
        task: &Task,
        key: &ScratchKey,
    ) -> (OutcomeLabel, Option<CompileErrorCategory>) {
        let outcome = self.evaluate_functionality(candidate, task, key);
        let category =
            (outcome.kind == OutcomeKind::CompileError).then(|| classify_compile_error(&outcome.detail, candidate));
        (outcome, category)
    }

    fn prepare(&self, dir: &Path, candidate: &str, task: &Task) -> io::Result<Prepared> {
        if dir.exists() {
            fs::remove_dir_all(dir)?;
        }
        fs::create_dir_all(dir.join("classes"))?;

        let test_classes = parse_compilation_unit(&task.test_code);
        let entry = test_classes
            .iter()
            .find(|c| c.methods().any(|m| m.name == "main" && m.has(Modifier::Public) && m.has(Modifier::Static)))
            .or_else(|| test_classes.first());
        let entry_class = entry.map_or_else(|| "Main".to_string(), |c| c.class_name.clone());

        let candidate_classes = parse_compilation_unit(candidate);
        let public_class = candidate_classes.iter().find(|c| c.modifiers.contains(&Modifier::Public));
        let mut candidate_file = match public_class {
            Some(c) => format!("{}.java", c.class_name),
            None => format!("{}.java", task.expected_class_name),
        };
        let test_file = format!("{entry_class}.java");
        if candidate_file == test_file {
            candidate_file = "Candidate.java".to_string();
        }

        let mut test_source = String::new();
        let mut seen = Vec::new();
        for import in
            classify::import_statements(&task.declaration).into_iter().chain(classify::import_statements(candidate))
        {
            if !seen.contains(&import) {
                test_source.push_str(&import);
                test_source.push('\n');
                seen.push(import);
            }
        }
        test_source.push('\n');
        test_source.push_str(&self.test_code_for(candidate, task));

        fs::write(dir.join(&candidate_file), strip_package(candidate))?;
        fs::write(dir.join(&test_file), test_source)?;
        Ok(Prepared { dir: dir.to_path_buf(), sources: vec![candidate_file, test_file], entry_class })
    }

    fn test_code_for(&self, candidate: &str, task: &Task) -> String {
        if !self.test_adaptation {
            return task.test_code.clone();
        }
        let classes = parse_compilation_unit(candidate);
        match select_primary_class(&classes, Some(&task.expected_class_name)) {
            Some(class) if evaluate_predicates(class).private_constructor => {
                let accessor = class
                    .methods()
                    .find(|m| m.has(Modifier::Public) && m.has(Modifier::Static) && m.declared_type == class.class_name)
                    .map_or("getInstance", |m| m.name.as_str());
                adapt_test_code(&task.test_code, &class.class_name, accessor)
            }
            _ => task.test_code.clone(),
        }
    }

    fn compile_and_run(&self, prepared: &Prepared) -> OutcomeLabel {
        let mut javac = Command::new(&self.toolchain.javac);
        javac.args(["-encoding", "UTF-8", "-d", "classes"]).args(&prepared.sources);
        match self.run_logged(javac, &prepared.dir, "compile.log") {
            Err(e) => {
                OutcomeLabel::new(OutcomeKind::Aborted, format!("cannot start {}: {e}", self.toolchain.javac.display()))
            }
            Ok((Finished::TimedOut, log)) => OutcomeLabel::new(
                OutcomeKind::Timeout,
                format!("compilation exceeded {}s\n{log}", self.budget.as_secs()),
            ),
            Ok((Finished::Exited(status), log)) if !status.success() => {
                OutcomeLabel::new(OutcomeKind::CompileError, log)
            }
            Ok(_) => {
                let mut java = Command::new(&self.toolchain.java);
                java.args(["-cp", "classes", &prepared.entry_class]);
                match self.run_logged(java, &prepared.dir, "run.log") {
                    Err(e) => OutcomeLabel::new(
                        OutcomeKind::Aborted,
                        format!("cannot start {}: {e}", self.toolchain.java.display()),
                    ),
                    Ok((Finished::TimedOut, log)) => OutcomeLabel::new(
                        OutcomeKind::Timeout,
                        format!("tests exceeded {}s\n{log}", self.budget.as_secs()),
                    ),
                    Ok((Finished::Exited(status), _)) if status.success() => OutcomeLabel::new(OutcomeKind::Pass, ""),
                    Ok((Finished::Exited(status), log)) => {
                        OutcomeLabel::new(OutcomeKind::TestFail, format!("test process exited with {status}\n{log}"))
                    }
                }
            }
        }
    }

    /// Runs `cmd` in `dir` with stdout and stderr captured to `log_name`;
    /// kills and reaps it when the budget elapses.
    fn run_logged(&self, mut cmd: Command, dir: &Path, log_name: &str) -> io::Result<(Finished, String)> {
        let log_path = dir.join(log_name);
        let log = File::create(&log_path)?;
        cmd.current_dir(dir).stdin(Stdio::null()).stdout(Stdio::from(log.try_clone()?)).stderr(Stdio::from(log));
        let mut child = cmd.spawn()?;
        let finished = wait_or_kill(&mut child, self.budget)?;
        Ok((finished, read_tail(&log_path)))
    }
}

fn wait_or_kill(child: &mut Child, budget: Duration) -> io::Result<Finished> {
    match child.wait_timeout(budget)? {
        Some(status) => Ok(Finished::Exited(status)),
        None => {
            let _ = child.kill();
            child.wait()?;
            Ok(Finished::TimedOut)
        }
    }
}

fn read_tail(path: &Path) -> String {
    let mut bytes = Vec::new();
    if File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).is_err() {
        return String::new();
    }
    let text = String::from_utf8_lossy(&bytes);
    let count = text.chars().count();
    if count <= DETAIL_LIMIT {
        return text.into_owned();
    }
    text.chars().skip(count - DETAIL_LIMIT).collect()
}

fn package_decl() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?m)^\s*package\s+[\w.]+\s*;").unwrap())
}

/// Drops `package` declarations so the candidate lands in the default
/// package next to the test.
fn strip_package(candidate: &str) -> String {
    package_decl().replace_all(candidate, "").into_owned()
}

/// Rewrites `new C()` into `C.<accessor>()`.
pub fn adapt_test_code(test_code: &str, class_name: &str, accessor: &str) -> String {
    let pattern = format!(r"\bnew\s+{}\s*\(\s*\)", regex::escape(class_name));
    let re = Regex::new(&pattern).expect("escaped class name forms a valid pattern");
    re.replace_all(test_code, format!("{class_name}.{accessor}()").as_str()).into_owned()
}
