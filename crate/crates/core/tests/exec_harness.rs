mod common;

use std::time::{Duration, Instant};

use singleton_bench::exec::{CompileErrorCategory, Harness, JavaToolchain, OutcomeKind, ScratchKey};

use common::*;

fn harness(tc: JavaToolchain, dir: &std::path::Path) -> Harness {
    let mut h = Harness::new(tc, dir);
    h.budget = Duration::from_secs(3);
    h
}

fn key(task: &str, slot: &str) -> ScratchKey {
    ScratchKey { run_id: "t".into(), task_id: task.into(), slot: slot.into() }
}

#[test]
fn stand_in_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let h = harness(stand_in_toolchain(), dir.path());
    let t = task("Java/23");

    let (pass, cat) = h.evaluate(&canonical(&t), &t, &key(&t.task_id, "pass"));
    assert_eq!((pass.kind, cat), (OutcomeKind::Pass, None), "{}", pass.detail);

    let wrong = canonical(&t).replace("return string.length();", "return string.length() + 1; // WRONG_ANSWER");
    assert_eq!(h.evaluate(&wrong, &t, &key(&t.task_id, "wrong")).0.kind, OutcomeKind::TestFail);

    let (prose, cat) = h.evaluate("I cannot write Java today.", &t, &key(&t.task_id, "prose"));
    assert_eq!((prose.kind, cat), (OutcomeKind::CompileError, Some(CompileErrorCategory::NonCodeOutput)));

    let lib = format!("import org.nonexistent.Util;\n{}", canonical(&t));
    let (out, cat) = h.evaluate(&lib, &t, &key(&t.task_id, "lib"));
    assert_eq!((out.kind, cat), (OutcomeKind::CompileError, Some(CompileErrorCategory::MissingExternalLibrary)));
    assert!(out.detail.contains("package org.nonexistent does not exist"));

    let (empty, _) = h.evaluate("", &t, &key(&t.task_id, "empty"));
    assert_eq!(empty.kind, OutcomeKind::CompileError);

    // scratch directories are cleaned up
    assert!(std::fs::read_dir(dir.path().join("t"))
        .map_or(true, |mut d| d.all(|e| { std::fs::read_dir(e.unwrap().path()).unwrap().next().is_none() })));
}

#[test]
fn stand_in_timeout_is_bounded() {
    let dir = tempfile::tempdir().unwrap();
    let mut h = harness(stand_in_toolchain(), dir.path());
    h.budget = Duration::from_secs(1);
    let t = task("Java/23");
    let looping = canonical(&t).replace("return string.length();", "while (true) { } // INFINITE_LOOP");
    let start = Instant::now();
    let out = h.evaluate_functionality(&looping, &t, &key(&t.task_id, "loop"));
    assert_eq!(out.kind, OutcomeKind::Timeout);
    assert!(start.elapsed() < Duration::from_secs(1 + 5));
}

#[test]
fn private_constructor_needs_test_adaptation() {
    let dir = tempfile::tempdir().unwrap();
    let mut h = harness(stand_in_toolchain(), dir.path());
    let t = task("Java/23");
    let single = singleton_solution(&t);
    let out = h.evaluate_functionality(&single, &t, &key(&t.task_id, "a"));
    assert_eq!(out.kind, OutcomeKind::CompileError);
    assert!(out.detail.contains("has private access"), "{}", out.detail);
    h.test_adaptation = true;
    assert_eq!(h.evaluate_functionality(&single, &t, &key(&t.task_id, "b")).kind, OutcomeKind::Pass);
}

#[test]
fn scratch_is_kept_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let mut h = harness(stand_in_toolchain(), dir.path());
    h.keep_scratch = true;
    let t = task("Java/2");
    let k = key(&t.task_id, "m__baseline");
    let candidate = format!("package com.example;\n{}", canonical(&t));
    assert_eq!(h.evaluate_functionality(&candidate, &t, &k).kind, OutcomeKind::Pass);
    let scratch = k.path_under(dir.path());
    let main = std::fs::read_to_string(scratch.join("Main.java")).unwrap();
    assert!(main.starts_with("import java.util.*;\nimport java.lang.*;\n"));
    let sol = std::fs::read_to_string(scratch.join("Solution.java")).unwrap();
    assert!(!sol.contains("package com.example"));
    assert!(scratch.join("compile.log").exists());
    assert!(scratch.join("run.log").exists());
}

#[test]
fn missing_toolchain_aborts_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let tc = JavaToolchain { javac: "/nonexistent/javac".into(), java: "/nonexistent/java".into() };
    let t = task("Java/23");
    let out = harness(tc, dir.path()).evaluate_functionality(&canonical(&t), &t, &key("x", "y"));
    assert_eq!(out.kind, OutcomeKind::Aborted);
}

/// Runs only where a JDK is installed.
#[test]
fn canonical_solutions_pass_when_jdk_present() {
    let Some(tc) = real_toolchain() else {
        eprintln!("no JDK on PATH; skipping");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let h = harness(tc, dir.path());
    for t in humaneval_tasks() {
        let out = h.evaluate_functionality(&canonical(&t), &t, &key(&t.task_id, "canon"));
        assert_eq!(out.kind, OutcomeKind::Pass, "{}: {}", t.task_id, out.detail);
    }
}
