#![allow(dead_code)]

use std::path::{Path, PathBuf};

use singleton_bench::dataset::{load_tasks, FieldMap, Task};
use singleton_bench::exec::JavaToolchain;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

pub fn stand_in_toolchain() -> JavaToolchain {
    let dir = fixtures().join("fakejdk");
    JavaToolchain { javac: dir.join("javac"), java: dir.join("java") }
}

/// The real JDK on `PATH`, if there is one.
pub fn real_toolchain() -> Option<JavaToolchain> {
    let tc = JavaToolchain::default();
    tc.is_available().then_some(tc)
}

pub fn humaneval_tasks() -> Vec<Task> {
    load_tasks(&fixtures().join("humaneval").join("tasks.jsonl"), &FieldMap::default()).unwrap().task_set.tasks
}

pub fn task(id: &str) -> Task {
    humaneval_tasks().into_iter().find(|t| t.task_id == id).unwrap()
}

/// Declaration plus canonical body, the way the dataset pairs them.
pub fn canonical(task: &Task) -> String {
    format!("{}{}", task.declaration, task.canonical_solution.as_deref().unwrap())
}

pub fn singleton_solution(task: &Task) -> String {
    canonical(task).replacen(
        "class Solution {\n",
        "class Solution {\n    private static Solution instance;\n\n    private Solution() {\n    }\n\n    public static Solution getInstance() {\n        if (instance == null) {\n            instance = new Solution();\n        }\n        return instance;\n    }\n\n",
        1,
    )
}

pub fn binary() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_singleton-bench"))
}

/// Copies the mock fixture into `dir` with `out` as output directory so
/// tests never write into the source tree.
pub fn mock_config_in(dir: &Path) -> PathBuf {
    let src = fixtures().join("mock");
    for name in ["tasks.jsonl", "script.json"] {
        std::fs::copy(src.join(name), dir.join(name)).unwrap();
    }
    let mut config: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(src.join("config.json")).unwrap()).unwrap();
    let fake = fixtures().join("fakejdk");
    config["exec"]["javac"] = fake.join("javac").display().to_string().into();
    config["exec"]["java"] = fake.join("java").display().to_string().into();
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}
