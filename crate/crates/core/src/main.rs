use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use singleton_bench::checker::{check_source, singleton_score};
use singleton_bench::config::{ExecConfig, ModelSpec, RunConfig};
use singleton_bench::dataset::FieldMap;
use singleton_bench::guidance::{StrategyKind, DEFAULT_MAX_ITERATIONS};
use singleton_bench::report::{parse_json, render, summarize_store, Format};
use singleton_bench::runner::{execute, RunOptions};
use singleton_bench::store::RunStore;

#[derive(Parser)]
#[command(
    name = "singleton-bench",
    version,
    about = "Singleton conformance and functional benchmark for LLM-generated Java"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check Java files (or directories of them) against the three Singleton predicates.
    Check {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Print one JSON object per file instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Execute a run described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Continue an existing store, skipping tasks that already have records.
        #[arg(long)]
        resume: bool,
    },
    /// Render the summary of a run store (or of a saved summary.json).
    Report {
        store: PathBuf,
        #[arg(long, default_value = "text")]
        format: Format,
    },
    /// Run a scripted model end to end without network access.
    MockRun(MockRunArgs),
}

#[derive(Args)]
struct MockRunArgs {
    #[arg(long)]
    script: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "mock")]
    run_id: String,
    #[arg(long, default_value = "mock")]
    model_id: String,
    /// Comma-separated strategy kinds; baseline is always included.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "baseline,instruct,binary_feedback,predicate_feedback,fewshot_feedback"
    )]
    strategies: Vec<StrategyKind>,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    iteration_cap: u32,
    #[arg(long, default_value = "javac")]
    javac: PathBuf,
    #[arg(long, default_value = "java")]
    java: PathBuf,
    #[arg(long, default_value_t = ExecConfig::default().budget_s)]
    budget_s: u64,
    #[arg(long)]
    test_adaptation: bool,
    #[arg(long)]
    resume: bool,
    #[arg(long, default_value = "text")]
    format: Format,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Check { paths, json } => cmd_check(&paths, json),
        Command::Run { config, resume } => {
            let config = RunConfig::load(&config)?;
            cmd_run(&config, resume, None)
        }
        Command::Report { store, format } => cmd_report(&store, format),
        Command::MockRun(args) => cmd_mock_run(args),
    }
}

fn java_files(path: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let meta = std::fs::metadata(path).with_context(|| format!("cannot read {}", path.display()))?;
    if meta.is_file() {
        out.push(path.to_path_buf());
        return Ok(());
    }
    let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
        .with_context(|| format!("cannot list {}", path.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    entries.sort();
    for entry in entries {
        if entry.is_dir() {
            java_files(&entry, out)?;
        } else if entry.extension().is_some_and(|e| e == "java") {
            out.push(entry);
        }
    }
    Ok(())
}

fn cmd_check(paths: &[PathBuf], json: bool) -> Result<ExitCode> {
    let mut files = Vec::new();
    for p in paths {
        java_files(p, &mut files)?;
    }
    if files.is_empty() {
        bail!("no .java files under the given paths");
    }
    let mut all_conform = true;
    let width = files.iter().map(|f| f.display().to_string().len()).max().unwrap_or(0);
    if !json {
        println!("{:<width$}  {:<20}  PC  IF  GAP  score", "file", "class");
    }
    for file in &files {
        let source = std::fs::read_to_string(file).with_context(|| format!("cannot read {}", file.display()))?;
        let stem = file.file_stem().and_then(|s| s.to_str());
        let (class, report) = check_source(&source, stem);
        let score = singleton_score(&report).value();
        all_conform &= report.is_singleton();
        if json {
            let line = serde_json::json!({
                "file": file.display().to_string(),
                "class": class,
                "report": report,
                "singleton_score": score,
            });
            println!("{line}");
        } else {
            let mark = |b: bool| if b { "yes" } else { "no" };
            println!(
                "{:<width$}  {:<20}  {:<3} {:<3} {:<4} {:>5.1}",
                file.display(),
                class.as_deref().unwrap_or("-"),
                mark(report.private_constructor),
                mark(report.instance_field),
                mark(report.global_access_point),
                score
            );
            for failure in &report.failed_checks {
                println!("    {failure}");
            }
        }
    }
    Ok(if all_conform { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_run(config: &RunConfig, resume: bool, print: Option<Format>) -> Result<ExitCode> {
    let outcome = execute(config, &RunOptions { resume, stop_after: None })?;
    eprintln!(
        "run {}: {} new record(s), {} already stored, store {}",
        config.run_id,
        outcome.new_records,
        outcome.skipped_records,
        outcome.store.root.display()
    );
    for model in &outcome.skipped_models {
        eprintln!("skipped model {model}: credential missing");
    }
    if let Some(format) = print {
        print!("{}", render(&summarize_store(&outcome.store)?, format));
    }
    if !outcome.failed_jobs.is_empty() {
        for job in &outcome.failed_jobs {
            eprintln!("failed: {job}");
        }
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(path: &Path, format: Format) -> Result<ExitCode> {
    let summary = if path.is_file() {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        parse_json(&text).with_context(|| format!("{} is not a summary", path.display()))?
    } else {
        let store = RunStore::open(path)?;
        summarize_store(&store)?
    };
    print!("{}", render(&summary, format));
    Ok(ExitCode::SUCCESS)
}

fn cmd_mock_run(args: MockRunArgs) -> Result<ExitCode> {
    let cwd = std::env::current_dir()?;
    let mut config = RunConfig {
        run_id: args.run_id,
        dataset_path: args.dataset,
        field_map: FieldMap::default(),
        output_dir: args.out,
        models: vec![ModelSpec::Scripted { model_id: args.model_id, script: args.script }],
        strategies: args.strategies,
        iteration_cap: args.iteration_cap,
        exemplar_paths: None,
        exec: ExecConfig {
            javac: args.javac,
            java: args.java,
            budget_s: args.budget_s,
            test_adaptation: args.test_adaptation,
            ..ExecConfig::default()
        },
        parallelism: 4,
        seed: None,
    };
    config.resolve_paths(&cwd);
    config.normalize()?;
    cmd_run(&config, args.resume, Some(args.format))
}
