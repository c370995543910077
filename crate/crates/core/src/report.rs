//! Summaries of a run store and their text, CSV and JSON renderings.
//!
//! All three formats are produced from [`Summary`], so a JSON summary parsed
//! back renders the same text as the store it came from.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::exec::{CompileErrorCategory, OutcomeKind};
use crate::guidance::{RunRecord, StrategyKind};
use crate::stats::{self, McNemarResult, PairedOutcomes, PredicateCounts};
use crate::store::{RunStore, StoreError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OutcomeBreakdown {
    pub pass: u64,
    pub test_fail: u64,
    pub compile_error: u64,
    pub missing_external_library: u64,
    pub non_code_output: u64,
    pub other_compile_error: u64,
    pub timeout: u64,
    pub aborted: u64,
    /// Records stored without a functional verdict.
    pub unevaluated: u64,
}

impl OutcomeBreakdown {
    pub fn from_records(records: &[RunRecord]) -> Self {
        let mut b = Self::default();
        for r in records {
            match r.outcome_kind() {
                Some(OutcomeKind::Pass) => b.pass += 1,
                Some(OutcomeKind::TestFail) => b.test_fail += 1,
                Some(OutcomeKind::CompileError) => {
                    b.compile_error += 1;
                    match r.compile_error_category.unwrap_or(CompileErrorCategory::OtherCompileError) {
                        CompileErrorCategory::MissingExternalLibrary => b.missing_external_library += 1,
                        CompileErrorCategory::NonCodeOutput => b.non_code_output += 1,
                        CompileErrorCategory::OtherCompileError => b.other_compile_error += 1,
                    }
                }
                Some(OutcomeKind::Timeout) => b.timeout += 1,
                Some(OutcomeKind::Aborted) => b.aborted += 1,
                None => b.unevaluated += 1,
            }
        }
        b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Significance {
    pub mcnemar: McNemarResult,
    pub pairs: PairedOutcomes,
    /// Shared tasks dropped because either arm aborted.
    pub excluded_aborted: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: StrategyKind,
    pub tasks: u64,
    pub passed: u64,
    pub pass_rate: f64,
    /// Percentage points over this model's baseline; absent for the baseline
    /// itself or when the baseline has no records.
    pub delta_pp: Option<f64>,
    pub significance: Option<Significance>,
    pub average_singleton_score: Option<f64>,
    pub predicate_counts: PredicateCounts,
    pub outcomes: OutcomeBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model_id: String,
    pub strategies: Vec<StrategySummary>,
}

impl ModelSummary {
    pub fn get(&self, strategy: StrategyKind) -> Option<&StrategySummary> {
        self.strategies.iter().find(|s| s.strategy == strategy)
    }

    pub fn baseline_rate(&self) -> Option<f64> {
        self.get(StrategyKind::Baseline).map(|s| s.pass_rate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub run_id: String,
    pub config_digest: String,
    pub strategies: Vec<StrategyKind>,
    /// Sorted by descending baseline pass rate, then model id.
    pub models: Vec<ModelSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Format::Text),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?} (expected text, csv or json)")),
        }
    }
}

pub fn summarize_store(store: &RunStore) -> Result<Summary, StoreError> {
    let records = store.all_records()?;
    Ok(summarize(&store.config.run_id, &store.config.digest(), &store.config.strategies, &records))
}

pub fn summarize(
    run_id: &str,
    config_digest: &str,
    strategies: &[StrategyKind],
    records: &BTreeMap<(String, StrategyKind), Vec<RunRecord>>,
) -> Summary {
    let mut strategies = strategies.to_vec();
    strategies.sort();
    strategies.dedup();

    let mut by_model: BTreeMap<&str, BTreeMap<StrategyKind, &[RunRecord]>> = BTreeMap::new();
    for ((model, strategy), recs) in records {
        by_model.entry(model.as_str()).or_default().insert(*strategy, recs.as_slice());
    }

    let mut models: Vec<ModelSummary> = by_model
        .into_iter()
        .map(|(model_id, arms)| {
            let baseline = arms.get(&StrategyKind::Baseline).copied();
            let baseline_rate = baseline.map(stats::pass_at_1);
            let strategies = strategies
                .iter()
                .filter_map(|kind| arms.get(kind).map(|recs| (*kind, *recs)))
                .map(|(strategy, recs)| {
                    let pass_rate = stats::pass_at_1(recs);
                    let compared = baseline.filter(|_| strategy != StrategyKind::Baseline);
                    let significance = compared.map(|base| {
                        let pairing = PairedOutcomes::from_records(base, recs);
                        Significance {
                            mcnemar: stats::mcnemar(&pairing.pairs),
                            pairs: pairing.pairs,
                            excluded_aborted: pairing.excluded_aborted,
                        }
                    });
                    StrategySummary {
                        strategy,
                        tasks: recs.len() as u64,
                        passed: recs.iter().filter(|r| r.passed()).count() as u64,
                        pass_rate,
                        delta_pp: compared.and(baseline_rate).map(|b| stats::delta_pp(pass_rate, b)),
                        significance,
                        average_singleton_score: stats::average_singleton_score(recs),
                        predicate_counts: stats::predicate_counts(recs),
                        outcomes: OutcomeBreakdown::from_records(recs),
                    }
                })
                .collect();
            ModelSummary { model_id: model_id.to_string(), strategies }
        })
        .collect();

    models.sort_by(|a, b| {
        let rate = |m: &ModelSummary| m.baseline_rate().unwrap_or(f64::NEG_INFINITY);
        rate(b).total_cmp(&rate(a)).then_with(|| a.model_id.cmp(&b.model_id))
    });

    Summary { run_id: run_id.to_string(), config_digest: config_digest.to_string(), strategies, models }
}

pub fn render(summary: &Summary, format: Format) -> String {
    match format {
        Format::Text => render_text(summary),
        Format::Csv => render_csv(summary),
        Format::Json => render_json(summary),
    }
}

pub fn render_json(summary: &Summary) -> String {
    serde_json::to_string_pretty(summary).expect("summary serializes") + "\n"
}

pub fn parse_json(text: &str) -> Result<Summary, serde_json::Error> {
    serde_json::from_str(text)
}

fn opt1(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.1}"))
}

/// Columns padded to their widest cell; the first column is left-aligned.
fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for row in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        let mut line = String::new();
        for (i, cell) in row.iter().enumerate().take(cols) {
            if i == 0 {
                let _ = write!(line, "{cell:<w$}", w = widths[i]);
            } else {
                let _ = write!(line, "  {cell:>w$}", w = widths[i]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

pub fn render_text(summary: &Summary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Run {} (config {})", summary.run_id, summary.config_digest);
    let guided: Vec<StrategyKind> =
        summary.strategies.iter().copied().filter(|s| *s != StrategyKind::Baseline).collect();

    let mut header = vec!["model".to_string(), "baseline".to_string()];
    header.extend(guided.iter().map(|s| s.to_string()));
    let rows: Vec<Vec<String>> = summary
        .models
        .iter()
        .map(|m| {
            let mut row = vec![m.model_id.clone(), opt1(m.baseline_rate())];
            for kind in &guided {
                row.push(match m.get(*kind) {
                    Some(s) => match (s.delta_pp, &s.significance) {
                        (Some(d), Some(sig)) => format!("{d:+.1}{}", sig.mcnemar.stars),
                        _ => format!("{:.1}", s.pass_rate),
                    },
                    None => "-".into(),
                });
            }
            row
        })
        .collect();
    out.push_str("\nPass rate (pass@1 %): baseline, then change in percentage points\n");
    out.push_str("McNemar: * p<0.05, ** p<0.01, *** p<0.001\n");
    out.push_str(&table(&header, &rows));

    let header: Vec<String> =
        ["model", "strategy", "b", "c", "excluded", "method", "statistic", "p"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = summary
        .models
        .iter()
        .flat_map(|m| {
            m.strategies.iter().filter_map(|s| {
                s.significance.as_ref().map(|sig| {
                    vec![
                        m.model_id.clone(),
                        s.strategy.to_string(),
                        sig.mcnemar.b.to_string(),
                        sig.mcnemar.c.to_string(),
                        sig.excluded_aborted.to_string(),
                        sig.mcnemar.method.as_str().to_string(),
                        sig.mcnemar.statistic.map_or_else(|| "-".into(), |v| format!("{v:.3}")),
                        format!("{:.4}", sig.mcnemar.p_value),
                    ]
                })
            })
        })
        .collect();
    out.push_str("\nSignificance against baseline\n");
    out.push_str(&table(&header, &rows));

    let mut header = vec!["model".to_string()];
    header.extend(summary.strategies.iter().map(|s| s.to_string()));
    let rows: Vec<Vec<String>> = summary
        .models
        .iter()
        .map(|m| {
            let mut row = vec![m.model_id.clone()];
            row.extend(summary.strategies.iter().map(|k| opt1(m.get(*k).and_then(|s| s.average_singleton_score))));
            row
        })
        .collect();
    out.push_str("\nAverage Singleton Score\n");
    out.push_str(&table(&header, &rows));

    let header: Vec<String> =
        ["model", "strategy", "tasks", "private_constructor", "instance_field", "global_access_point"]
            .map(String::from)
            .to_vec();
    let rows: Vec<Vec<String>> = summary
        .models
        .iter()
        .flat_map(|m| {
            m.strategies.iter().map(|s| {
                let p = s.predicate_counts;
                vec![
                    m.model_id.clone(),
                    s.strategy.to_string(),
                    s.tasks.to_string(),
                    p.private_constructor.to_string(),
                    p.instance_field.to_string(),
                    p.global_access_point.to_string(),
                ]
            })
        })
        .collect();
    out.push_str("\nFulfilled predicates\n");
    out.push_str(&table(&header, &rows));

    let header: Vec<String> = [
        "model",
        "strategy",
        "pass",
        "test_fail",
        "compile_error",
        "missing_lib",
        "non_code",
        "other",
        "timeout",
        "aborted",
    ]
    .map(String::from)
    .to_vec();
    let rows: Vec<Vec<String>> = summary
        .models
        .iter()
        .flat_map(|m| {
            m.strategies.iter().map(|s| {
                let o = s.outcomes;
                let mut row = vec![m.model_id.clone(), s.strategy.to_string()];
                row.extend(
                    [
                        o.pass,
                        o.test_fail,
                        o.compile_error,
                        o.missing_external_library,
                        o.non_code_output,
                        o.other_compile_error,
                        o.timeout,
                        o.aborted,
                    ]
                    .map(|n| n.to_string()),
                );
                row
            })
        })
        .collect();
    out.push_str("\nOutcomes\n");
    out.push_str(&table(&header, &rows));
    out
}

pub const CSV_HEADER: [&str; 25] = [
    "model_id",
    "strategy",
    "tasks",
    "passed",
    "pass_rate",
    "delta_pp",
    "stars",
    "mcnemar_method",
    "b",
    "c",
    "statistic",
    "p_value",
    "excluded_aborted",
    "average_singleton_score",
    "private_constructor",
    "instance_field",
    "global_access_point",
    "pass",
    "test_fail",
    "compile_error",
    "missing_external_library",
    "non_code_output",
    "other_compile_error",
    "timeout",
    "aborted",
];

/// One row per (model, strategy) with every figure of the text report.
pub fn render_csv(summary: &Summary) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
    for m in &summary.models {
        for s in &m.strategies {
            let sig = s.significance.as_ref();
            let p = s.predicate_counts;
            let o = s.outcomes;
            let row: Vec<String> = vec![
                m.model_id.clone(),
                s.strategy.to_string(),
                s.tasks.to_string(),
                s.passed.to_string(),
                s.pass_rate.to_string(),
                opt(s.delta_pp),
                sig.map_or_else(String::new, |g| g.mcnemar.stars.clone()),
                sig.map_or_else(String::new, |g| g.mcnemar.method.as_str().to_string()),
                sig.map_or_else(String::new, |g| g.mcnemar.b.to_string()),
                sig.map_or_else(String::new, |g| g.mcnemar.c.to_string()),
                opt(sig.and_then(|g| g.mcnemar.statistic)),
                opt(sig.map(|g| g.mcnemar.p_value)),
                sig.map_or_else(String::new, |g| g.excluded_aborted.to_string()),
                opt(s.average_singleton_score),
                p.private_constructor.to_string(),
                p.instance_field.to_string(),
                p.global_access_point.to_string(),
                o.pass.to_string(),
                o.test_fail.to_string(),
                o.compile_error.to_string(),
                o.missing_external_library.to_string(),
                o.non_code_output.to_string(),
                o.other_compile_error.to_string(),
                o.timeout.to_string(),
                o.aborted.to_string(),
            ];
            w.write_record(&row).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::PredicateReport;
    use crate::exec::OutcomeLabel;

    fn rec(model: &str, strategy: StrategyKind, task: usize, kind: OutcomeKind) -> RunRecord {
        RunRecord {
            model_id: model.into(),
            strategy,
            task_id: format!("T/{task}"),
            system_prompt: String::new(),
            exemplars: vec![],
            iterations: vec![],
            selected_candidate: String::new(),
            selected_iteration: 1,
            selected_report: PredicateReport::from_verdicts(task.is_multiple_of(2), task.is_multiple_of(3), false),
            singleton_score: 0.0,
            functional_outcome: Some(OutcomeLabel::new(kind, "")),
            compile_error_category: (kind == OutcomeKind::CompileError).then_some(CompileErrorCategory::NonCodeOutput),
            error: None,
            wall_time_ms: 0,
            config_digest: String::new(),
        }
    }

    /// Baseline passes tasks 0..10 of 20. The strategy passes 0..9 (losing
    /// task 9, b=1) plus 10..16 (c=6): 15/20.
    fn fixture() -> BTreeMap<(String, StrategyKind), Vec<RunRecord>> {
        let mut m = BTreeMap::new();
        let base = (0..20)
            .map(|i| {
                rec("alpha", StrategyKind::Baseline, i, if i < 10 { OutcomeKind::Pass } else { OutcomeKind::TestFail })
            })
            .collect();
        let strat = (0..20)
            .map(|i| {
                let pass = i < 9 || (10..16).contains(&i);
                rec(
                    "alpha",
                    StrategyKind::Instruct,
                    i,
                    if pass { OutcomeKind::Pass } else { OutcomeKind::CompileError },
                )
            })
            .collect();
        m.insert(("alpha".to_string(), StrategyKind::Baseline), base);
        m.insert(("alpha".to_string(), StrategyKind::Instruct), strat);
        let same: Vec<RunRecord> = (0..4)
            .map(|i| {
                rec("beta", StrategyKind::Baseline, i, if i < 3 { OutcomeKind::Pass } else { OutcomeKind::Timeout })
            })
            .collect();
        let mut same_instruct = same.clone();
        same_instruct.iter_mut().for_each(|r| r.strategy = StrategyKind::Instruct);
        m.insert(("beta".to_string(), StrategyKind::Baseline), same);
        m.insert(("beta".to_string(), StrategyKind::Instruct), same_instruct);
        m
    }

    fn summary() -> Summary {
        summarize("r", "abc", &[StrategyKind::Instruct, StrategyKind::Baseline], &fixture())
    }

    #[test]
    fn delta_and_exact_mcnemar() {
        let s = summary();
        let alpha = s.models.iter().find(|m| m.model_id == "alpha").unwrap();
        let inst = alpha.get(StrategyKind::Instruct).unwrap();
        assert_eq!(inst.pass_rate, 75.0);
        assert_eq!(inst.delta_pp, Some(25.0));
        let sig = inst.significance.as_ref().unwrap();
        assert_eq!((sig.mcnemar.b, sig.mcnemar.c), (1, 6));
        // 2 * (C(7,0) + C(7,1)) / 2^7
        assert!((sig.mcnemar.p_value - 2.0 * 8.0 / 128.0).abs() < 1e-12);
        assert_eq!(sig.mcnemar.stars, "");
        assert_eq!(inst.outcomes.compile_error, 5);
        assert_eq!(inst.outcomes.non_code_output, 5);
    }

    #[test]
    fn identical_arms_have_zero_delta() {
        let s = summary();
        let beta = s.models.iter().find(|m| m.model_id == "beta").unwrap();
        let inst = beta.get(StrategyKind::Instruct).unwrap();
        assert_eq!(inst.delta_pp, Some(0.0));
        assert_eq!(inst.significance.as_ref().unwrap().mcnemar.stars, "");
        assert_eq!(inst.significance.as_ref().unwrap().mcnemar.p_value, 1.0);
    }

    #[test]
    fn models_sorted_by_baseline_rate() {
        let s = summary();
        let ids: Vec<_> = s.models.iter().map(|m| m.model_id.as_str()).collect();
        assert_eq!(ids, ["beta", "alpha"]); // 75% before 50%
        assert_eq!(s.strategies, [StrategyKind::Baseline, StrategyKind::Instruct]);
    }

    #[test]
    fn text_layout() {
        let text = render_text(&summary());
        assert!(text.contains("beta       75.0      +0.0\n"), "{text}");
        assert!(text.contains("alpha      50.0     +25.0\n"), "{text}");
        assert!(text.contains("exact_binomial"));
        assert!(text.contains("0.1250"));
    }

    #[test]
    fn json_round_trip_renders_identically() {
        let s = summary();
        let back = parse_json(&render_json(&s)).unwrap();
        assert_eq!(back, s);
        assert_eq!(render_text(&back), render_text(&s));
        assert_eq!(render_csv(&back), render_csv(&s));
    }

    #[test]
    fn csv_shape() {
        let csv_text = render_csv(&summary());
        let mut r = csv::Reader::from_reader(csv_text.as_bytes());
        assert_eq!(r.headers().unwrap().len(), CSV_HEADER.len());
        let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
        assert_eq!(rows.len(), 4);
        let alpha_instruct = rows.iter().find(|r| &r[0] == "alpha" && &r[1] == "instruct").unwrap();
        assert_eq!(&alpha_instruct[5], "25");
        assert_eq!(&alpha_instruct[7], "exact_binomial");
        assert_eq!(&alpha_instruct[11], "0.125");
    }

    #[test]
    fn deterministic_bytes() {
        assert_eq!(render_text(&summary()), render_text(&summary()));
        assert_eq!(render_json(&summary()), render_json(&summary()));
    }
}
