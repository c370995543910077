//! Pass rates, baseline deltas, McNemar significance and predicate counts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::checker::{corpus_score, PredicateReport};
use crate::guidance::RunRecord;

/// Discordant counts below this use the exact binomial test.
pub const EXACT_THRESHOLD: u64 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PairedOutcomes {
    pub both_pass: u64,
    pub baseline_only_pass: u64,
    pub strategy_only_pass: u64,
    pub both_fail: u64,
}

/// Paired outcomes over the tasks both arms share, plus how many shared tasks
/// were dropped because either arm aborted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pairing {
    pub pairs: PairedOutcomes,
    pub excluded_aborted: u64,
}

impl PairedOutcomes {
    pub fn total(&self) -> u64 {
        self.both_pass + self.baseline_only_pass + self.strategy_only_pass + self.both_fail
    }

    pub fn from_records(baseline: &[RunRecord], strategy: &[RunRecord]) -> Pairing {
        let base: BTreeMap<&str, &RunRecord> = baseline.iter().map(|r| (r.task_id.as_str(), r)).collect();
        let mut pairs = PairedOutcomes::default();
        let mut excluded_aborted = 0;
        for s in strategy {
            let Some(b) = base.get(s.task_id.as_str()) else { continue };
            if b.aborted() || s.aborted() {
                excluded_aborted += 1;
                continue;
            }
            match (b.passed(), s.passed()) {
                (true, true) => pairs.both_pass += 1,
                (true, false) => pairs.baseline_only_pass += 1,
                (false, true) => pairs.strategy_only_pass += 1,
                (false, false) => pairs.both_fail += 1,
            }
        }
        Pairing { pairs, excluded_aborted }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McNemarMethod {
    ExactBinomial,
    ChiSquareCc,
}

impl McNemarMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            McNemarMethod::ExactBinomial => "exact_binomial",
            McNemarMethod::ChiSquareCc => "chi_square_cc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McNemarResult {
    pub b: u64,
    pub c: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistic: Option<f64>,
    pub p_value: f64,
    pub method: McNemarMethod,
    pub stars: String,
}

pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

pub fn mcnemar(pairs: &PairedOutcomes) -> McNemarResult {
    let (b, c) = (pairs.baseline_only_pass, pairs.strategy_only_pass);
    let n = b + c;
    let (statistic, p_value, method) = if n < EXACT_THRESHOLD {
        (None, exact_two_sided(b, c), McNemarMethod::ExactBinomial)
    } else {
        // |b-c|-1 is clamped at zero so b = c gives p = 1 like the exact test
        let diff = (b.abs_diff(c) as f64 - 1.0).max(0.0);
        let stat = diff * diff / n as f64;
        let chi = ChiSquared::new(1.0).expect("one degree of freedom");
        (Some(stat), chi.sf(stat).clamp(0.0, 1.0), McNemarMethod::ChiSquareCc)
    };
    McNemarResult { b, c, statistic, p_value, method, stars: stars(p_value).to_string() }
}

fn exact_two_sided(b: u64, c: u64) -> f64 {
    let n = b + c;
    if n == 0 {
        return 1.0;
    }
    let mut coeff = 1.0f64;
    let mut tail = 0.0f64;
    for k in 0..=b.min(c) {
        if k > 0 {
            coeff = coeff * (n - k + 1) as f64 / k as f64;
        }
        tail += coeff;
    }
    (2.0 * tail * 0.5f64.powi(n as i32)).min(1.0)
}

/// Percentage of records whose functional outcome is `Pass`; 0 for no records.
pub fn pass_at_1(records: &[RunRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    100.0 * records.iter().filter(|r| r.passed()).count() as f64 / records.len() as f64
}

pub fn delta_pp(strategy_rate: f64, baseline_rate: f64) -> f64 {
    strategy_rate - baseline_rate
}

/// Mean Singleton Score over selected candidates; `None` for no records.
pub fn average_singleton_score(records: &[RunRecord]) -> Option<f64> {
    let reports: Vec<PredicateReport> = records.iter().map(|r| r.selected_report.clone()).collect();
    corpus_score(&reports).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PredicateCounts {
    pub private_constructor: u64,
    pub instance_field: u64,
    pub global_access_point: u64,
}

pub fn predicate_counts(records: &[RunRecord]) -> PredicateCounts {
    let mut counts = PredicateCounts::default();
    for r in records {
        let rep = &r.selected_report;
        counts.private_constructor += rep.private_constructor as u64;
        counts.instance_field += rep.instance_field as u64;
        counts.global_access_point += rep.global_access_point as u64;
    }
    counts
}
