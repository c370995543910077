//! Singleton conformance: three structural predicates over a [`ClassModel`]
//! and the score derived from them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::source::{parse_compilation_unit, select_primary_class, ClassModel, Modifier};

pub const PRIVATE_CONSTRUCTOR_FAILURE: &str =
    "Private Constructor: the class must have at least one constructor and all constructors must be private.";
pub const INSTANCE_FIELD_FAILURE: &str = "Instance Field: the class must have a private static field of its own type.";
pub const GLOBAL_ACCESS_POINT_FAILURE: &str =
    "Global Access Point: the class must have a public static method returning its own type.";

pub const TOTAL_PREDICATES: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateReport {
    pub private_constructor: bool,
    pub instance_field: bool,
    pub global_access_point: bool,
    pub failed_checks: Vec<String>,
}

impl PredicateReport {
    pub fn from_verdicts(private_constructor: bool, instance_field: bool, global_access_point: bool) -> Self {
        let failed_checks = [
            (private_constructor, PRIVATE_CONSTRUCTOR_FAILURE),
            (instance_field, INSTANCE_FIELD_FAILURE),
            (global_access_point, GLOBAL_ACCESS_POINT_FAILURE),
        ]
        .into_iter()
        .filter(|(ok, _)| !ok)
        .map(|(_, msg)| msg.to_string())
        .collect();
        Self { private_constructor, instance_field, global_access_point, failed_checks }
    }

    /// The report for a candidate with no extractable class.
    pub fn all_false() -> Self {
        Self::from_verdicts(false, false, false)
    }

    pub fn verdicts(&self) -> [bool; 3] {
        [self.private_constructor, self.instance_field, self.global_access_point]
    }

    pub fn fulfilled(&self) -> usize {
        self.verdicts().iter().filter(|v| **v).count()
    }

    pub fn is_singleton(&self) -> bool {
        self.verdicts().iter().all(|v| *v)
    }
}

/// Percentage of fulfilled predicates, in steps of 100/3.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SingletonScore(pub f64);

impl SingletonScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoreError {
    #[error("no instances to average")]
    Empty,
}

pub fn evaluate_predicates(class: &ClassModel) -> PredicateReport {
    let own_type = class.class_name.as_str();

    let mut constructors = class.constructors().peekable();
    let private_constructor = constructors.peek().is_some() && constructors.all(|c| c.has(Modifier::Private));

    let instance_field =
        class.fields().any(|f| f.has(Modifier::Private) && f.has(Modifier::Static) && f.declared_type == own_type);

    let global_access_point =
        class.methods().any(|m| m.has(Modifier::Public) && m.has(Modifier::Static) && m.declared_type == own_type);

    PredicateReport::from_verdicts(private_constructor, instance_field, global_access_point)
}

/// Parses `source`, selects the primary class and evaluates it. Sources with
/// no class get the all-false report.
pub fn check_source(source: &str, expected_class: Option<&str>) -> (Option<String>, PredicateReport) {
    let classes = parse_compilation_unit(source);
    match select_primary_class(&classes, expected_class) {
        Some(class) => (Some(class.class_name.clone()), evaluate_predicates(class)),
        None => (None, PredicateReport::all_false()),
    }
}

pub fn singleton_score(report: &PredicateReport) -> SingletonScore {
    SingletonScore(100.0 * report.fulfilled() as f64 / TOTAL_PREDICATES as f64)
}

/// Mean Singleton Score over a corpus of reports.
pub fn corpus_score(reports: &[PredicateReport]) -> Result<f64, ScoreError> {
    if reports.is_empty() {
        return Err(ScoreError::Empty);
    }
    let total: f64 = reports.iter().map(|r| singleton_score(r).value()).sum();
    Ok(total / reports.len() as f64)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::source::tests::{ENGINE_PLAIN, ENGINE_SINGLETON};

    fn report_of(src: &str) -> PredicateReport {
        check_source(src, None).1
    }

    #[test]
    fn singleton_engine_passes_everything() {
        let r = report_of(ENGINE_SINGLETON);
        assert_eq!(r.verdicts(), [true, true, true]);
        assert!(r.failed_checks.is_empty());
        assert!(r.is_singleton());
    }

    #[test]
    fn plain_engine_fails_everything() {
        let r = report_of(ENGINE_PLAIN);
        assert_eq!(r.verdicts(), [false, false, false]);
        assert_eq!(r.failed_checks, [PRIVATE_CONSTRUCTOR_FAILURE, INSTANCE_FIELD_FAILURE, GLOBAL_ACCESS_POINT_FAILURE]);
    }

    /// Brute-force over every modifier combination of the holder field: only
    /// `private static` satisfies the instance-field predicate.
    #[test]
    fn holder_field_modifier_sweep() {
        let options = ["", "private ", "static ", "final "];
        for mask in 0u8..16 {
            let mods: String = (0..4).filter(|b| mask & (1 << b) != 0).map(|b| options[b]).collect();
            for vis in ["", "public ", "protected "] {
                let (field_mods, expect) = if mods.contains("private") {
                    (mods.clone(), mods.contains("static"))
                } else {
                    (format!("{vis}{mods}"), false)
                };
                let src = format!(
                    "class Engine {{ private Engine() {{}} {field_mods}Engine holder; \
                     public static Engine getInstance() {{ return null; }} }}"
                );
                let r = report_of(&src);
                assert_eq!(r.verdicts(), [true, expect, true], "field modifiers {field_mods:?}");
            }
        }
    }

    #[test]
    fn non_static_holder_scores_two_thirds() {
        let r = report_of(
            "class Engine { private Engine() {} private Engine instance; \
             public static Engine getInstance() { return null; } }",
        );
        assert_eq!(r.verdicts(), [true, false, true]);
        assert_eq!(r.failed_checks, [INSTANCE_FIELD_FAILURE]);
        assert!((singleton_score(&r).value() - 200.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn constructor_rules() {
        let cases = [
            ("class E { }", false),
            ("class E { private E() {} }", true),
            ("class E { private E() {} private E(int x) {} }", true),
            ("class E { private E() {} public E(int x) {} }", false),
            ("class E { protected E() {} }", false),
            ("class E { E() {} }", false),
            ("class E { private E() {} E(int x) {} }", false),
        ];
        for (src, expect) in cases {
            assert_eq!(report_of(src).private_constructor, expect, "{src}");
        }
    }

    #[test]
    fn accessor_rules() {
        let cases = [
            ("class E { public static E getInstance() { return null; } }", true),
            ("class E { public static E anyName() { return null; } }", true),
            ("class E { public E getInstance() { return null; } }", false),
            ("class E { static E getInstance() { return null; } }", false),
            ("class E { private static E getInstance() { return null; } }", false),
            ("class E { public static Object getInstance() { return null; } }", false),
            ("class E { public static synchronized E getInstance() { return null; } }", true),
            ("class E { public static java.util.Optional<E> getInstance() { return null; } }", false),
            ("class E { public static E[] getInstance() { return null; } }", false),
        ];
        for (src, expect) in cases {
            assert_eq!(report_of(src).global_access_point, expect, "{src}");
        }
    }

    #[test]
    fn nested_class_cannot_supply_predicates() {
        let src = "class E { static class Holder { private static final E INSTANCE = null; } \
                   public static E getInstance() { return Holder.INSTANCE; } private E() {} }";
        assert_eq!(report_of(src).verdicts(), [true, false, true]);
    }

    #[test]
    fn no_class_means_all_false() {
        let (name, r) = check_source("Sure! Here is the solution in prose.", None);
        assert!(name.is_none());
        assert_eq!(singleton_score(&r).value(), 0.0);
    }

    #[test]
    fn scores() {
        assert_eq!(singleton_score(&PredicateReport::from_verdicts(true, true, true)).value(), 100.0);
        assert_eq!(singleton_score(&PredicateReport::from_verdicts(false, false, false)).value(), 0.0);
        assert!(
            (singleton_score(&PredicateReport::from_verdicts(true, false, true)).value() - 66.666_666_666_666_67).abs()
                < 1e-9
        );
    }

    #[test]
    fn corpus_means() {
        let full = PredicateReport::from_verdicts(true, true, true);
        let none = PredicateReport::all_false();
        let two = PredicateReport::from_verdicts(true, false, true);
        assert_eq!(corpus_score(&[full.clone(), full.clone(), full.clone()]).unwrap(), 100.0);
        assert_eq!(corpus_score(&[full.clone(), none]).unwrap(), 50.0);

        let mut reports = vec![full; 163];
        reports.push(two);
        // oracle: (163 * 100 + 200/3) / 164
        let expected = (163.0 * 100.0 + 200.0 / 3.0) / 164.0;
        let got = corpus_score(&reports).unwrap();
        assert!((got - expected).abs() < 1e-9);
        assert!((got - 99.797).abs() < 5e-4);

        assert_eq!(corpus_score(&[]), Err(ScoreError::Empty));
        assert_eq!(ScoreError::Empty.to_string(), "no instances to average");
    }

    #[test]
    fn exhaustive_score_semantics() {
        for mask in 0u8..8 {
            let r = PredicateReport::from_verdicts(mask & 1 != 0, mask & 2 != 0, mask & 4 != 0);
            assert_eq!(r.failed_checks.len(), 3 - r.fulfilled());
            assert_eq!(r.is_singleton(), singleton_score(&r).value() == 100.0);
        }
    }

    fn member_decl() -> impl Strategy<Value = String> {
        prop_oneof![
            Just("private int count;".to_string()),
            Just("public static Engine create() { return null; }".to_string()),
            Just("Engine self;".to_string()),
            Just("public Engine(int x) {}".to_string()),
            Just("private static Engine holder;".to_string()),
            Just("static void helper() {}".to_string()),
            Just("protected static final Engine CACHE = null;".to_string()),
            Just("private Engine() {}".to_string()),
        ]
    }

    proptest! {
        #[test]
        fn existential_predicates_are_monotone(
            base in prop::collection::vec(member_decl(), 0..6),
            extra in member_decl(),
        ) {
            let before = report_of(&format!("class Engine {{ {} }}", base.join(" ")));
            let after = report_of(&format!("class Engine {{ {} {} }}", base.join(" "), extra));
            prop_assert!(!before.instance_field || after.instance_field);
            prop_assert!(!before.global_access_point || after.global_access_point);
        }

        #[test]
        fn renaming_is_invariant(
            base in prop::collection::vec(member_decl(), 0..6),
            new_name in "[A-Z][a-z]{2,8}",
        ) {
            let body = base.join(" ");
            let original = report_of(&format!("class Engine {{ {body} }}"));
            let renamed_src = format!("class Engine {{ {body} }}").replace("Engine", &new_name);
            prop_assert_eq!(original, report_of(&renamed_src));
        }
    }
}
