use std::collections::BTreeMap;

use relgraph_core::eval::{evaluate, evaluate_unit, mean, EvalReport, MatchRule, Metrics, UnitKey, UnitTruth, VerticalRow};
use relgraph_core::ExtractionTuple;

fn t(relation: &str, value: &str) -> ExtractionTuple {
    ExtractionTuple { relation: relation.into(), value: value.into(), k_node: 0, v_node: 0, score: 1.0 }
}

fn truth(tuples: &[(&str, &str)]) -> UnitTruth {
    UnitTruth {
        surface_forms: vec!["Price".into(), "MSRP".into()],
        tuples: tuples.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
    }
}

fn check(m: Metrics, counts: (usize, usize, usize), p: f64, r: f64, f1: f64) {
    assert_eq!((m.tp, m.fp, m.fn_), counts);
    assert_eq!(m.precision, p);
    assert_eq!(m.recall, r);
    assert_eq!(m.f1, f1);
}

fn four_annotations() -> UnitTruth {
    truth(&[("Price", "$1"), ("Price", "$2"), ("MSRP", "$3"), ("MSRP", "$4")])
}

#[test]
fn two_of_three_predicted_half_recalled() {
    let preds = [t("Price", "$1"), t("MSRP", "$3"), t("Price", "$9")];
    let m = evaluate_unit(&preds, &four_annotations(), &MatchRule);
    check(m, (2, 1, 2), 2.0 / 3.0, 1.0 / 2.0, 4.0 / 7.0);
}

#[test]
fn perfect_unit() {
    let preds = [t("Price", "$1"), t("MSRP", "$3")];
    let m = evaluate_unit(&preds, &truth(&[("Price", "$1"), ("MSRP", "$3")]), &MatchRule);
    check(m, (2, 0, 0), 1.0, 1.0, 1.0);
}

#[test]
fn silence_scores_zero() {
    let m = evaluate_unit(&[], &truth(&[("Price", "$1"), ("Price", "$2"), ("MSRP", "$3")]), &MatchRule);
    check(m, (0, 0, 3), 0.0, 0.0, 0.0);
}

#[test]
fn right_value_under_wrong_relation_is_false_positive() {
    let preds = [t("Price", "$1"), t("Weight", "$1")];
    let m = evaluate_unit(&preds, &truth(&[("Price", "$1")]), &MatchRule);
    check(m, (1, 1, 0), 1.0 / 2.0, 1.0, 2.0 / 3.0);
}

#[test]
fn normalization_and_single_consumption() {
    // Case, spacing and trailing punctuation are normalized; the duplicate
    // prediction cannot consume the same annotation twice.
    let preds = [t(" price ", "$12.99."), t("PRICE", "$12.99"), t("msrp", "$15")];
    let m = evaluate_unit(&preds, &truth(&[("Price", "$12.99"), ("MSRP", "$15")]), &MatchRule);
    check(m, (2, 1, 0), 2.0 / 3.0, 1.0, 4.0 / 5.0);
}

#[test]
fn pooling_over_units() {
    let a = UnitKey::new("v/w/p1", "price");
    let b = UnitKey::new("v/w/p2", "price");
    let preds = BTreeMap::from([(a.clone(), vec![t("Price", "$1"), t("MSRP", "$3"), t("Price", "$9")])]);
    let gt = BTreeMap::from([(a, four_annotations()), (b, truth(&[("Price", "$1"), ("Price", "$2"), ("MSRP", "$3")]))]);
    let m = evaluate(&preds, &gt, &MatchRule);
    check(m, (2, 1, 5), 2.0 / 3.0, 2.0 / 7.0, 2.0 / 5.0);
}

#[test]
fn report_average_of_four_verticals() {
    let row = |v: &str, f1: f64| VerticalRow {
        vertical: v.into(),
        metrics: Metrics { f1, precision: f1, recall: f1, ..Metrics::default() },
    };
    let report = EvalReport::from_rows(
        "table",
        vec![row("a", 0.78), row("b", 0.79), row("c", 0.96), row("d", 0.83)],
        Vec::new(),
    );
    assert!((report.average_f1 - 0.84).abs() < 1e-12, "{}", report.average_f1);
    assert_eq!(format!("{:.2}", report.average_f1), "0.84");
    assert_eq!(report.average_f1, mean(&[0.78, 0.79, 0.96, 0.83]));
}
