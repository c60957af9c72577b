use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{Annotation, Vertical};
use crate::scorer::ExtractionTuple;
use crate::text::collapse_whitespace;

/// Tuple-level counts and rates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        // 2PR/(P+R) in count form, which rounds once.
        let f1 = ratio(2 * tp, 2 * tp + fp + fn_);
        Self { tp, fp, fn_, precision, recall, f1 }
    }

    /// Pools counts.
    pub fn merge(&self, other: &Metrics) -> Metrics {
        Metrics::from_counts(self.tp + other.tp, self.fp + other.fp, self.fn_ + other.fn_)
    }

    /// Number of annotations behind these counts.
    pub fn support(&self) -> usize {
        self.tp + self.fn_
    }
}

impl std::iter::Sum for Metrics {
    fn sum<I: Iterator<Item = Metrics>>(iter: I) -> Self {
        iter.fold(Metrics::default(), |a, b| a.merge(&b))
    }
}

/// How predicted strings are compared with annotations: lowercase, collapse
/// whitespace, strip trailing punctuation from `.,;:!?…`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRule;

impl MatchRule {
    pub fn normalize(&self, s: &str) -> String {
        let s = collapse_whitespace(&s.to_lowercase());
        s.trim_end_matches(|c: char| ".,;:!?…".contains(c) || c.is_whitespace())
            .to_string()
    }
}

/// One (page, keyword) evaluation unit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UnitKey {
    /// `vertical/website/page`.
    pub page: String,
    pub keyword: String,
}

impl UnitKey {
    pub fn new(page: impl Into<String>, keyword: impl Into<String>) -> Self {
        Self { page: page.into(), keyword: keyword.into() }
    }
}

/// Annotations of one unit together with the keyword's accepted relation texts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UnitTruth {
    pub surface_forms: Vec<String>,
    pub tuples: Vec<(String, String)>,
}

/// Ground truth keyed by unit, for every page and keyword of the given
/// websites (units without annotations are included with empty tuples).
pub fn ground_truth_units(
    vertical: &Vertical,
    website_filter: impl Fn(&str) -> bool,
    rule: &MatchRule,
) -> BTreeMap<UnitKey, UnitTruth> {
    let mut out = BTreeMap::new();
    for site in vertical.websites.iter().filter(|w| website_filter(&w.id)) {
        let mut by_page: BTreeMap<&str, Vec<&Annotation>> = BTreeMap::new();
        for a in &site.annotations {
            by_page.entry(a.page_id.as_str()).or_default().push(a);
        }
        for page in &site.pages {
            let qualified = page.page_ref().qualified();
            let anns = by_page.get(page.page_id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            for kw in &vertical.keywords {
                let forms: BTreeSet<String> = kw.surface_forms.iter().map(|f| rule.normalize(f)).collect();
                let tuples = anns
                    .iter()
                    .filter(|a| forms.contains(&rule.normalize(&a.relation)))
                    .map(|a| (a.relation.clone(), a.value.clone()))
                    .collect();
                out.insert(
                    UnitKey::new(qualified.clone(), kw.keyword.clone()),
                    UnitTruth { surface_forms: kw.surface_forms.clone(), tuples },
                );
            }
        }
    }
    out
}

/// Scores one unit. A prediction is a true positive when its relation is one
/// of the keyword's surface forms and its value equals a not yet consumed
/// annotated value; each annotation is consumed at most once.
pub fn evaluate_unit(predictions: &[ExtractionTuple], truth: &UnitTruth, rule: &MatchRule) -> Metrics {
    let forms: BTreeSet<String> = truth.surface_forms.iter().map(|f| rule.normalize(f)).collect();
    let mut open: Vec<Option<String>> = truth.tuples.iter().map(|(_, v)| Some(rule.normalize(v))).collect();
    let mut tp = 0;
    for p in predictions {
        if !forms.contains(&rule.normalize(&p.relation)) {
            continue;
        }
        let v = rule.normalize(&p.value);
        if let Some(slot) = open.iter_mut().find(|s| s.as_deref() == Some(v.as_str())) {
            *slot = None;
            tp += 1;
        }
    }
    Metrics::from_counts(tp, predictions.len() - tp, truth.tuples.len() - tp)
}

/// Pooled metrics over every unit present in either map.
pub fn evaluate(
    predictions: &BTreeMap<UnitKey, Vec<ExtractionTuple>>,
    truth: &BTreeMap<UnitKey, UnitTruth>,
    rule: &MatchRule,
) -> Metrics {
    evaluate_by_unit(predictions, truth, rule).into_values().sum()
}

pub fn evaluate_by_unit(
    predictions: &BTreeMap<UnitKey, Vec<ExtractionTuple>>,
    truth: &BTreeMap<UnitKey, UnitTruth>,
    rule: &MatchRule,
) -> BTreeMap<UnitKey, Metrics> {
    let empty = UnitTruth::default();
    let keys: BTreeSet<&UnitKey> = predictions.keys().chain(truth.keys()).collect();
    keys.into_iter()
        .map(|k| {
            let preds = predictions.get(k).map(Vec::as_slice).unwrap_or(&[]);
            (k.clone(), evaluate_unit(preds, truth.get(k).unwrap_or(&empty), rule))
        })
        .collect()
}
