use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{Metrics, UnitKey};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Unweighted mean; 0 for an empty slice.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerticalRow {
    pub vertical: String,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordRow {
    pub vertical: String,
    pub keyword: String,
    pub metrics: Metrics,
}

/// Metrics pooled per vertical, their unweighted averages, and a per-keyword
/// breakdown sorted by F1 (best first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub label: String,
    pub verticals: Vec<VerticalRow>,
    pub average_precision: f64,
    pub average_recall: f64,
    pub average_f1: f64,
    pub keywords: Vec<KeywordRow>,
}

fn vertical_of(page: &str) -> &str {
    page.split('/').next().unwrap_or(page)
}

impl EvalReport {
    pub fn from_units(label: impl Into<String>, units: &BTreeMap<UnitKey, Metrics>) -> Self {
        let mut verts: BTreeMap<&str, Metrics> = BTreeMap::new();
        let mut kws: BTreeMap<(&str, &str), Metrics> = BTreeMap::new();
        for (k, m) in units {
            let v = vertical_of(&k.page);
            let e = verts.entry(v).or_default();
            *e = e.merge(m);
            let e = kws.entry((v, k.keyword.as_str())).or_default();
            *e = e.merge(m);
        }
        let verticals: Vec<VerticalRow> = verts
            .into_iter()
            .map(|(v, metrics)| VerticalRow { vertical: v.to_string(), metrics })
            .collect();
        let keywords = per_keyword_rows(
            kws.into_iter()
                .map(|((v, k), metrics)| KeywordRow { vertical: v.into(), keyword: k.into(), metrics })
                .collect(),
        );
        Self::from_rows(label, verticals, keywords)
    }

    pub fn from_rows(label: impl Into<String>, verticals: Vec<VerticalRow>, keywords: Vec<KeywordRow>) -> Self {
        let col = |f: fn(&Metrics) -> f64| mean(&verticals.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>());
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            label: label.into(),
            average_precision: col(|m| m.precision),
            average_recall: col(|m| m.recall),
            average_f1: col(|m| m.f1),
            verticals,
            keywords,
        }
    }

    /// All verticals pooled into one count.
    pub fn pooled(&self) -> Metrics {
        self.verticals.iter().map(|r| r.metrics).sum()
    }

    pub fn top_keywords(&self, k: usize) -> &[KeywordRow] {
        &self.keywords[..k.min(self.keywords.len())]
    }

    pub fn bottom_keywords(&self, k: usize) -> &[KeywordRow] {
        &self.keywords[self.keywords.len() - k.min(self.keywords.len())..]
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.label);
        let _ = writeln!(s, "{:<16} {:>9} {:>9} {:>9} {:>6} {:>6} {:>6}", "vertical", "precision", "recall", "f1", "tp", "fp", "fn");
        for r in &self.verticals {
            let m = &r.metrics;
            let _ = writeln!(
                s,
                "{:<16} {:>9.3} {:>9.3} {:>9.3} {:>6} {:>6} {:>6}",
                r.vertical, m.precision, m.recall, m.f1, m.tp, m.fp, m.fn_
            );
        }
        let _ = writeln!(
            s,
            "{:<16} {:>9.3} {:>9.3} {:>9.3}",
            "average", self.average_precision, self.average_recall, self.average_f1
        );
        s.push('\n');
        let _ = writeln!(s, "{:<16} {:<28} {:>9} {:>9} {:>9} {:>8}", "vertical", "keyword", "precision", "recall", "f1", "support");
        for r in &self.keywords {
            let m = &r.metrics;
            let _ = writeln!(
                s,
                "{:<16} {:<28} {:>9.3} {:>9.3} {:>9.3} {:>8}",
                r.vertical, r.keyword, m.precision, m.recall, m.f1, m.support()
            );
        }
        s
    }
}

/// Sorts by F1 descending, then vertical and keyword.
pub fn per_keyword_rows(mut rows: Vec<KeywordRow>) -> Vec<KeywordRow> {
    rows.sort_by(|a, b| {
        b.metrics
            .f1
            .total_cmp(&a.metrics.f1)
            .then_with(|| a.vertical.cmp(&b.vertical))
            .then_with(|| a.keyword.cmp(&b.keyword))
    });
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationArm {
    pub arm: String,
    pub verticals: Vec<VerticalRow>,
    pub average_f1: f64,
    /// `average_f1 − full arm average_f1`.
    pub delta_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub schema_version: u32,
    pub label: String,
    pub arms: Vec<AblationArm>,
}

impl AblationReport {
    /// The first report is the reference arm for the deltas.
    pub fn from_reports(label: impl Into<String>, arms: &[(String, EvalReport)]) -> Self {
        let base = arms.first().map(|(_, r)| r.average_f1).unwrap_or(0.0);
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            label: label.into(),
            arms: arms
                .iter()
                .map(|(name, r)| AblationArm {
                    arm: name.clone(),
                    verticals: r.verticals.clone(),
                    average_f1: r.average_f1,
                    delta_f1: r.average_f1 - base,
                })
                .collect(),
        }
    }

    pub fn arm(&self, name: &str) -> Option<&AblationArm> {
        self.arms.iter().find(|a| a.arm == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per arm: per-vertical P/R/F1, then average F1 with its delta.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.label);
        let verticals: Vec<&str> = self
            .arms
            .first()
            .map(|a| a.verticals.iter().map(|r| r.vertical.as_str()).collect())
            .unwrap_or_default();
        let _ = write!(s, "{:<22}", "arm");
        for v in &verticals {
            let _ = write!(s, " | {:^20}", v);
        }
        let _ = writeln!(s, " | {:^16}", "average f1");
        let _ = write!(s, "{:<22}", "");
        for _ in &verticals {
            let _ = write!(s, " | {:>6} {:>6} {:>6}", "P", "R", "F1");
        }
        let _ = writeln!(s, " |");
        for a in &self.arms {
            let _ = write!(s, "{:<22}", a.arm);
            for v in &verticals {
                match a.verticals.iter().find(|r| r.vertical == *v) {
                    Some(r) => {
                        let _ = write!(s, " | {:>6.2} {:>6.2} {:>6.2}", r.metrics.precision, r.metrics.recall, r.metrics.f1);
                    }
                    None => {
                        let _ = write!(s, " | {:>6} {:>6} {:>6}", "-", "-", "-");
                    }
                }
            }
            if a.delta_f1 == 0.0 {
                let _ = writeln!(s, " | {:>6.2}", a.average_f1);
            } else {
                let _ = writeln!(s, " | {:>6.2} ({:+.2})", a.average_f1, a.delta_f1);
            }
        }
        s
    }
}
