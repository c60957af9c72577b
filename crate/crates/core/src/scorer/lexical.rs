use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{ScorerError, SemanticFeatures, SemanticScorer, SentencePair};
use crate::text::{char_len, words};

pub const LEXICAL_FEATURE_LEN: usize = 5;

/// Word-overlap and character n-gram features; no learned weights.
///
/// Features, in order:
/// 1. word Jaccard between keyword+description and the relation text,
/// 2. the same against the value text,
/// 3. character-trigram cosine between keyword and relation text,
/// 4. value length over the keyword's median annotated value length
///    (1.0 when unknown),
/// 5. 1.0 if the value reads as a number, amount of money or date.
///
/// The scalar score is the mean of the first three.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LexicalScorer {
    /// Median value length per lowercased keyword.
    pub median_value_len: BTreeMap<String, f64>,
}

impl LexicalScorer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records median value lengths from `(keyword, value)` pairs.
    pub fn fit<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut lens: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (k, v) in pairs {
            lens.entry(k.to_lowercase()).or_default().push(char_len(v));
        }
        let median_value_len = lens
            .into_iter()
            .filter_map(|(k, mut l)| {
                l.sort_unstable();
                let n = l.len();
                let m = if n % 2 == 1 {
                    l[n / 2] as f64
                } else {
                    (l[n / 2 - 1] + l[n / 2]) as f64 / 2.0
                };
                (m > 0.0).then_some((k, m))
            })
            .collect();
        Self { median_value_len }
    }

    pub fn features(&self, keyword: &str, description: &str, k_text: &str, v_text: &str) -> SemanticFeatures {
        let query: BTreeSet<String> = words(keyword).into_iter().chain(words(description)).collect();
        let k_words: BTreeSet<String> = words(k_text).into_iter().collect();
        let v_words: BTreeSet<String> = words(v_text).into_iter().collect();
        let jk = word_jaccard(&query, &k_words);
        let jv = word_jaccard(&query, &v_words);
        let tri = trigram_cosine(keyword, k_text);
        let ratio = match self.median_value_len.get(&keyword.to_lowercase()) {
            Some(&m) => char_len(v_text) as f64 / m,
            None => 1.0,
        };
        let valuey = if looks_like_value(v_text) { 1.0 } else { 0.0 };
        SemanticFeatures {
            vector: vec![jk, jv, tri, ratio, valuey],
            scalar_score: (jk + jv + tri) / 3.0,
        }
    }
}

impl SemanticScorer for LexicalScorer {
    fn identity(&self) -> String {
        "lexical-v1".into()
    }

    fn feature_len(&self) -> usize {
        LEXICAL_FEATURE_LEN
    }

    fn score(&self, pair: &SentencePair) -> Result<SemanticFeatures, ScorerError> {
        let (k, d, r, v) = pair.fields()?;
        Ok(self.features(&k, &d, &r, &v))
    }
}

/// `|a ∩ b| / |a ∪ b|`, 0 when both are empty.
pub fn word_jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

fn trigrams(s: &str) -> BTreeMap<[char; 3], f64> {
    let padded: Vec<char> = std::iter::once(' ')
        .chain(s.to_lowercase().chars())
        .chain(std::iter::once(' '))
        .collect();
    let mut out = BTreeMap::new();
    if s.is_empty() {
        return out;
    }
    for w in padded.windows(3) {
        *out.entry([w[0], w[1], w[2]]).or_insert(0.0) += 1.0;
    }
    out
}

/// Cosine similarity of lowercased character-trigram count vectors (each
/// string padded with one space on both sides).
pub fn trigram_cosine(a: &str, b: &str) -> f64 {
    let ta = trigrams(a);
    let tb = trigrams(b);
    if ta.is_empty() || tb.is_empty() {
        return 0.0;
    }
    let dot: f64 = ta.iter().filter_map(|(g, x)| tb.get(g).map(|y| x * y)).sum();
    let na: f64 = ta.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = tb.values().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).min(1.0)
}

const CURRENCY: &[char] = &['$', '€', '£', '¥', '₹'];
const CURRENCY_CODES: &[&str] = &["usd", "eur", "gbp", "jpy", "cad", "aud"];
const MONTHS: &[&str] = &[
    "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec",
];

fn is_number(s: &str) -> bool {
    let s = s.trim();
    let s = s.strip_prefix(['+', '-']).unwrap_or(s);
    let s = s.strip_suffix('%').unwrap_or(s);
    if s.is_empty() || !s.starts_with(|c: char| c.is_ascii_digit()) {
        return false;
    }
    let cleaned: String = s.chars().filter(|&c| c != ',').collect();
    cleaned.parse::<f64>().is_ok()
}

fn is_date(s: &str) -> bool {
    let s = s.trim();
    // 2021-03-04, 03/04/2021, 4.3.2021
    for sep in ['-', '/', '.'] {
        let parts: Vec<&str> = s.split(sep).collect();
        if parts.len() == 3
            && parts.iter().all(|p| !p.is_empty() && p.len() <= 4 && p.chars().all(|c| c.is_ascii_digit()))
            && parts.iter().any(|p| p.len() == 4 || p.len() == 2)
        {
            return true;
        }
    }
    // March 4, 2021 / 4 March 2021 / Mar 2021
    let toks = words(s);
    let has_month = toks
        .iter()
        .any(|t| t.len() >= 3 && MONTHS.iter().any(|m| t.starts_with(m)) && t.chars().all(char::is_alphabetic));
    let has_year = toks
        .iter()
        .any(|t| t.len() == 4 && t.chars().all(|c| c.is_ascii_digit()));
    has_month && has_year && toks.len() <= 4
}

/// True when `s` reads as a plain number, an amount of money or a date.
pub fn looks_like_value(s: &str) -> bool {
    let t = s.trim();
    if t.is_empty() {
        return false;
    }
    if is_number(t) || is_date(t) {
        return true;
    }
    let stripped = t.trim_start_matches(CURRENCY).trim_end_matches(CURRENCY);
    if stripped.len() != t.len() && is_number(stripped) {
        return true;
    }
    let lower = t.to_lowercase();
    for code in CURRENCY_CODES {
        if let Some(rest) = lower.strip_prefix(code).or_else(|| lower.strip_suffix(code)) {
            if is_number(rest) {
                return true;
            }
        }
    }
    false
}
