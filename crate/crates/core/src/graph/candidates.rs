use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::PageGraph;
use crate::corpus::{PageDoc, TextFreqTable};
use crate::text::char_len;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("candidate config: {0}")]
    Invalid(String),
}

/// Thresholds deciding which node pairs receive a virtual edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CandidateConfig {
    /// Maximum structural hop distance between the pair.
    pub h: usize,
    /// Inclusive text length bounds, in characters, for both nodes.
    pub l_min: usize,
    pub l_max: usize,
    /// The relation node's text frequency must exceed this.
    pub m: f64,
    /// The value node's text frequency must be below this.
    pub n: f64,
}

impl Default for CandidateConfig {
    fn default() -> Self {
        Self {
            h: 5,
            l_min: 2,
            l_max: 100,
            m: 0.5,
            n: 0.5,
        }
    }
}

impl CandidateConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.h == 0 {
            return fail("h must be positive");
        }
        if self.l_min == 0 || self.l_min > self.l_max {
            return fail("need 0 < l_min <= l_max");
        }
        if !self.m.is_finite() || self.m < 0.0 {
            return fail("m must be finite and >= 0");
        }
        if !self.n.is_finite() || self.n <= 0.0 {
            return fail("n must be finite and > 0");
        }
        Ok(())
    }

    fn length_ok(&self, text: &str) -> bool {
        let len = char_len(text);
        !text.is_empty() && self.l_min <= len && len <= self.l_max
    }

    pub fn is_relation_candidate(&self, text: &str, freq: f64) -> bool {
        self.length_ok(text) && freq > self.m
    }

    pub fn is_value_candidate(&self, text: &str, freq: f64) -> bool {
        self.length_ok(text) && freq < self.n
    }
}

/// Ordered `(k, v)` pairs satisfying all four candidate conditions, sorted.
///
/// `k` is the relation-label candidate and `v` the value candidate; a pair
/// may appear in both orientations when both qualify.
pub fn generate_virtual_edges(
    graph: &PageGraph,
    doc: &PageDoc,
    freq: &TextFreqTable,
    cfg: &CandidateConfig,
) -> Vec<(usize, usize)> {
    let n = doc.nodes.len();
    let node_freq: Vec<f64> = doc.nodes.iter().map(|nd| freq.freq(&nd.text)).collect();
    let is_value: Vec<bool> = (0..n)
        .map(|i| cfg.is_value_candidate(&doc.nodes[i].text, node_freq[i]))
        .collect();

    let mut out = Vec::new();
    for k in 0..n {
        if !cfg.is_relation_candidate(&doc.nodes[k].text, node_freq[k]) {
            continue;
        }
        let dist = graph.distances_from(k, cfg.h);
        for (v, d) in dist.iter().enumerate() {
            if v != k && d.is_some() && is_value[v] {
                out.push((k, v));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_valid() {
        assert!(CandidateConfig::default().validate().is_ok());
        let bad = CandidateConfig { l_min: 5, l_max: 2, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = CandidateConfig { h: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = CandidateConfig { n: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn strict_frequency_bounds() {
        let cfg = CandidateConfig::default();
        assert!(!cfg.is_relation_candidate("Price", 0.5));
        assert!(cfg.is_relation_candidate("Price", 0.51));
        assert!(!cfg.is_value_candidate("$1", 0.5));
        assert!(cfg.is_value_candidate("$1", 0.49));
        // length bounds inclusive
        assert!(cfg.is_value_candidate("ab", 0.0));
        assert!(!cfg.is_value_candidate("a", 0.0));
        assert!(cfg.is_value_candidate(&"x".repeat(100), 0.0));
        assert!(!cfg.is_value_candidate(&"x".repeat(101), 0.0));
    }
}
