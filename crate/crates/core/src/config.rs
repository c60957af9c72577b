//! Run configuration: one serializable tree with layered overrides.
//!
//! Layers are merged as JSON values, lowest precedence first: built-in
//! defaults, the config file, `RELGRAPH_*` environment variables, then
//! command-line flags. Environment names map onto the tree as
//! `RELGRAPH_<SECTION>_<KEY>` (for example `RELGRAPH_HEAD_POSITIVE_WEIGHT`
//! sets `head.positive_weight`) or `RELGRAPH_<KEY>` for top-level keys
//! (`RELGRAPH_SEED`).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::eval::{PipelineConfig, SplitMode, SplitSpec};
use crate::gnn::GraphTrainConfig;
use crate::graph::CandidateConfig;
use crate::scorer::HeadTrainConfig;

pub const ENV_PREFIX: &str = "RELGRAPH_";

#[derive(Debug, Error)]
pub enum ConfigInvalid {
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error("config does not parse: {0}")]
    Parse(String),
}

impl ConfigInvalid {
    fn field(field: &str, message: impl ToString) -> Self {
        Self::Field { field: field.into(), message: message.to_string() }
    }
}

/// Which semantic scorer feeds the fusion head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScorerSelection {
    #[default]
    Lexical,
    /// `host:port`, or `stdio:<program>` to spawn a local process.
    Neural { endpoint: String, timeout_ms: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    /// Worker threads; `None` uses every available core.
    pub workers: Option<usize>,
    pub use_graph: bool,
    pub candidates: CandidateConfig,
    pub graph: GraphTrainConfig,
    pub head: HeadTrainConfig,
    pub scorer: ScorerSelection,
    pub split: SplitMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            out: PathBuf::from("out"),
            seed: 0,
            workers: None,
            use_graph: true,
            candidates: CandidateConfig::default(),
            graph: GraphTrainConfig::default(),
            head: HeadTrainConfig::default(),
            scorer: ScorerSelection::default(),
            split: SplitMode::Intra { train_page_fraction: 0.5 },
        }
    }
}

const TOP_LEVEL: &[&str] = &["dataset", "out", "seed", "workers", "use_graph"];

impl RunConfig {
    /// Pipeline settings with the run seed pushed into every seeded stage.
    pub fn pipeline(&self) -> PipelineConfig {
        let mut graph = self.graph.clone();
        graph.seed = self.seed;
        let mut head = self.head.clone();
        head.seed = self.seed;
        PipelineConfig { candidates: self.candidates, graph, head, use_graph: self.use_graph }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec { mode: self.split.clone(), seed: self.seed }
    }

    pub fn validate(&self) -> Result<(), ConfigInvalid> {
        self.candidates.validate().map_err(|e| ConfigInvalid::field("candidates", e))?;
        self.graph.validate().map_err(|e| ConfigInvalid::field("graph", e))?;
        self.head.validate().map_err(|e| ConfigInvalid::field("head", e))?;
        if self.workers == Some(0) {
            return Err(ConfigInvalid::field("workers", "must be positive"));
        }
        if let ScorerSelection::Neural { endpoint, .. } = &self.scorer {
            if endpoint.trim().is_empty() {
                return Err(ConfigInvalid::field("scorer.endpoint", "must not be empty"));
            }
        }
        Ok(())
    }

    /// Merges the layers and validates the result.
    pub fn resolve(
        file: Option<Value>,
        env: impl IntoIterator<Item = (String, String)>,
        flags: &[(&str, Value)],
    ) -> Result<Self, ConfigInvalid> {
        let mut tree = serde_json::to_value(Self::default()).expect("default config serializes");
        if let Some(file) = file {
            merge(&mut tree, file);
        }
        for (name, raw) in env {
            if let Some(path) = env_path(&name) {
                set_path(&mut tree, &path, scalar(&raw));
            }
        }
        for (path, v) in flags {
            set_path(&mut tree, &path.split('.').map(str::to_string).collect::<Vec<_>>(), v.clone());
        }
        let cfg: Self = serde_json::from_value(tree).map_err(|e| ConfigInvalid::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical JSON: struct field order is fixed, so equal configs give
    /// equal bytes.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.canonical_json().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `RELGRAPH_HEAD_POSITIVE_WEIGHT` -> `["head", "positive_weight"]`.
fn env_path(name: &str) -> Option<Vec<String>> {
    let rest = name.strip_prefix(ENV_PREFIX)?.to_ascii_lowercase();
    if rest.is_empty() {
        return None;
    }
    if TOP_LEVEL.contains(&rest.as_str()) {
        return Some(vec![rest]);
    }
    let (section, key) = rest.split_once('_')?;
    Some(vec![section.to_string(), key.to_string()])
}

/// Environment values are JSON when they parse as such, strings otherwise.
fn scalar(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Deep merge; an object that switches enum variant (`kind` or `mode`
/// changes) replaces the old one instead of inheriting its fields.
fn merge(base: &mut Value, over: Value) {
    let switches = |b: &Map<String, Value>, o: &Map<String, Value>| {
        ["kind", "mode"].iter().any(|t| o.get(*t).is_some_and(|v| b.get(*t) != Some(v)))
    };
    match (base, over) {
        (Value::Object(b), Value::Object(o)) if switches(b, &o) => *b = o,
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn set_path(tree: &mut Value, path: &[String], v: Value) {
    let mut cur = tree;
    for (i, key) in path.iter().enumerate() {
        if !cur.is_object() {
            *cur = Value::Object(Map::new());
        }
        let obj = cur.as_object_mut().expect("just made an object");
        if i + 1 == path.len() {
            obj.insert(key.clone(), v);
            return;
        }
        cur = obj.entry(key.clone()).or_insert_with(|| Value::Object(Map::new()));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn precedence_flag_over_env_over_file() {
        let file = json!({"seed": 1, "head": {"tau": 0.3, "epochs": 10}});
        let env = vec![
            ("RELGRAPH_SEED".to_string(), "2".to_string()),
            ("RELGRAPH_HEAD_TAU".to_string(), "0.4".to_string()),
            ("UNRELATED".to_string(), "x".to_string()),
        ];
        let cfg = RunConfig::resolve(Some(file), env, &[("seed", json!(3))]).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.head.tau, 0.4);
        assert_eq!(cfg.head.epochs, 10);
        assert_eq!(cfg.head.learning_rate, HeadTrainConfig::default().learning_rate);
    }

    #[test]
    fn env_key_with_underscores() {
        let env = vec![("RELGRAPH_HEAD_POSITIVE_WEIGHT".to_string(), "2.5".to_string())];
        let cfg = RunConfig::resolve(None, env, &[]).unwrap();
        assert_eq!(cfg.head.positive_weight, 2.5);
    }

    #[test]
    fn unknown_and_invalid_fields_are_named() {
        let err = RunConfig::resolve(Some(json!({"head": {"tua": 0.5}})), vec![], &[]).unwrap_err();
        assert!(err.to_string().contains("tua"), "{err}");
        let err = RunConfig::resolve(Some(json!({"candidates": {"l_min": 0}})), vec![], &[]).unwrap_err();
        assert!(err.to_string().starts_with("candidates:"), "{err}");
    }

    #[test]
    fn switching_variant_drops_old_fields() {
        let file = json!({"split": {"mode": "inter", "held_out": "book"}});
        let cfg = RunConfig::resolve(Some(file), vec![], &[]).unwrap();
        assert_eq!(cfg.split, SplitMode::Inter { held_out: "book".into() });
        let flags = [("scorer", json!({"kind": "lexical"}))];
        let file = json!({"scorer": {"kind": "neural", "endpoint": "x:1", "timeout_ms": 5}});
        let cfg = RunConfig::resolve(Some(file), vec![], &flags).unwrap();
        assert_eq!(cfg.scorer, ScorerSelection::Lexical);
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.head.tau = 0.6;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn neural_selection_parses() {
        let file = json!({"scorer": {"kind": "neural", "endpoint": "127.0.0.1:9000", "timeout_ms": 500}});
        let cfg = RunConfig::resolve(Some(file), vec![], &[]).unwrap();
        assert_eq!(cfg.scorer, ScorerSelection::Neural { endpoint: "127.0.0.1:9000".into(), timeout_ms: 500 });
    }
}
