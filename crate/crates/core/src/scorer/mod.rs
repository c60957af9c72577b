//! Query-aware scoring of candidate edges.
//!
//! A query `(keyword, description)` and a candidate `(relation text, value
//! text)` are packed into a [`SentencePair`]; a [`SemanticScorer`] turns the
//! pair into a feature vector, which is concatenated with the frozen graph
//! embedding of the edge and classified by a logistic [`FusionHeadParams`].

mod extract;
mod head;
mod lexical;
pub mod neural;
mod sentence;

pub use extract::{
    extract, extract_with_embeddings, fused_features, query_features, semantic_rows, sort_tuples,
    virtual_edge_embeddings, ExtractError,
};
pub use head::{
    head_loss_and_grad, train_head, ClassReport, FusionHeadParams, HeadError, HeadExample,
    HeadReport, HeadRow, HeadSet, HeadTrainConfig,
};
pub use lexical::{looks_like_value, trigram_cosine, word_jaccard, LexicalScorer, LEXICAL_FEATURE_LEN};
pub use sentence::{make_sentence_pair, SentencePair, MAX_SENTENCE_CHARS, SEPARATOR};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("relation text is empty")]
    EmptyRelationText,
    #[error("malformed sentence pair: {0}")]
    MalformedPair(String),
    #[error("semantic scorer unavailable: {0}")]
    ScorerUnavailable(String),
    #[error("scorer returned error {code}: {message}")]
    Remote { code: String, message: String },
    #[error("scorer returned {got} features, declared {declared}")]
    FeatureLength { got: usize, declared: usize },
}

/// A target relation keyword with a short description.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelationQuery {
    pub keyword: String,
    pub description: String,
}

impl RelationQuery {
    pub fn new(keyword: impl Into<String>, description: impl Into<String>) -> Self {
        Self {
            keyword: keyword.into(),
            description: description.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticFeatures {
    pub vector: Vec<f64>,
    /// Summary score in `[0, 1]`.
    pub scalar_score: f64,
}

/// Anything that can score a sentence pair. Implementations declare a fixed
/// feature length up front and must be pure functions of the pair.
pub trait SemanticScorer: Send + Sync {
    /// Stable identifier recorded in run manifests.
    fn identity(&self) -> String;
    fn feature_len(&self) -> usize;
    fn score(&self, pair: &SentencePair) -> Result<SemanticFeatures, ScorerError>;
}

/// Scores `pair` with `scorer`, checking the declared feature length.
pub fn score_semantic(
    pair: &SentencePair,
    scorer: &dyn SemanticScorer,
) -> Result<SemanticFeatures, ScorerError> {
    let f = scorer.score(pair)?;
    if f.vector.len() != scorer.feature_len() {
        return Err(ScorerError::FeatureLength {
            got: f.vector.len(),
            declared: scorer.feature_len(),
        });
    }
    Ok(f)
}

/// One extracted `(relation, value)` answer for a query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionTuple {
    pub relation: String,
    pub value: String,
    pub k_node: usize,
    pub v_node: usize,
    pub score: f64,
}
