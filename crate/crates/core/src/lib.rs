//! Keyword-targeted relation/value extraction from semi-structured web pages.
//!
//! A page is parsed into a DOM tree, laid out, and turned into a graph whose
//! structural edges carry message passing while *virtual* edges connect
//! candidate relation-label / value node pairs. A small graph network is
//! pretrained to classify virtual edges, frozen, and its edge embeddings are
//! fused with sentence-pair semantic features in a single logistic head that
//! decides whether `(relation, value)` answers a `(keyword, description)`
//! query.
//!
//! Module map:
//!
//! * [`corpus`]: raw pages, HTML parsing, layout, text frequency, dataset IO.
//! * [`graph`]: node features, structural edges, candidate (virtual) edges.
//! * [`gnn`]: message passing, edge embeddings, pretraining, frozen export.
//! * [`scorer`]: sentence pairs, semantic scorers, fusion head, extraction.
//! * [`eval`]: splits, metrics, baseline, reports, ablations, synthetic data.

pub mod config;
pub mod corpus;
pub mod eval;
pub mod gnn;
pub mod graph;
pub mod manifest;
pub mod par;
pub mod scorer;
pub mod text;

pub use corpus::{BBox, DomNode, PageDoc, RawPage, TextFreqTable};
pub use graph::{CandidateConfig, EdgeFeatures, NodeFeatures, PageGraph};
pub use scorer::{ExtractionTuple, RelationQuery};

