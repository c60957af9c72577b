use thiserror::Error;

use super::{
    make_sentence_pair, score_semantic, ExtractionTuple, FusionHeadParams, HeadError, RelationQuery,
    ScorerError, SemanticFeatures, SemanticScorer,
};
use crate::corpus::PageDoc;
use crate::gnn::{FrozenExtractor, GnnError};
use crate::graph::{compute_edge_features, GraphError, PageGraph};
use crate::par;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Head(#[from] HeadError),
    #[error(transparent)]
    Gnn(#[from] GnnError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// `[semantic ‖ graph]`, the head's input row.
pub fn fused_features(semantic: &SemanticFeatures, graph_part: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(semantic.vector.len() + graph_part.len());
    v.extend_from_slice(&semantic.vector);
    v.extend_from_slice(graph_part);
    v
}

/// Frozen edge embeddings for every virtual edge of `graph`, in edge order.
/// Without an extractor (semantic-only head) every entry is empty.
pub fn virtual_edge_embeddings(
    doc: &PageDoc,
    graph: &PageGraph,
    extractor: Option<&FrozenExtractor>,
) -> Result<Vec<Vec<f64>>, ExtractError> {
    let Some(ex) = extractor else {
        return Ok(vec![Vec::new(); graph.virtual_edges().len()]);
    };
    let nodes = ex.forward(graph)?;
    graph
        .virtual_edges()
        .iter()
        .map(|&e| {
            let f = compute_edge_features(graph, doc, e)?;
            Ok(ex.embed_with_features(&nodes, e, &f.to_flat()).vector)
        })
        .collect()
}

/// Semantic features of `q` against every virtual edge, in edge order.
pub fn semantic_rows(
    doc: &PageDoc,
    graph: &PageGraph,
    q: &RelationQuery,
    scorer: &dyn SemanticScorer,
) -> Result<Vec<SemanticFeatures>, ExtractError> {
    par::map(graph.virtual_edges(), |&(k, v)| {
        let pair = make_sentence_pair(q, doc.text(k), doc.text(v))?;
        Ok(score_semantic(&pair, scorer)?)
    })
    .into_iter()
    .collect()
}

/// Head input rows for `q` against every virtual edge, in edge order.
pub fn query_features(
    doc: &PageDoc,
    graph: &PageGraph,
    q: &RelationQuery,
    scorer: &dyn SemanticScorer,
    embeddings: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>, ExtractError> {
    assert_eq!(graph.virtual_edges().len(), embeddings.len(), "one embedding per virtual edge");
    let sem = semantic_rows(doc, graph, q, scorer)?;
    Ok(sem.iter().zip(embeddings).map(|(s, e)| fused_features(s, e)).collect())
}

/// Classifies every virtual edge for `q` using precomputed embeddings and
/// returns those with probability ≥ τ, best first.
pub fn extract_with_embeddings(
    doc: &PageDoc,
    graph: &PageGraph,
    q: &RelationQuery,
    head: &FusionHeadParams,
    scorer: &dyn SemanticScorer,
    embeddings: &[Vec<f64>],
) -> Result<Vec<ExtractionTuple>, ExtractError> {
    let rows = query_features(doc, graph, q, scorer, embeddings)?;
    let mut out = Vec::new();
    for (&(k, v), x) in graph.virtual_edges().iter().zip(&rows) {
        let p = head.probability(x)?;
        if p >= head.tau {
            out.push(ExtractionTuple {
                relation: doc.text(k).to_string(),
                value: doc.text(v).to_string(),
                k_node: k,
                v_node: v,
                score: p,
            });
        }
    }
    sort_tuples(&mut out);
    Ok(out)
}

/// End-to-end extraction for one page and query. `extractor` is `None` for a
/// head trained on semantic features only.
pub fn extract(
    doc: &PageDoc,
    graph: &PageGraph,
    q: &RelationQuery,
    head: &FusionHeadParams,
    scorer: &dyn SemanticScorer,
    extractor: Option<&FrozenExtractor>,
) -> Result<Vec<ExtractionTuple>, ExtractError> {
    let emb = virtual_edge_embeddings(doc, graph, extractor)?;
    extract_with_embeddings(doc, graph, q, head, scorer, &emb)
}

/// Descending score, then ascending `(k_node, v_node)`.
pub fn sort_tuples(t: &mut [ExtractionTuple]) {
    t.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.k_node.cmp(&b.k_node))
            .then(a.v_node.cmp(&b.v_node))
    });
}
