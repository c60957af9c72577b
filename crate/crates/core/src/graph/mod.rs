//! Page graphs: one node per DOM element, structural edges (parent/child and
//! adjacent siblings) for message passing, and *virtual* edges between
//! candidate relation-label and value nodes that are only ever classified.

mod candidates;
mod features;

pub use candidates::{generate_virtual_edges, CandidateConfig, ConfigError};
pub use features::{compute_edge_features, EdgeFeatures, EDGE_FEATURE_LEN};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{PageDoc, TextFreqTable};

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("page {page_id}: node {node_id} has no layout box")]
    MissingLayout { page_id: String, node_id: usize },
    #[error("({0}, {1}) is neither a structural nor a virtual edge")]
    UnknownEdge(usize, usize),
}

/// Tag vocabulary for the one-hot encoding. Bump [`TAG_VOCAB_VERSION`] when
/// editing; trained models depend on slot positions.
pub const TAG_VOCAB: [&str; 40] = [
    "html", "head", "body", "title", "meta", "link", "script", "style", "div", "span", "p", "a",
    "img", "ul", "ol", "li", "dl", "dt", "dd", "table", "thead", "tbody", "tr", "td", "th", "h1",
    "h2", "h3", "h4", "h5", "h6", "b", "strong", "i", "em", "br", "form", "input", "label",
    "section",
];
pub const TAG_VOCAB_VERSION: u32 = 1;
/// Slot for tags outside [`TAG_VOCAB`].
pub const OTHER_TAG_SLOT: usize = TAG_VOCAB.len();
pub const TAG_SLOTS: usize = TAG_VOCAB.len() + 1;
/// Flattened node feature length: one-hot tag, sibling index, text frequency.
pub const NODE_FEATURE_LEN: usize = TAG_SLOTS + 2;

pub fn tag_slot(tag: &str) -> usize {
    TAG_VOCAB
        .iter()
        .position(|t| *t == tag)
        .unwrap_or(OTHER_TAG_SLOT)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeFeatures {
    /// Index of the single hot entry in the tag one-hot vector.
    pub tag_slot: usize,
    pub sibling_index: usize,
    pub text_freq: f64,
}

impl NodeFeatures {
    pub fn tag_onehot(&self) -> [f64; TAG_SLOTS] {
        let mut v = [0.0; TAG_SLOTS];
        v[self.tag_slot] = 1.0;
        v
    }

    /// Numeric form used by the graph network. Counts are log-scaled
    /// (`ln(1 + x)`) so deep sibling lists do not dominate the one-hot part.
    pub fn write_flat(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.tag_onehot());
        out.push((self.sibling_index as f64).ln_1p());
        out.push(self.text_freq.ln_1p());
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(NODE_FEATURE_LEN);
        self.write_flat(&mut v);
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageGraph {
    page_id: String,
    node_features: Vec<NodeFeatures>,
    /// Undirected, stored as `(min, max)`, sorted.
    structural_edges: Vec<(usize, usize)>,
    /// Ordered `(k, v)` pairs, sorted.
    virtual_edges: Vec<(usize, usize)>,
    /// Sorted neighbour lists over structural edges only.
    adjacency: Vec<Vec<usize>>,
}

impl PageGraph {
    /// Builds a graph from explicit parts. Structural edges are normalized,
    /// deduplicated and self-loops dropped.
    pub fn from_parts(
        page_id: impl Into<String>,
        node_features: Vec<NodeFeatures>,
        structural_edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let n = node_features.len();
        let mut edges: Vec<(usize, usize)> = structural_edges
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self {
            page_id: page_id.into(),
            node_features,
            structural_edges: edges,
            virtual_edges: Vec::new(),
            adjacency,
        }
    }

    pub fn page_id(&self) -> &str {
        &self.page_id
    }

    pub fn node_count(&self) -> usize {
        self.node_features.len()
    }

    pub fn node_features(&self) -> &[NodeFeatures] {
        &self.node_features
    }

    pub fn structural_edges(&self) -> &[(usize, usize)] {
        &self.structural_edges
    }

    pub fn virtual_edges(&self) -> &[(usize, usize)] {
        &self.virtual_edges
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    /// Replaces the virtual edge set. Self-loops are dropped; the structural
    /// adjacency is untouched.
    pub fn set_virtual_edges(&mut self, edges: impl IntoIterator<Item = (usize, usize)>) {
        let mut v: Vec<_> = edges.into_iter().filter(|(a, b)| a != b).collect();
        v.sort_unstable();
        v.dedup();
        self.virtual_edges = v;
    }

    pub fn is_structural(&self, a: usize, b: usize) -> bool {
        self.structural_edges
            .binary_search(&(a.min(b), a.max(b)))
            .is_ok()
    }

    pub fn is_virtual(&self, k: usize, v: usize) -> bool {
        self.virtual_edges.binary_search(&(k, v)).is_ok()
    }

    /// Breadth-first distances from `src` over structural edges, stopping at
    /// `max_hops`. Unreached nodes are `None`.
    pub fn distances_from(&self, src: usize, max_hops: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count()];
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            if du == max_hops {
                continue;
            }
            for &w in &self.adjacency[u] {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

/// Builds the structural graph of a laid-out page. Virtual edges start empty.
pub fn build_graph(doc: &PageDoc, freq: &TextFreqTable) -> Result<PageGraph, GraphError> {
    let mut features = Vec::with_capacity(doc.nodes.len());
    for node in &doc.nodes {
        if node.bbox.is_none() {
            return Err(GraphError::MissingLayout {
                page_id: doc.page.page_id.clone(),
                node_id: node.node_id,
            });
        }
        features.push(NodeFeatures {
            tag_slot: tag_slot(&node.tag),
            sibling_index: node.sibling_index,
            text_freq: if node.text.is_empty() { 0.0 } else { freq.freq(&node.text) },
        });
    }
    let mut edges = Vec::new();
    for node in &doc.nodes {
        for &c in &node.children {
            edges.push((node.node_id, c));
        }
        for pair in node.children.windows(2) {
            edges.push((pair[0], pair[1]));
        }
    }
    Ok(PageGraph::from_parts(doc.page.page_id.clone(), features, edges))
}

/// Shortest structural path length between `a` and `b`; `None` when
/// disconnected.
pub fn hop_distance(graph: &PageGraph, a: usize, b: usize) -> Option<usize> {
    if a == b {
        return Some(0);
    }
    graph.distances_from(a, usize::MAX)[b]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{assign_layout, compute_text_freq, parse_html, LayoutSource, RawPage};

    fn laid_out(html: &str) -> (PageDoc, TextFreqTable) {
        let doc = parse_html(&RawPage::new("p", "w", "v", html)).unwrap();
        let doc = assign_layout(doc, &LayoutSource::Heuristic).unwrap();
        let freq = compute_text_freq(std::slice::from_ref(&doc)).unwrap();
        (doc, freq)
    }

    fn id_of(doc: &PageDoc, text: &str) -> usize {
        doc.nodes.iter().position(|n| n.text == text).unwrap()
    }

    #[test]
    fn vocab_shape() {
        assert_eq!(TAG_SLOTS, 41);
        assert_eq!(tag_slot("div"), 8);
        assert_eq!(tag_slot("marquee"), OTHER_TAG_SLOT);
        let f = NodeFeatures { tag_slot: 3, sibling_index: 0, text_freq: 0.0 };
        assert_eq!(f.tag_onehot().iter().sum::<f64>(), 1.0);
        assert_eq!(f.to_flat().len(), NODE_FEATURE_LEN);
    }

    #[test]
    fn chain_has_no_sibling_edges() {
        let (doc, freq) = laid_out("<div><p>a</p></div>");
        let g = build_graph(&doc, &freq).unwrap();
        assert_eq!(g.node_count(), doc.len());
        // html/head/body/div/p: parent-child arcs plus head-body siblings.
        let div = doc.nodes.iter().position(|n| n.tag == "div").unwrap();
        let p = id_of(&doc, "a");
        assert_eq!(g.neighbors(p), &[div]);
        assert!(g.is_structural(div, p));
        assert!(g.virtual_edges().is_empty());
    }

    #[test]
    fn immediate_siblings_only() {
        let (doc, freq) = laid_out("<ul><li>c1</li><li>c2</li><li>c3</li></ul>");
        let g = build_graph(&doc, &freq).unwrap();
        let (c1, c2, c3) = (id_of(&doc, "c1"), id_of(&doc, "c2"), id_of(&doc, "c3"));
        assert!(g.is_structural(c1, c2));
        assert!(g.is_structural(c2, c3));
        assert!(!g.is_structural(c1, c3));
        assert_eq!(hop_distance(&g, c1, c1), Some(0));
        assert_eq!(hop_distance(&g, c1, c2), Some(1));
        assert_eq!(hop_distance(&g, c1, c3), Some(2));
        let ul = doc.nodes.iter().position(|n| n.tag == "ul").unwrap();
        assert_eq!(hop_distance(&g, ul, c3), Some(1));
    }

    #[test]
    fn missing_layout() {
        let doc = parse_html(&RawPage::new("p", "w", "v", "<p>a</p>")).unwrap();
        let freq = compute_text_freq(std::slice::from_ref(&doc)).unwrap();
        assert!(matches!(
            build_graph(&doc, &freq),
            Err(GraphError::MissingLayout { node_id: 0, .. })
        ));
    }

    #[test]
    fn disconnected_is_none() {
        let f = NodeFeatures { tag_slot: 0, sibling_index: 0, text_freq: 0.0 };
        let g = PageGraph::from_parts("x", vec![f; 3], [(0, 1)]);
        assert_eq!(hop_distance(&g, 0, 2), None);
    }

    #[test]
    fn virtual_edges_do_not_touch_adjacency() {
        let (doc, freq) = laid_out("<ul><li>c1</li><li>c2</li><li>c3</li></ul>");
        let mut g = build_graph(&doc, &freq).unwrap();
        let before: Vec<Vec<usize>> = (0..g.node_count()).map(|i| g.neighbors(i).to_vec()).collect();
        g.set_virtual_edges([(0, 5), (5, 0), (2, 2), (1, 6)]);
        let after: Vec<Vec<usize>> = (0..g.node_count()).map(|i| g.neighbors(i).to_vec()).collect();
        assert_eq!(before, after);
        assert_eq!(g.virtual_edges(), &[(0, 5), (1, 6), (5, 0)]);
    }
}
