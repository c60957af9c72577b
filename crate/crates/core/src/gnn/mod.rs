//! Graph network over page graphs.
//!
//! Each layer updates every node with
//! `h' = relu(W_self h + W_nbr mean(h_j for structural neighbours j) + b)`,
//! the neighbour mean of an isolated node being the zero vector. Virtual
//! edges never take part. An edge `(k, v)` is embedded as
//! `[h_k ‖ h_v ‖ flattened EdgeFeatures]`; during pretraining a two-layer MLP
//! classifies that embedding, after which the MLP is dropped and the
//! convolution stack is frozen.

mod frozen;
mod params;
mod train;

pub use frozen::FrozenExtractor;
pub use params::{ConvLayer, EdgeMlp, GraphNetParams};
pub use train::{
    loss_and_grad, pretrain, select_positive_subset, DataFraction, EpochRecord, GraphTrainConfig,
    LabeledEdge, TrainingLog, TrainingPage,
};

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::corpus::PageDoc;
use crate::graph::{compute_edge_features, EdgeFeatures, GraphError, PageGraph, NODE_FEATURE_LEN};

#[derive(Debug, Error)]
pub enum GnnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("no positive edges in the training data")]
    NoPositives,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("model file: {0}")]
    BadFormat(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
}

/// Post-convolution embedding of one `(k, v)` edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeEmbedding {
    pub vector: Vec<f64>,
}

/// Initial node matrix `N x NODE_FEATURE_LEN`.
pub fn input_matrix(graph: &PageGraph) -> Array2<f64> {
    let n = graph.node_count();
    let mut flat = Vec::with_capacity(n * NODE_FEATURE_LEN);
    for f in graph.node_features() {
        f.write_flat(&mut flat);
    }
    Array2::from_shape_vec((n, NODE_FEATURE_LEN), flat).expect("feature length is fixed")
}

/// Row-wise mean of structural neighbours.
pub(crate) fn neighbor_mean(graph: &PageGraph, h: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(h.raw_dim());
    for i in 0..graph.node_count() {
        let nbrs = graph.neighbors(i);
        if nbrs.is_empty() {
            continue;
        }
        let mut row = out.row_mut(i);
        for &j in nbrs {
            row += &h.row(j);
        }
        row /= nbrs.len() as f64;
    }
    out
}

/// Intermediate values of one forward pass, kept for backpropagation.
pub(crate) struct ForwardCache {
    /// Input to each layer; `inputs[0]` is the raw feature matrix.
    pub inputs: Vec<Array2<f64>>,
    pub means: Vec<Array2<f64>>,
    pub pre: Vec<Array2<f64>>,
    pub output: Array2<f64>,
}

pub(crate) fn forward_cached(
    layers: &[ConvLayer],
    graph: &PageGraph,
) -> Result<ForwardCache, GnnError> {
    let mut h = input_matrix(graph);
    let mut cache = ForwardCache {
        inputs: Vec::with_capacity(layers.len()),
        means: Vec::with_capacity(layers.len()),
        pre: Vec::with_capacity(layers.len()),
        output: Array2::zeros((0, 0)),
    };
    for (i, layer) in layers.iter().enumerate() {
        if h.ncols() != layer.input_dim() {
            return Err(GnnError::ShapeMismatch(format!(
                "layer {i} expects width {}, got {}",
                layer.input_dim(),
                h.ncols()
            )));
        }
        let mean = neighbor_mean(graph, &h);
        let z = h.dot(&layer.w_self.t()) + mean.dot(&layer.w_nbr.t()) + &layer.bias;
        let next = z.mapv(relu);
        cache.inputs.push(h);
        cache.means.push(mean);
        cache.pre.push(z);
        h = next;
    }
    cache.output = h;
    Ok(cache)
}

pub(crate) fn forward_layers(
    layers: &[ConvLayer],
    graph: &PageGraph,
) -> Result<Array2<f64>, GnnError> {
    let mut h = input_matrix(graph);
    for (i, layer) in layers.iter().enumerate() {
        if h.ncols() != layer.input_dim() {
            return Err(GnnError::ShapeMismatch(format!(
                "layer {i} expects width {}, got {}",
                layer.input_dim(),
                h.ncols()
            )));
        }
        let mean = neighbor_mean(graph, &h);
        h = (h.dot(&layer.w_self.t()) + mean.dot(&layer.w_nbr.t()) + &layer.bias).mapv(relu);
    }
    Ok(h)
}

/// Node embeddings (`N x hidden`) after all convolution layers.
pub fn forward(graph: &PageGraph, params: &GraphNetParams) -> Result<Array2<f64>, GnnError> {
    forward_layers(&params.layers, graph)
}

/// `[h_k ‖ h_v ‖ features]` from already computed pieces.
pub fn edge_embedding_from(
    node_embeds: &Array2<f64>,
    (k, v): (usize, usize),
    features: &[f64],
) -> EdgeEmbedding {
    let d = node_embeds.ncols();
    let mut vector = Vec::with_capacity(2 * d + features.len());
    vector.extend(node_embeds.row(k).iter());
    vector.extend(node_embeds.row(v).iter());
    vector.extend_from_slice(features);
    EdgeEmbedding { vector }
}

/// Embedding of `edge`, computing its [`EdgeFeatures`] from the page.
pub fn edge_embed(
    node_embeds: &Array2<f64>,
    graph: &PageGraph,
    doc: &PageDoc,
    edge: (usize, usize),
) -> Result<EdgeEmbedding, GnnError> {
    let ef: EdgeFeatures = compute_edge_features(graph, doc, edge)?;
    if node_embeds.nrows() != graph.node_count() {
        return Err(GnnError::ShapeMismatch(format!(
            "{} node embeddings for {} nodes",
            node_embeds.nrows(),
            graph.node_count()
        )));
    }
    Ok(edge_embedding_from(node_embeds, edge, &ef.to_flat()))
}

/// Edge probability from the pretraining MLP.
pub fn mlp_score(e: &EdgeEmbedding, params: &GraphNetParams) -> Result<f64, GnnError> {
    let mlp = &params.mlp;
    if e.vector.len() != mlp.input_dim() {
        return Err(GnnError::ShapeMismatch(format!(
            "MLP expects {} inputs, got {}",
            mlp.input_dim(),
            e.vector.len()
        )));
    }
    Ok(sigmoid(mlp.logit(&Array1::from(e.vector.clone()))))
}

pub(crate) fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{NodeFeatures, EDGE_FEATURE_LEN};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn path_graph(n: usize) -> PageGraph {
        let feats = (0..n)
            .map(|i| NodeFeatures { tag_slot: i % 5, sibling_index: i, text_freq: 0.1 * i as f64 })
            .collect();
        PageGraph::from_parts("g", feats, (1..n).map(|i| (i - 1, i)))
    }

    #[test]
    fn zero_params_give_zero_embeddings() {
        let g = path_graph(4);
        let p = GraphNetParams::zeros(NODE_FEATURE_LEN, 32, 2, 32, 0);
        let h = forward(&g, &p).unwrap();
        assert_eq!(h.dim(), (4, 32));
        assert!(h.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn isolated_node_uses_zero_mean() {
        let f = NodeFeatures { tag_slot: 2, sibling_index: 1, text_freq: 0.5 };
        let g = PageGraph::from_parts("g", vec![f], []);
        let p = GraphNetParams::init(NODE_FEATURE_LEN, 8, 1, 8, 7);
        let h = forward(&g, &p).unwrap();
        let x = Array1::from(f.to_flat());
        let layer = &p.layers[0];
        let expected = (layer.w_self.dot(&x) + &layer.bias).mapv(relu);
        for (a, b) in h.row(0).iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn virtual_edges_are_ignored() {
        let mut g = path_graph(6);
        let p = GraphNetParams::init(NODE_FEATURE_LEN, 16, 2, 16, 3);
        let before = forward(&g, &p).unwrap();
        g.set_virtual_edges([(0, 5), (5, 0), (1, 4), (2, 5)]);
        assert_eq!(forward(&g, &p).unwrap(), before);
    }

    #[test]
    fn shape_mismatch() {
        let g = path_graph(3);
        let p = GraphNetParams::init(NODE_FEATURE_LEN + 1, 8, 1, 8, 0);
        assert!(matches!(forward(&g, &p), Err(GnnError::ShapeMismatch(_))));
    }

    #[test]
    fn zero_params_embedding_is_raw_features() {
        let g = path_graph(3);
        let p = GraphNetParams::zeros(NODE_FEATURE_LEN, 32, 2, 32, 0);
        let h = forward(&g, &p).unwrap();
        let feats: Vec<f64> = (0..EDGE_FEATURE_LEN).map(|i| i as f64).collect();
        let e = edge_embedding_from(&h, (0, 2), &feats);
        assert_eq!(e.vector.len(), 64 + EDGE_FEATURE_LEN);
        assert!(e.vector[..64].iter().all(|&x| x == 0.0));
        assert_eq!(&e.vector[64..], feats.as_slice());
    }

    #[test]
    fn mlp_zero_weights_is_half() {
        let p = GraphNetParams::zeros(NODE_FEATURE_LEN, 32, 2, 32, 0);
        let e = EdgeEmbedding { vector: vec![1.0; p.mlp.input_dim()] };
        assert_eq!(mlp_score(&e, &p).unwrap(), 0.5);
        let short = EdgeEmbedding { vector: vec![1.0; 3] };
        assert!(mlp_score(&short, &p).is_err());
    }

    #[test]
    fn mlp_saturates() {
        let mut p = GraphNetParams::zeros(NODE_FEATURE_LEN, 4, 1, 2, 0);
        p.mlp.b2 = 12.0;
        let e = EdgeEmbedding { vector: vec![0.0; p.mlp.input_dim()] };
        assert!(mlp_score(&e, &p).unwrap() > 0.99);
    }

    #[test]
    fn mlp_matches_straight_line_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..5 {
            let p = GraphNetParams::init(NODE_FEATURE_LEN, 6, 1, 5, seed);
            let x: Vec<f64> = (0..p.mlp.input_dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            // Independent loop-based recomputation.
            let mut logit = p.mlp.b2;
            for j in 0..p.mlp.w1.nrows() {
                let mut a = p.mlp.b1[j];
                for (i, xi) in x.iter().enumerate() {
                    a += p.mlp.w1[[j, i]] * xi;
                }
                logit += p.mlp.w2[j] * a.max(0.0);
            }
            let expected = 1.0 / (1.0 + (-logit).exp());
            let got = mlp_score(&EdgeEmbedding { vector: x }, &p).unwrap();
            assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        }
    }

    #[test]
    fn sigmoid_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!(sigmoid(800.0) <= 1.0);
    }
}
