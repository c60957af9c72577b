use ndarray::Array2;

use super::params::{header, read_header_and_layers, write_layers, Reader, KIND_FROZEN};
use super::{edge_embed, edge_embedding_from, forward_layers, ConvLayer, EdgeEmbedding, GnnError, GraphNetParams};
use crate::corpus::PageDoc;
use crate::graph::PageGraph;

/// The convolution stack of a pretrained network, without its MLP head.
/// Read-only: no operation changes the weights after export.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenExtractor {
    layers: Vec<ConvLayer>,
    rng_seed: u64,
}

impl GraphNetParams {
    /// Drops the MLP head and freezes the convolution layers.
    pub fn freeze_and_export(self) -> FrozenExtractor {
        FrozenExtractor {
            layers: self.layers,
            rng_seed: self.rng_seed,
        }
    }
}

impl FrozenExtractor {
    pub fn forward(&self, graph: &PageGraph) -> Result<Array2<f64>, GnnError> {
        forward_layers(&self.layers, graph)
    }

    pub fn edge_embed(
        &self,
        node_embeds: &Array2<f64>,
        graph: &PageGraph,
        doc: &PageDoc,
        edge: (usize, usize),
    ) -> Result<EdgeEmbedding, GnnError> {
        edge_embed(node_embeds, graph, doc, edge)
    }

    pub fn embed_with_features(
        &self,
        node_embeds: &Array2<f64>,
        edge: (usize, usize),
        features: &[f64],
    ) -> EdgeEmbedding {
        edge_embedding_from(node_embeds, edge, features)
    }

    pub fn embedding_dim(&self) -> usize {
        self.layers.last().map(|l| l.output_dim()).unwrap_or(0)
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = header(KIND_FROZEN, self.rng_seed, &self.layers);
        write_layers(&mut out, &self.layers);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, GnnError> {
        let mut r = Reader { bytes, pos: 0 };
        let (kind, rng_seed, layers) = read_header_and_layers(&mut r)?;
        if kind != KIND_FROZEN {
            return Err(GnnError::BadFormat("file holds full parameters, not a frozen extractor".into()));
        }
        r.finish()?;
        Ok(Self { layers, rng_seed })
    }
}
