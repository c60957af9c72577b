//! Edge-classification pretraining with hand-written backpropagation.

use std::collections::BTreeMap;

use ndarray::{s, Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{forward_cached, sigmoid, GnnError, GraphNetParams};
use crate::graph::{PageGraph, EDGE_FEATURE_LEN, NODE_FEATURE_LEN};

/// Share of positive edges used for pretraining.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DataFraction {
    #[default]
    Full,
    TwoThirds,
    OneThird,
}

impl DataFraction {
    pub fn apply(self, n: usize) -> usize {
        match self {
            DataFraction::Full => n,
            DataFraction::TwoThirds => n * 2 / 3,
            DataFraction::OneThird => n / 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DataFraction::Full => "1",
            DataFraction::TwoThirds => "2/3",
            DataFraction::OneThird => "1/3",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphTrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Negatives drawn per positive, from the same page.
    pub negative_ratio: usize,
    /// Pages per mini-batch.
    pub batch_size: usize,
    pub seed: u64,
    pub data_fraction: DataFraction,
    pub hidden_dim: usize,
    pub layer_count: usize,
    pub mlp_hidden: usize,
}

impl Default for GraphTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            learning_rate: 0.05,
            negative_ratio: 5,
            batch_size: 8,
            seed: 0,
            data_fraction: DataFraction::Full,
            hidden_dim: 32,
            layer_count: 2,
            mlp_hidden: 32,
        }
    }
}

impl GraphTrainConfig {
    pub fn validate(&self) -> Result<(), GnnError> {
        let bad = |m: &str| Err(GnnError::InvalidConfig(m.into()));
        if self.epochs == 0 || self.batch_size == 0 || self.negative_ratio == 0 {
            return bad("epochs, batch_size and negative_ratio must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.hidden_dim == 0 || self.layer_count == 0 || self.mlp_hidden == 0 {
            return bad("network dimensions must be positive");
        }
        Ok(())
    }
}

/// A candidate edge with its flattened [`EdgeFeatures`](crate::graph::EdgeFeatures) and label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEdge {
    pub k: usize,
    pub v: usize,
    pub features: Vec<f64>,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPage {
    pub graph: PageGraph,
    pub edges: Vec<LabeledEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingLog {
    pub positives_available: usize,
    pub positives_used: usize,
    pub epochs: Vec<EpochRecord>,
}

impl TrainingLog {
    /// One JSON record per epoch.
    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for rec in &self.epochs {
            s.push_str(&serde_json::to_string(rec).unwrap());
            s.push('\n');
        }
        s
    }
}

/// `(page, edge)` indices of the positives kept under `fraction`: a seeded
/// shuffle of all positives, truncated, returned in original order.
pub fn select_positive_subset(
    pages: &[TrainingPage],
    fraction: DataFraction,
    seed: u64,
) -> Vec<(usize, usize)> {
    let mut all: Vec<(usize, usize)> = pages
        .iter()
        .enumerate()
        .flat_map(|(p, page)| {
            page.edges
                .iter()
                .enumerate()
                .filter(|(_, e)| e.positive)
                .map(move |(i, _)| (p, i))
        })
        .collect();
    let keep = fraction.apply(all.len());
    if keep < all.len() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_f4ac);
        all.shuffle(&mut rng);
        all.truncate(keep);
        all.sort_unstable();
    }
    all
}

/// Mean binary cross-entropy over `examples` (`(page, edge)` indices) and its
/// gradient with respect to every parameter. Also returns the number of
/// examples classified correctly at threshold 0.5.
pub fn loss_and_grad(
    params: &GraphNetParams,
    pages: &[TrainingPage],
    examples: &[(usize, usize)],
) -> Result<(f64, GraphNetParams, usize), GnnError> {
    let mut grad = params.zeros_like();
    if examples.is_empty() {
        return Ok((0.0, grad, 0));
    }
    let scale = 1.0 / examples.len() as f64;
    let mut by_page: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(p, e) in examples {
        by_page.entry(p).or_default().push(e);
    }

    let mlp = &params.mlp;
    let d = params.embedding_dim();
    let mut total_loss = 0.0;
    let mut correct = 0usize;

    for (p, edge_ids) in by_page {
        let page = &pages[p];
        let cache = forward_cached(&params.layers, &page.graph)?;
        let h = &cache.output;
        let mut d_out = Array2::<f64>::zeros(h.raw_dim());

        for e in edge_ids {
            let edge = &page.edges[e];
            if edge.features.len() != EDGE_FEATURE_LEN {
                return Err(GnnError::ShapeMismatch(format!(
                    "edge features of length {}, expected {EDGE_FEATURE_LEN}",
                    edge.features.len()
                )));
            }
            let mut x = Array1::<f64>::zeros(2 * d + EDGE_FEATURE_LEN);
            x.slice_mut(s![..d]).assign(&h.row(edge.k));
            x.slice_mut(s![d..2 * d]).assign(&h.row(edge.v));
            x.slice_mut(s![2 * d..]).assign(&Array1::from(edge.features.clone()));

            let a = mlp.w1.dot(&x) + &mlp.b1;
            let r = a.mapv(super::relu);
            let logit = r.dot(&mlp.w2) + mlp.b2;
            let y = if edge.positive { 1.0 } else { 0.0 };
            total_loss += logit.max(0.0) - logit * y + (-logit.abs()).exp().ln_1p();
            let prob = sigmoid(logit);
            if (prob >= 0.5) == edge.positive {
                correct += 1;
            }

            let dlogit = (prob - y) * scale;
            grad.mlp.b2 += dlogit;
            grad.mlp.w2.scaled_add(dlogit, &r);
            let mut da = &mlp.w2 * dlogit;
            da.zip_mut_with(&a, |g, &pre| {
                if pre <= 0.0 {
                    *g = 0.0
                }
            });
            grad.mlp.b1 += &da;
            // dW1 += da (outer) x
            for (j, &dj) in da.iter().enumerate() {
                if dj != 0.0 {
                    grad.mlp.w1.row_mut(j).scaled_add(dj, &x);
                }
            }
            let dx = mlp.w1.t().dot(&da);
            {
                let mut row = d_out.row_mut(edge.k);
                row += &dx.slice(s![..d]);
            }
            let mut row = d_out.row_mut(edge.v);
            row += &dx.slice(s![d..2 * d]);
        }

        // Back through the convolution layers.
        let mut d_h = d_out;
        for t in (0..params.layers.len()).rev() {
            let layer = &params.layers[t];
            let mut dz = d_h;
            dz.zip_mut_with(&cache.pre[t], |g, &pre| {
                if pre <= 0.0 {
                    *g = 0.0
                }
            });
            let gl = &mut grad.layers[t];
            gl.w_self += &dz.t().dot(&cache.inputs[t]);
            gl.w_nbr += &dz.t().dot(&cache.means[t]);
            gl.bias += &dz.sum_axis(Axis(0));
            if t == 0 {
                break;
            }
            let via_nbr = dz.dot(&layer.w_nbr);
            let mut d_in = dz.dot(&layer.w_self);
            // Transpose of the neighbour-mean operator.
            for i in 0..page.graph.node_count() {
                let nbrs = page.graph.neighbors(i);
                if nbrs.is_empty() {
                    continue;
                }
                let w = 1.0 / nbrs.len() as f64;
                for &j in nbrs {
                    let mut row = d_in.row_mut(j);
                    row.scaled_add(w, &via_nbr.row(i));
                }
            }
            d_h = d_in;
        }
    }
    Ok((total_loss * scale, grad, correct))
}

/// Pretrains the graph network on edge classification.
///
/// Each epoch draws fresh negatives (`negative_ratio` per kept positive,
/// uniformly from the same page's negative candidates), shuffles the pages
/// and takes one gradient step per batch of `batch_size` pages. Everything is
/// driven by `cfg.seed`, so a run is reproducible bit for bit.
pub fn pretrain(
    pages: &[TrainingPage],
    cfg: &GraphTrainConfig,
) -> Result<(GraphNetParams, TrainingLog), GnnError> {
    cfg.validate()?;
    let positives_available = pages
        .iter()
        .map(|p| p.edges.iter().filter(|e| e.positive).count())
        .sum::<usize>();
    let kept = select_positive_subset(pages, cfg.data_fraction, cfg.seed);
    if kept.is_empty() {
        return Err(GnnError::NoPositives);
    }

    let mut pos_by_page: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(p, e) in &kept {
        pos_by_page.entry(p).or_default().push(e);
    }
    let neg_pool: BTreeMap<usize, Vec<usize>> = pos_by_page
        .keys()
        .map(|&p| {
            let negs = pages[p]
                .edges
                .iter()
                .enumerate()
                .filter(|(_, e)| !e.positive)
                .map(|(i, _)| i)
                .collect();
            (p, negs)
        })
        .collect();

    let mut params = GraphNetParams::init(
        NODE_FEATURE_LEN,
        cfg.hidden_dim,
        cfg.layer_count,
        cfg.mlp_hidden,
        cfg.seed,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut log = TrainingLog {
        positives_available,
        positives_used: kept.len(),
        epochs: Vec::with_capacity(cfg.epochs),
    };
    let mut page_order: Vec<usize> = pos_by_page.keys().copied().collect();

    for epoch in 0..cfg.epochs {
        let mut examples: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        for (&p, pos) in &pos_by_page {
            let list = examples.entry(p).or_default();
            list.extend(pos.iter().map(|&e| (p, e)));
            let pool = &neg_pool[&p];
            let want = (cfg.negative_ratio * pos.len()).min(pool.len());
            list.extend(pool.choose_multiple(&mut rng, want).map(|&e| (p, e)));
        }
        page_order.shuffle(&mut rng);

        let mut epoch_loss = 0.0;
        let mut epoch_correct = 0usize;
        let mut epoch_count = 0usize;
        for batch_pages in page_order.chunks(cfg.batch_size) {
            let batch: Vec<(usize, usize)> = batch_pages
                .iter()
                .flat_map(|p| examples[p].iter().copied())
                .collect();
            let (loss, grad, correct) = loss_and_grad(&params, pages, &batch)?;
            epoch_loss += loss * batch.len() as f64;
            epoch_correct += correct;
            epoch_count += batch.len();
            params.add_scaled(-cfg.learning_rate, &grad);
        }
        log.epochs.push(EpochRecord {
            epoch,
            loss: epoch_loss / epoch_count.max(1) as f64,
            accuracy: epoch_correct as f64 / epoch_count.max(1) as f64,
        });
    }
    Ok((params, log))
}
