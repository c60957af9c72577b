use ndarray::{Array2, ArrayView1, ArrayViewMut1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gnn::sigmoid;

#[derive(Debug, Error)]
pub enum HeadError {
    #[error("no positive examples in the training set")]
    NoPositives,
    #[error("no training examples")]
    NoExamples,
    #[error("every feature column is constant")]
    DegenerateFeatures,
    #[error("example {index} has {got} features, expected {expected}")]
    ShapeMismatch { index: usize, got: usize, expected: usize },
    #[error("invalid head config: {0}")]
    InvalidConfig(String),
    #[error("invalid head file: {0}")]
    BadFormat(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadExample {
    pub features: Vec<f64>,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadTrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub l2: f64,
    pub seed: u64,
    /// Decision threshold on the output probability.
    pub tau: f64,
    /// Share of examples held out for the validation report (0 disables).
    pub validation_fraction: f64,
    /// Pick τ maximizing validation F1 instead of using `tau`.
    pub tune_tau: bool,
    /// Loss weight of positive examples relative to negatives.
    pub positive_weight: f64,
    /// Lower bound on a column's standardization scale, so near-constant
    /// training columns cannot blow up on unseen layouts.
    pub min_scale: f64,
}

impl Default for HeadTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 3000,
            learning_rate: 0.5,
            momentum: 0.9,
            l2: 1e-4,
            seed: 0,
            tau: 0.5,
            validation_fraction: 0.2,
            tune_tau: false,
            positive_weight: 4.0,
            min_scale: 0.1,
        }
    }
}

impl HeadTrainConfig {
    pub fn validate(&self) -> Result<(), HeadError> {
        let bad = |m: &str| Err(HeadError::InvalidConfig(m.into()));
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must be in [0, 1)");
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad("l2 must be non-negative");
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad("tau must be in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad("validation_fraction must be in [0, 1)");
        }
        if !(self.positive_weight > 0.0 && self.positive_weight.is_finite()) {
            return bad("positive_weight must be positive");
        }
        if !(self.min_scale >= 0.0 && self.min_scale.is_finite()) {
            return bad("min_scale must be non-negative");
        }
        Ok(())
    }
}

/// Logistic classifier over standardized features.
///
/// Only the columns in `kept` are used; each is shifted by `mean` and divided
/// by `scale` before the dot product with `weights`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionHeadParams {
    pub input_len: usize,
    pub kept: Vec<usize>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub tau: f64,
}

impl FusionHeadParams {
    /// An untrained head over `input_len` raw features, all columns kept.
    pub fn identity_scaled(input_len: usize, tau: f64) -> Self {
        Self {
            input_len,
            kept: (0..input_len).collect(),
            mean: vec![0.0; input_len],
            scale: vec![1.0; input_len],
            weights: vec![0.0; input_len],
            bias: 0.0,
            tau,
        }
    }

    pub fn logit(&self, x: &[f64]) -> Result<f64, HeadError> {
        if x.len() != self.input_len {
            return Err(HeadError::ShapeMismatch { index: 0, got: x.len(), expected: self.input_len });
        }
        let mut z = self.bias;
        for (j, &c) in self.kept.iter().enumerate() {
            z += self.weights[j] * (x[c] - self.mean[j]) / self.scale[j];
        }
        Ok(z)
    }

    pub fn probability(&self, x: &[f64]) -> Result<f64, HeadError> {
        self.logit(x).map(sigmoid)
    }

    /// Multiplies weights and bias by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut p = self.clone();
        p.weights.iter_mut().for_each(|w| *w *= c);
        p.bias *= c;
        p
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite()
            && self.weights.iter().chain(&self.mean).chain(&self.scale).all(|v| v.is_finite())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("head params serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, HeadError> {
        let p: Self = serde_json::from_str(s).map_err(|e| HeadError::BadFormat(e.to_string()))?;
        let n = p.kept.len();
        if p.mean.len() != n || p.scale.len() != n || p.weights.len() != n {
            return Err(HeadError::BadFormat("column vectors disagree in length".into()));
        }
        if p.kept.iter().any(|&c| c >= p.input_len) {
            return Err(HeadError::BadFormat("kept column out of range".into()));
        }
        if !p.is_finite() || !(p.tau > 0.0 && p.tau < 1.0) {
            return Err(HeadError::BadFormat("non-finite values or tau outside (0, 1)".into()));
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub examples: usize,
    pub positives: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ClassReport {
    pub fn from_predictions(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let (mut tp, mut fp, mut fnn, mut tn) = (0usize, 0usize, 0usize, 0usize);
        for (pred, truth) in pairs {
            match (pred, truth) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fnn += 1,
                (false, false) => tn += 1,
            }
        }
        let n = tp + fp + fnn + tn;
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fnn);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        Self { examples: n, positives: tp + fnn, accuracy: ratio(tp + tn, n), precision, recall, f1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadReport {
    pub train: ClassReport,
    pub validation: Option<ClassReport>,
    pub final_loss: f64,
    pub tau: f64,
    /// Input columns dropped for having zero variance.
    pub dropped_columns: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Training rows in factored form: each row is `[semantic ‖ graph_rows[graph_row]]`.
/// Graph embeddings depend only on the edge, so rows for different queries
/// over the same edge share one stored embedding.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HeadSet {
    pub graph_rows: Vec<Vec<f64>>,
    pub rows: Vec<HeadRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadRow {
    pub semantic: Vec<f64>,
    pub graph_row: usize,
    pub label: bool,
}

impl HeadSet {
    /// Wraps plain examples; each becomes a semantic part with an empty graph row.
    pub fn from_examples(examples: &[HeadExample]) -> Self {
        Self {
            graph_rows: vec![Vec::new()],
            rows: examples
                .iter()
                .map(|e| HeadRow { semantic: e.features.clone(), graph_row: 0, label: e.label })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.rows.iter().filter(|r| r.label).count()
    }

    /// The full input row `i`.
    pub fn features(&self, i: usize) -> Vec<f64> {
        let r = &self.rows[i];
        let mut v = r.semantic.clone();
        v.extend_from_slice(&self.graph_rows[r.graph_row]);
        v
    }

    /// `(semantic length, graph length)`, checked to be uniform.
    fn shape(&self) -> Result<(usize, usize), HeadError> {
        let sem = self.rows.first().map(|r| r.semantic.len()).unwrap_or(0);
        let graph = self.rows.first().map(|r| self.graph_rows[r.graph_row].len()).unwrap_or(0);
        for (i, r) in self.rows.iter().enumerate() {
            let g = self.graph_rows.get(r.graph_row).map(Vec::len);
            if r.semantic.len() != sem || g != Some(graph) {
                return Err(HeadError::ShapeMismatch {
                    index: i,
                    got: r.semantic.len() + g.unwrap_or(0),
                    expected: sem + graph,
                });
            }
        }
        Ok((sem, graph))
    }

    fn subset(&self, idx: &[usize]) -> HeadSet {
        HeadSet { graph_rows: self.graph_rows.clone(), rows: idx.iter().map(|&i| self.rows[i].clone()).collect() }
    }
}

/// Standardized copy of a set, split along the semantic/graph boundary.
struct Standardized {
    sem: Array2<f64>,
    /// One row per graph row of the set; empty source rows stay zero.
    graph: Array2<f64>,
    graph_row: Vec<usize>,
    labels: Vec<bool>,
    /// Number of kept columns that are semantic; the rest are graph columns.
    sem_kept: usize,
}

impl Standardized {
    fn new(params: &FusionHeadParams, set: &HeadSet, sem_len: usize) -> Self {
        let sem_kept = params.kept.iter().take_while(|&&c| c < sem_len).count();
        let std_col = |j: usize, x: f64| (x - params.mean[j]) / params.scale[j];
        let sem = Array2::from_shape_fn((set.rows.len(), sem_kept), |(i, j)| {
            std_col(j, set.rows[i].semantic[params.kept[j]])
        });
        let mut graph = Array2::zeros((set.graph_rows.len(), params.kept.len() - sem_kept));
        for (mut out, g) in graph.rows_mut().into_iter().zip(&set.graph_rows) {
            if g.is_empty() {
                continue;
            }
            for (o, j) in out.iter_mut().zip(sem_kept..params.kept.len()) {
                *o = std_col(j, g[params.kept[j] - sem_len]);
            }
        }
        Self {
            sem,
            graph,
            graph_row: set.rows.iter().map(|r| r.graph_row).collect(),
            labels: set.rows.iter().map(|r| r.label).collect(),
            sem_kept,
        }
    }

    /// The loss is computed only when `with_loss` is set (NaN otherwise).
    fn loss_grad(&self, w: &[f64], b: f64, l2: f64, positive_weight: f64, with_loss: bool) -> (f64, Vec<f64>, f64) {
        let (ws, wg) = w.split_at(self.sem_kept);
        let gz = self.graph.dot(&ArrayView1::from(wg));
        let n = self.sem.nrows().max(1) as f64;
        let mut gw = vec![0.0; w.len()];
        let mut d_graph = vec![0.0; self.graph.nrows()];
        let mut gb = 0.0;
        let mut loss = 0.0;
        let sz = self.sem.dot(&ArrayView1::from(ws));
        let mut d_sem = Vec::with_capacity(self.labels.len());
        for ((&zs, &r), &y) in sz.iter().zip(&self.graph_row).zip(&self.labels) {
            let z = b + zs + gz[r];
            let (wt, t) = if y { (positive_weight, 1.0) } else { (1.0, 0.0) };
            if with_loss {
                // log(1 + e^z) - t·z without overflow.
                let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
                loss += wt * (softplus - t * z);
            }
            let d = wt * (sigmoid(z) - t);
            gb += d;
            d_sem.push(d);
            d_graph[r] += d;
        }
        for (x, &d) in self.sem.rows().into_iter().zip(&d_sem) {
            for (g, xi) in gw.iter_mut().zip(x) {
                *g += d * xi;
            }
        }
        let (_, gwg) = gw.split_at_mut(self.sem_kept);
        let mut gwg = ArrayViewMut1::from(gwg);
        for (g, &d) in self.graph.rows().into_iter().zip(&d_graph) {
            if d != 0.0 {
                gwg.scaled_add(d, &g);
            }
        }
        loss /= n;
        gb /= n;
        for (g, wi) in gw.iter_mut().zip(w) {
            *g = *g / n + l2 * wi;
        }
        loss += 0.5 * l2 * dot(w, w);
        (if with_loss { loss } else { f64::NAN }, gw, gb)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mean weighted cross-entropy plus `l2/2 · |w|²`, and its gradient with
/// respect to `(weights, bias)`. Standardization uses the head's own
/// `mean`/`scale`.
pub fn head_loss_and_grad(
    params: &FusionHeadParams,
    set: &HeadSet,
    l2: f64,
    positive_weight: f64,
) -> Result<(f64, Vec<f64>, f64), HeadError> {
    let (sem_len, graph_len) = set.shape()?;
    if sem_len + graph_len != params.input_len {
        return Err(HeadError::ShapeMismatch { index: 0, got: sem_len + graph_len, expected: params.input_len });
    }
    let st = Standardized::new(params, set, sem_len);
    Ok(st.loss_grad(&params.weights, params.bias, l2, positive_weight, true))
}

/// Fits the head by full-batch heavy-ball gradient descent.
///
/// A seeded shuffle sets aside `validation_fraction` of the rows for the
/// report; the final model is fit on the remaining ones.
pub fn train_head(set: &HeadSet, cfg: &HeadTrainConfig) -> Result<(FusionHeadParams, HeadReport), HeadError> {
    cfg.validate()?;
    if set.is_empty() {
        return Err(HeadError::NoExamples);
    }
    let (sem_len, graph_len) = set.shape()?;
    if set.positives() == 0 {
        return Err(HeadError::NoPositives);
    }

    let mut order: Vec<usize> = (0..set.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let n_val = (set.len() as f64 * cfg.validation_fraction).floor() as usize;
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut train_idx = train_idx.to_vec();
    train_idx.sort_unstable();
    let mut val_idx = val_idx.to_vec();
    val_idx.sort_unstable();
    let mut train = set.subset(&train_idx);
    if train.positives() == 0 {
        // Every positive landed in validation; train on everything instead.
        train = set.clone();
    }
    let val = set.subset(&val_idx);

    let mut warnings = Vec::new();
    let mut params = fit_standardization(&train, sem_len, graph_len, cfg.tau, cfg.min_scale);
    let dropped: Vec<usize> = (0..sem_len + graph_len).filter(|c| params.kept.binary_search(c).is_err()).collect();
    if params.kept.is_empty() {
        return Err(HeadError::DegenerateFeatures);
    }
    if !dropped.is_empty() {
        warnings.push(format!("dropped {} zero-variance feature columns", dropped.len()));
    }

    let st = Standardized::new(&params, &train, sem_len);
    let mut vel_w = vec![0.0; params.kept.len()];
    let mut vel_b = 0.0;
    let mut final_loss = f64::NAN;
    for epoch in 0..cfg.epochs {
        let last = epoch + 1 == cfg.epochs;
        let (loss, gw, gb) = st.loss_grad(&params.weights, params.bias, cfg.l2, cfg.positive_weight, last);
        final_loss = loss;
        for ((w, v), g) in params.weights.iter_mut().zip(&mut vel_w).zip(&gw) {
            *v = cfg.momentum * *v - cfg.learning_rate * g;
            *w += *v;
        }
        vel_b = cfg.momentum * vel_b - cfg.learning_rate * gb;
        params.bias += vel_b;
    }
    if !params.is_finite() {
        return Err(HeadError::InvalidConfig("training diverged; lower learning_rate".into()));
    }

    let probs = |p: &FusionHeadParams, s: &HeadSet| -> Vec<(f64, bool)> {
        (0..s.len())
            .map(|i| (p.probability(&s.features(i)).expect("checked shape"), s.rows[i].label))
            .collect()
    };
    let val_probs = probs(&params, &val);
    if cfg.tune_tau && val_probs.iter().any(|p| p.1) {
        params.tau = best_tau(&val_probs);
    }
    let report_of =
        |ps: &[(f64, bool)], tau: f64| ClassReport::from_predictions(ps.iter().map(|&(p, y)| (p >= tau, y)));
    let report = HeadReport {
        train: report_of(&probs(&params, &train), params.tau),
        validation: (!val.is_empty()).then(|| report_of(&val_probs, params.tau)),
        final_loss,
        tau: params.tau,
        dropped_columns: dropped,
        warnings,
    };
    Ok((params, report))
}

fn fit_standardization(train: &HeadSet, sem_len: usize, graph_len: usize, tau: f64, min_scale: f64) -> FusionHeadParams {
    let n = train.len() as f64;
    let mut uses = vec![0usize; train.graph_rows.len()];
    for r in &train.rows {
        uses[r.graph_row] += 1;
    }
    let mut kept = Vec::new();
    let mut mean = Vec::new();
    let mut scale = Vec::new();
    let mut push = |c: usize, m: f64, var: f64| {
        if var > 1e-24 {
            kept.push(c);
            mean.push(m);
            scale.push(var.sqrt().max(min_scale));
        }
    };
    for c in 0..sem_len {
        let m = train.rows.iter().map(|r| r.semantic[c]).sum::<f64>() / n;
        let var = train.rows.iter().map(|r| (r.semantic[c] - m).powi(2)).sum::<f64>() / n;
        push(c, m, var);
    }
    let weighted = |f: &dyn Fn(f64) -> f64, c: usize| -> f64 {
        train
            .graph_rows
            .iter()
            .zip(&uses)
            .filter(|(_, &u)| u > 0)
            .map(|(g, &u)| u as f64 * f(g[c]))
            .sum::<f64>()
            / n
    };
    for c in 0..graph_len {
        let m = weighted(&|x| x, c);
        let var = weighted(&|x| (x - m).powi(2), c);
        push(sem_len + c, m, var);
    }
    let k = kept.len();
    FusionHeadParams { input_len: sem_len + graph_len, kept, mean, scale, weights: vec![0.0; k], bias: 0.0, tau }
}

/// Threshold in (0, 1) maximizing F1 over `(probability, label)` pairs.
fn best_tau(ps: &[(f64, bool)]) -> f64 {
    let mut best = (f64::NEG_INFINITY, 0.5);
    for i in 1..100 {
        let tau = i as f64 / 100.0;
        let f1 = ClassReport::from_predictions(ps.iter().map(|&(p, y)| (p >= tau, y))).f1;
        if f1 > best.0 {
            best = (f1, tau);
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn blobs(n: usize, seed: u64) -> Vec<HeadExample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let label = i % 3 == 0;
                let c = if label { 2.0 } else { -2.0 };
                HeadExample {
                    features: vec![c + rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 7.0],
                    label,
                }
            })
            .collect()
    }

    #[test]
    fn separable_reaches_full_accuracy() {
        let (p, r) = train_head(&HeadSet::from_examples(&blobs(120, 1)), &HeadTrainConfig::default()).unwrap();
        assert_eq!(r.train.accuracy, 1.0);
        assert_eq!(r.validation.unwrap().accuracy, 1.0);
        assert_eq!(r.dropped_columns, vec![2]);
        assert_eq!(r.warnings.len(), 1);
        assert!(p.is_finite());
    }

    #[test]
    fn no_positives() {
        let ex: Vec<_> = blobs(10, 0).into_iter().map(|e| HeadExample { label: false, ..e }).collect();
        assert!(matches!(train_head(&HeadSet::from_examples(&ex), &HeadTrainConfig::default()), Err(HeadError::NoPositives)));
    }

    #[test]
    fn all_constant_is_degenerate() {
        let ex = vec![
            HeadExample { features: vec![1.0, 2.0], label: true },
            HeadExample { features: vec![1.0, 2.0], label: false },
        ];
        let cfg = HeadTrainConfig { validation_fraction: 0.0, ..Default::default() };
        assert!(matches!(train_head(&HeadSet::from_examples(&ex), &cfg), Err(HeadError::DegenerateFeatures)));
    }

    #[test]
    fn deterministic() {
        let ex = HeadSet::from_examples(&blobs(60, 4));
        let a = train_head(&ex, &HeadTrainConfig::default()).unwrap();
        let b = train_head(&ex, &HeadTrainConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn json_round_trip() {
        let (p, _) = train_head(&HeadSet::from_examples(&blobs(30, 2)), &HeadTrainConfig::default()).unwrap();
        assert_eq!(FusionHeadParams::from_json(&p.to_json()).unwrap(), p);
        assert!(FusionHeadParams::from_json("{}").is_err());
    }

    #[test]
    fn scaling_preserves_order() {
        let ex = blobs(50, 3);
        let (p, _) = train_head(&HeadSet::from_examples(&ex), &HeadTrainConfig::default()).unwrap();
        let order = |p: &FusionHeadParams| {
            let mut idx: Vec<usize> = (0..ex.len()).collect();
            idx.sort_by(|&a, &b| {
                p.logit(&ex[b].features).unwrap().total_cmp(&p.logit(&ex[a].features).unwrap())
            });
            idx
        };
        assert_eq!(order(&p), order(&p.scaled(3.7)));
    }

    #[test]
    fn factored_matches_flat() {
        // Same rows, once flat and once with the last two columns shared.
        let flat = blobs(40, 5);
        let mut fact = HeadSet { graph_rows: Vec::new(), rows: Vec::new() };
        for e in &flat {
            fact.graph_rows.push(e.features[1..].to_vec());
            fact.rows.push(HeadRow { semantic: e.features[..1].to_vec(), graph_row: fact.graph_rows.len() - 1, label: e.label });
        }
        let cfg = HeadTrainConfig { epochs: 50, ..Default::default() };
        let (a, _) = train_head(&HeadSet::from_examples(&flat), &cfg).unwrap();
        let (b, _) = train_head(&fact, &cfg).unwrap();
        assert_eq!(a.kept, b.kept);
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn report_counts() {
        let r = ClassReport::from_predictions([(true, true), (true, false), (false, true), (false, false)]);
        assert_eq!((r.accuracy, r.precision, r.recall, r.f1), (0.5, 0.5, 0.5, 0.5));
    }
}
