//! Corpus preparation, training and prediction wired end to end.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    evaluate_by_unit, ground_truth_units, heuristic_baseline, make_split, EvalReport, MatchRule, Split,
    SplitError, SplitSpec, UnitKey, UnitTruth,
};
use crate::corpus::{
    assign_layout, compute_text_freq, parse_html, Dataset, DatasetError, KeywordSpec, LayoutError,
    LayoutSource, PageDoc, ParseError,
};
use crate::gnn::{pretrain, FrozenExtractor, GnnError, GraphTrainConfig, LabeledEdge, TrainingLog, TrainingPage};
use crate::graph::{build_graph, ConfigError, compute_edge_features, generate_virtual_edges, CandidateConfig, GraphError, PageGraph};
use crate::par;
use crate::scorer::{
    extract_with_embeddings, semantic_rows, train_head, virtual_edge_embeddings, ExtractError, ExtractionTuple,
    FusionHeadParams, HeadError, HeadReport, HeadRow, HeadSet, HeadTrainConfig, LexicalScorer, RelationQuery,
    SemanticScorer,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("corpus: {0}")]
    Dataset(#[from] DatasetError),
    #[error("layout: {0}")]
    Layout(#[from] LayoutError),
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("graph model: {0}")]
    Gnn(#[from] GnnError),
    #[error("fusion head: {0}")]
    Head(#[from] HeadError),
    #[error("extraction: {0}")]
    Extract(#[from] ExtractError),
    #[error("split: {0}")]
    Split(#[from] SplitError),
    #[error("candidate config: {0}")]
    Config(#[from] ConfigError),
    #[error("no training pages")]
    NoTrainingPages,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub candidates: CandidateConfig,
    pub graph: GraphTrainConfig,
    pub head: HeadTrainConfig,
    /// Feed frozen graph embeddings to the head; off gives the
    /// semantic-only arm.
    pub use_graph: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            candidates: CandidateConfig::default(),
            graph: GraphTrainConfig::default(),
            head: HeadTrainConfig::default(),
            use_graph: true,
        }
    }
}

/// A parsed, laid-out page with its graph, virtual edges and their features.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedPage {
    pub vertical: String,
    pub website: String,
    pub doc: PageDoc,
    pub graph: PageGraph,
    /// Flattened edge features, one per virtual edge in `graph` order.
    pub edge_features: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedCorpus {
    pub pages: Vec<PreparedPage>,
    pub keywords: BTreeMap<String, Vec<KeywordSpec>>,
    /// Ground truth for every (page, keyword) unit of the corpus.
    pub truth: BTreeMap<UnitKey, UnitTruth>,
    /// Pages dropped during parsing, as `(page, reason)`.
    pub skipped: Vec<(String, String)>,
}

impl PreparedCorpus {
    pub fn page_indices(&self, mut keep: impl FnMut(&str, &str) -> bool) -> Vec<usize> {
        (0..self.pages.len())
            .filter(|&i| keep(&self.pages[i].vertical, &self.pages[i].website))
            .collect()
    }

    fn unit_truth(&self, page: &PreparedPage, kw: &KeywordSpec) -> Option<&UnitTruth> {
        self.truth.get(&UnitKey::new(page.doc.page.qualified(), kw.keyword.clone()))
    }
}

/// Parses every page, assigns layout, computes per-website text statistics,
/// builds graphs and candidate edges.
pub fn prepare_corpus(ds: &Dataset, cfg: &CandidateConfig) -> Result<PreparedCorpus, PipelineError> {
    cfg.validate()?;
    let rule = MatchRule;
    let mut pages = Vec::new();
    let mut skipped = Vec::new();
    let mut truth = BTreeMap::new();
    let mut keywords = BTreeMap::new();
    for v in &ds.verticals {
        keywords.insert(v.id.clone(), v.keywords.clone());
        truth.extend(ground_truth_units(v, |_| true, &rule));
        for site in &v.websites {
            let parsed: Vec<Result<PageDoc, ParseError>> = par::map(&site.pages, parse_html);
            let mut docs = Vec::new();
            for (raw, r) in site.pages.iter().zip(parsed) {
                match r {
                    Ok(doc) => {
                        let source = match site.sidecars.get(&raw.page_id) {
                            Some(rows) => LayoutSource::Sidecar(rows.clone()),
                            None => LayoutSource::Heuristic,
                        };
                        docs.push(assign_layout(doc, &source)?);
                    }
                    Err(e) => skipped.push((raw.page_ref().qualified(), e.to_string())),
                }
            }
            if docs.is_empty() {
                continue;
            }
            let freq = compute_text_freq(&docs)?;
            let built: Vec<Result<PreparedPage, GraphError>> = par::map(&docs, |doc| {
                let mut graph = build_graph(doc, &freq)?;
                graph.set_virtual_edges(generate_virtual_edges(&graph, doc, &freq, cfg));
                let edge_features = graph
                    .virtual_edges()
                    .iter()
                    .map(|&e| compute_edge_features(&graph, doc, e).map(|f| f.to_flat()))
                    .collect::<Result<_, _>>()?;
                Ok(PreparedPage {
                    vertical: v.id.clone(),
                    website: site.id.clone(),
                    doc: doc.clone(),
                    graph,
                    edge_features,
                })
            });
            for p in built {
                pages.push(p?);
            }
        }
    }
    Ok(PreparedCorpus { pages, keywords, truth, skipped })
}

/// Virtual edges of `page` whose texts match an annotation of `truth`.
fn positive_edges<'a>(page: &PreparedPage, truths: impl Iterator<Item = &'a UnitTruth>) -> BTreeSet<(usize, usize)> {
    let rule = MatchRule;
    let mut wanted: BTreeSet<(String, String)> = BTreeSet::new();
    for t in truths {
        for (r, v) in &t.tuples {
            wanted.insert((rule.normalize(r), rule.normalize(v)));
        }
    }
    page.graph
        .virtual_edges()
        .iter()
        .copied()
        .filter(|&(k, v)| wanted.contains(&(rule.normalize(page.doc.text(k)), rule.normalize(page.doc.text(v)))))
        .collect()
}

/// Head labels for one (page, keyword): positive iff the edge's texts match
/// an annotation of that keyword.
fn unit_labels(page: &PreparedPage, truth: Option<&UnitTruth>) -> Vec<bool> {
    let pos = positive_edges(page, truth.into_iter());
    page.graph.virtual_edges().iter().map(|e| pos.contains(e)).collect()
}

#[derive(Debug, Clone)]
pub struct TrainedModels {
    pub extractor: Option<FrozenExtractor>,
    pub graph_log: Option<TrainingLog>,
    pub head: FusionHeadParams,
    pub head_report: HeadReport,
    pub lexical: LexicalScorer,
}

/// Median annotated value lengths over the training pages.
pub fn fit_lexical(corpus: &PreparedCorpus, train: &[usize]) -> LexicalScorer {
    LexicalScorer::fit(train.iter().flat_map(|&i| {
        let p = &corpus.pages[i];
        corpus.keywords[&p.vertical].iter().flat_map(move |kw| {
            corpus
                .unit_truth(p, kw)
                .into_iter()
                .flat_map(move |t| t.tuples.iter().map(move |(_, v)| (kw.keyword.as_str(), v.as_str())))
        })
    }))
}

/// Pretrains the graph network on the virtual edges of `train` pages, a
/// positive being any edge that matches an annotation of any keyword, and
/// freezes it.
pub fn pretrain_graph(
    corpus: &PreparedCorpus,
    train: &[usize],
    cfg: &GraphTrainConfig,
) -> Result<(FrozenExtractor, TrainingLog), PipelineError> {
    if train.is_empty() {
        return Err(PipelineError::NoTrainingPages);
    }
    let pages: Vec<TrainingPage> = train
        .iter()
        .map(|&i| {
            let p = &corpus.pages[i];
            let truths = corpus.keywords[&p.vertical].iter().filter_map(|kw| corpus.unit_truth(p, kw));
            let pos = positive_edges(p, truths);
            TrainingPage {
                graph: p.graph.clone(),
                edges: p
                    .graph
                    .virtual_edges()
                    .iter()
                    .zip(&p.edge_features)
                    .map(|(&(k, v), f)| LabeledEdge { k, v, features: f.clone(), positive: pos.contains(&(k, v)) })
                    .collect(),
            }
        })
        .collect();
    let (params, log) = pretrain(&pages, cfg)?;
    Ok((params.freeze_and_export(), log))
}

/// Fits the fusion head on `train` pages over a fixed (or absent) extractor.
pub fn fit_head(
    corpus: &PreparedCorpus,
    train: &[usize],
    extractor: Option<FrozenExtractor>,
    cfg: &HeadTrainConfig,
    scorer: Option<&dyn SemanticScorer>,
) -> Result<TrainedModels, PipelineError> {
    if train.is_empty() {
        return Err(PipelineError::NoTrainingPages);
    }
    let lexical = fit_lexical(corpus, train);
    let scorer: &dyn SemanticScorer = scorer.unwrap_or(&lexical);
    let set = head_set(corpus, train, extractor.as_ref(), scorer)?;
    let (head, head_report) = train_head(&set, cfg)?;
    Ok(TrainedModels { extractor, graph_log: None, head, head_report, lexical })
}

/// Pretrains the graph model (when enabled), freezes it, and fits the fusion
/// head on `train` pages. `scorer` overrides the lexical scorer fitted on
/// the training annotations.
pub fn train_models(
    corpus: &PreparedCorpus,
    train: &[usize],
    cfg: &PipelineConfig,
    scorer: Option<&dyn SemanticScorer>,
) -> Result<TrainedModels, PipelineError> {
    if train.is_empty() {
        return Err(PipelineError::NoTrainingPages);
    }
    let (extractor, graph_log) = if cfg.use_graph {
        let (e, log) = pretrain_graph(corpus, train, &cfg.graph)?;
        (Some(e), Some(log))
    } else {
        (None, None)
    };
    let mut models = fit_head(corpus, train, extractor, &cfg.head, scorer)?;
    models.graph_log = graph_log;
    Ok(models)
}

/// Head training rows for every (page, keyword, virtual edge) of `pages`.
pub fn head_set(
    corpus: &PreparedCorpus,
    pages: &[usize],
    extractor: Option<&FrozenExtractor>,
    scorer: &dyn SemanticScorer,
) -> Result<HeadSet, PipelineError> {
    let per_page: Vec<Result<(Vec<Vec<f64>>, Vec<(Vec<f64>, usize, bool)>), PipelineError>> =
        par::map(pages, |&i| {
            let p = &corpus.pages[i];
            let emb = virtual_edge_embeddings(&p.doc, &p.graph, extractor)?;
            let mut rows = Vec::new();
            for kw in &corpus.keywords[&p.vertical] {
                let q = RelationQuery::new(kw.keyword.clone(), kw.description.clone());
                let sem = semantic_rows(&p.doc, &p.graph, &q, scorer)?;
                let labels = unit_labels(p, corpus.unit_truth(p, kw));
                rows.extend(sem.into_iter().zip(labels).enumerate().map(|(e, (s, l))| (s.vector, e, l)));
            }
            Ok((emb, rows))
        });
    let mut set = HeadSet::default();
    for r in per_page {
        let (emb, rows) = r?;
        let offset = set.graph_rows.len();
        set.graph_rows.extend(emb);
        set.rows.extend(
            rows.into_iter()
                .map(|(semantic, e, label)| HeadRow { semantic, graph_row: offset + e, label }),
        );
    }
    Ok(set)
}

/// Runs extraction for every keyword of every page in `pages`.
pub fn predict(
    corpus: &PreparedCorpus,
    pages: &[usize],
    models: &TrainedModels,
    scorer: Option<&dyn SemanticScorer>,
) -> Result<BTreeMap<UnitKey, Vec<ExtractionTuple>>, PipelineError> {
    let scorer: &dyn SemanticScorer = scorer.unwrap_or(&models.lexical);
    let per_page = par::map(pages, |&i| -> Result<Vec<(UnitKey, Vec<ExtractionTuple>)>, PipelineError> {
        let p = &corpus.pages[i];
        let emb = virtual_edge_embeddings(&p.doc, &p.graph, models.extractor.as_ref())?;
        let mut out = Vec::new();
        for kw in &corpus.keywords[&p.vertical] {
            let q = RelationQuery::new(kw.keyword.clone(), kw.description.clone());
            let tuples = extract_with_embeddings(&p.doc, &p.graph, &q, &models.head, scorer, &emb)?;
            out.push((UnitKey::new(p.doc.page.qualified(), kw.keyword.clone()), tuples));
        }
        Ok(out)
    });
    let mut map = BTreeMap::new();
    for r in per_page {
        map.extend(r?);
    }
    Ok(map)
}

pub fn run_baseline(
    corpus: &PreparedCorpus,
    pages: &[usize],
    cfg: &CandidateConfig,
) -> BTreeMap<UnitKey, Vec<ExtractionTuple>> {
    let mut map = BTreeMap::new();
    for &i in pages {
        let p = &corpus.pages[i];
        for kw in &corpus.keywords[&p.vertical] {
            let q = RelationQuery::new(kw.keyword.clone(), kw.description.clone());
            map.insert(
                UnitKey::new(p.doc.page.qualified(), kw.keyword.clone()),
                heuristic_baseline(&p.doc, &p.graph, &q, cfg),
            );
        }
    }
    map
}

/// Ground truth restricted to `pages`.
pub fn truth_for(corpus: &PreparedCorpus, pages: &[usize]) -> BTreeMap<UnitKey, UnitTruth> {
    let names: BTreeSet<String> = pages.iter().map(|&i| corpus.pages[i].doc.page.qualified()).collect();
    corpus
        .truth
        .iter()
        .filter(|(k, _)| names.contains(&k.page))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect()
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub split: Split,
    pub models: TrainedModels,
    pub predictions: BTreeMap<UnitKey, Vec<ExtractionTuple>>,
    pub report: EvalReport,
    pub baseline: EvalReport,
}

/// Split, train on the train side, evaluate model and baseline on the test side.
pub fn run_pipeline(
    corpus: &PreparedCorpus,
    ds: &Dataset,
    split_spec: &SplitSpec,
    cfg: &PipelineConfig,
) -> Result<RunOutcome, PipelineError> {
    let split = make_split(ds, split_spec)?;
    let train = corpus.page_indices(|v, w| split.is_train(v, w));
    let test = corpus.page_indices(|v, w| split.is_test(v, w));
    let models = train_models(corpus, &train, cfg, None)?;
    let predictions = predict(corpus, &test, &models, None)?;
    let truth = truth_for(corpus, &test);
    let rule = MatchRule;
    let label = split_spec.label();
    let report = EvalReport::from_units(label.clone(), &evaluate_by_unit(&predictions, &truth, &rule));
    let base_preds = run_baseline(corpus, &test, &cfg.candidates);
    let baseline = EvalReport::from_units(format!("{label} baseline"), &evaluate_by_unit(&base_preds, &truth, &rule));
    Ok(RunOutcome { split, models, predictions, report, baseline })
}
