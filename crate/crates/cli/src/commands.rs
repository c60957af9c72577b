use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use relgraph_core::config::{RunConfig, ScorerSelection};
use relgraph_core::corpus::{
    assign_layout, compute_text_freq, load_dataset, parse_html, write_corpus_dir, write_dataset, Dataset,
    LayoutSource, PageDoc, StoredWebsite,
};
use relgraph_core::eval::{
    evaluate_by_unit, fit_head, fit_lexical, generate_synthetic, make_split, predict, prepare_corpus,
    pretrain_graph as pretrain, run_ablation, run_baseline, truth_for, AblationReport, AblationSpec, EvalReport,
    MatchRule, NoiseSpec, PreparedCorpus, SynthSpec, TrainedModels, UnitKey,
};
use relgraph_core::gnn::FrozenExtractor;
use relgraph_core::graph::{build_graph, generate_virtual_edges};
use relgraph_core::manifest::RunManifest;
use relgraph_core::scorer::neural::connect_or_fallback;
use relgraph_core::scorer::{extract as extract_page, FusionHeadParams, HeadReport, LexicalScorer, SemanticScorer};
use relgraph_core::{PageGraph, RawPage, RelationQuery};

use crate::error::CliError;
use crate::predictions::{parse_tsv, to_tsv};
use crate::{EvaluateArgs, ExtractArgs, Noise, PageSet, ReportArgs, SynthArgs, TrainHeadArgs};

const GRAPH_FILE: &str = "graph.bin";
const GRAPH_LOG_FILE: &str = "graph-train.jsonl";
const HEAD_FILE: &str = "head.json";
const HEAD_REPORT_FILE: &str = "head-report.json";
const LEXICAL_FILE: &str = "lexical.json";
const MODELS_FILE: &str = "models.json";
const PREDICTIONS_FILE: &str = "predictions.tsv";

/// What `extract` and `evaluate` need to know about a trained head.
#[derive(Debug, Serialize, Deserialize)]
struct ModelsInfo {
    scorer: String,
    semantic_len: usize,
    use_graph: bool,
}

/// Output directory plus the manifest being assembled for it.
struct Run {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Run {
    fn start(command: &str, cfg: &RunConfig) -> Result<Self, CliError> {
        fs::create_dir_all(&cfg.out).map_err(CliError::io(&cfg.out))?;
        Ok(Self { dir: cfg.out.clone(), manifest: RunManifest::new(command, cfg) })
    }

    fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(CliError::io(&path))?;
        self.manifest.add_artifact(&self.dir, name).map_err(CliError::io(path))
    }

    fn input(&mut self, path: &Path) -> Result<(), CliError> {
        self.manifest.add_input(path).map_err(CliError::io(path))
    }

    fn note(&mut self, message: String) {
        eprintln!("warning: {message}");
        self.manifest.diagnostics.push(message);
    }

    fn finish(self) -> Result<(), CliError> {
        self.manifest.write(&self.dir).map_err(CliError::io(&self.dir))?;
        eprintln!("wrote {}", self.dir.display());
        Ok(())
    }
}

fn load(cfg: &RunConfig, run: &mut Run) -> Result<Dataset, CliError> {
    let root = cfg
        .dataset
        .as_ref()
        .ok_or_else(|| CliError::Usage("no dataset: pass --dataset or set `dataset` in the config".into()))?;
    if !root.is_dir() {
        return Err(CliError::Usage(format!("dataset root {} is not a directory", root.display())));
    }
    let ds = load_dataset(root)?;
    for d in &ds.diagnostics {
        run.note(d.to_string());
    }
    if ds.page_count() == 0 {
        return Err(CliError::Usage(format!("no pages under {}", root.display())));
    }
    Ok(ds)
}

fn prepare(cfg: &RunConfig, ds: &Dataset, run: &mut Run) -> Result<PreparedCorpus, CliError> {
    let corpus = prepare_corpus(ds, &cfg.candidates)?;
    for (page, reason) in &corpus.skipped {
        run.note(format!("skipped {page}: {reason}"));
    }
    Ok(corpus)
}

/// Training and test page indices under the configured split.
fn split_pages(cfg: &RunConfig, ds: &Dataset, corpus: &PreparedCorpus) -> Result<(Vec<usize>, Vec<usize>), CliError> {
    let split = make_split(ds, &cfg.split_spec())?;
    let train = corpus.page_indices(|v, w| split.is_train(v, w));
    let test = corpus.page_indices(|v, w| split.is_test(v, w));
    Ok((train, test))
}

/// The configured semantic scorer, falling back to `lexical` when a neural
/// endpoint cannot be reached.
fn scorer(cfg: &RunConfig, lexical: LexicalScorer, run: &mut Run) -> Box<dyn SemanticScorer> {
    let s: Box<dyn SemanticScorer> = match &cfg.scorer {
        ScorerSelection::Lexical => Box::new(lexical),
        ScorerSelection::Neural { endpoint, timeout_ms } => {
            let (s, event) = connect_or_fallback(endpoint, Duration::from_millis(*timeout_ms), lexical);
            if let Some(e) = event {
                eprintln!("warning: neural scorer at {} unavailable ({}); using lexical", e.endpoint, e.reason);
                run.manifest.fallback_events.push(e);
            }
            s
        }
    };
    run.manifest.scorer = Some(s.identity());
    s
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, run: &mut Run) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    run.input(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::BadInput { path: path.to_path_buf(), line: e.line(), message: e.to_string() })
}

struct LoadedModels {
    info: ModelsInfo,
    head: FusionHeadParams,
    head_report: HeadReport,
    lexical: LexicalScorer,
    extractor: Option<FrozenExtractor>,
}

fn load_models(dir: &Path, run: &mut Run) -> Result<LoadedModels, CliError> {
    let info: ModelsInfo = read_json(&dir.join(MODELS_FILE), run)?;
    let head_path = dir.join(HEAD_FILE);
    let head = FusionHeadParams::from_json(&fs::read_to_string(&head_path).map_err(CliError::io(&head_path))?)?;
    run.input(&head_path)?;
    let head_report = read_json(&dir.join(HEAD_REPORT_FILE), run)?;
    let lexical = read_json(&dir.join(LEXICAL_FILE), run)?;
    let extractor = if info.use_graph {
        let path = dir.join(GRAPH_FILE);
        let bytes = fs::read(&path).map_err(CliError::io(&path))?;
        run.input(&path)?;
        Some(FrozenExtractor::from_bytes(&bytes)?)
    } else {
        None
    };
    run.manifest.tau = Some(head.tau);
    Ok(LoadedModels { info, head, head_report, lexical, extractor })
}

fn check_scorer(info: &ModelsInfo, s: &dyn SemanticScorer) -> Result<(), CliError> {
    if s.feature_len() != info.semantic_len {
        return Err(CliError::Usage(format!(
            "head was trained with scorer {} ({} features); {} gives {}",
            info.scorer,
            info.semantic_len,
            s.identity(),
            s.feature_len()
        )));
    }
    Ok(())
}

pub fn ingest(cfg: &RunConfig) -> Result<(), CliError> {
    let mut run = Run::start("ingest", cfg)?;
    let ds = load(cfg, &mut run)?;
    cfg.candidates.validate().map_err(relgraph_core::eval::PipelineError::from)?;
    let mut sites = Vec::new();
    let (mut pages, mut edges) = (0, 0);
    for v in &ds.verticals {
        for w in &v.websites {
            let mut docs = Vec::new();
            for raw in &w.pages {
                match parse_html(raw) {
                    Ok(doc) => {
                        let source = w.sidecars.get(&raw.page_id).cloned().map_or(LayoutSource::Heuristic, LayoutSource::Sidecar);
                        docs.push(assign_layout(doc, &source)?);
                    }
                    Err(e) => run.note(format!("skipped {}: {e}", raw.page_ref().qualified())),
                }
            }
            if docs.is_empty() {
                continue;
            }
            let freq = compute_text_freq(&docs)?;
            let mut graphs = Vec::new();
            for d in &docs {
                let mut g = build_graph(d, &freq)?;
                g.set_virtual_edges(generate_virtual_edges(&g, d, &freq, &cfg.candidates));
                edges += g.virtual_edges().len();
                graphs.push(g);
            }
            pages += docs.len();
            sites.push(StoredWebsite { vertical_id: v.id.clone(), website_id: w.id.clone(), freq, docs, graphs });
        }
    }
    write_corpus_dir(&run.dir.join("corpus"), &sites)?;
    let summary = json!({
        "verticals": ds.verticals.len(),
        "websites": sites.len(),
        "pages": pages,
        "virtual_edges": edges,
        "diagnostics": run.manifest.diagnostics,
    });
    run.write("ingest.json", serde_json::to_string_pretty(&summary).unwrap() + "\n")?;
    println!("{} pages from {} websites, {edges} candidate edges", pages, sites.len());
    run.finish()
}

pub fn synth_gen(cfg: &RunConfig, a: &SynthArgs) -> Result<(), CliError> {
    let mut run = Run::start("synth-gen", cfg)?;
    let spec = SynthSpec {
        vertical_count: a.verticals,
        websites_per_vertical: a.websites,
        pages_per_website: a.pages,
        verbatim_labels: a.verbatim_labels,
        noise: match a.noise {
            Noise::Zero => NoiseSpec::zero(),
            Noise::Moderate => NoiseSpec::moderate(),
        },
        ..SynthSpec::default()
    };
    let ds = generate_synthetic(&spec, cfg.seed)?;
    write_dataset(&run.dir, &ds)?;
    run.write("synth-spec.json", serde_json::to_string_pretty(&spec).unwrap() + "\n")?;
    println!("{} pages in {} verticals", ds.page_count(), ds.verticals.len());
    run.finish()
}

pub fn pretrain_graph(cfg: &RunConfig) -> Result<(), CliError> {
    let mut run = Run::start("pretrain-graph", cfg)?;
    let ds = load(cfg, &mut run)?;
    let corpus = prepare(cfg, &ds, &mut run)?;
    let (train, _) = split_pages(cfg, &ds, &corpus)?;
    let pcfg = cfg.pipeline();
    let (extractor, log) = pretrain(&corpus, &train, &pcfg.graph)?;
    run.write(GRAPH_FILE, extractor.to_bytes())?;
    run.write(GRAPH_LOG_FILE, log.to_jsonl())?;
    if let Some(last) = log.epochs.last() {
        println!(
            "{} training pages, {} of {} positives, final loss {:.4}",
            train.len(),
            log.positives_used,
            log.positives_available,
            last.loss
        );
    }
    run.finish()
}

pub fn train_head(cfg: &RunConfig, a: &TrainHeadArgs) -> Result<(), CliError> {
    let mut run = Run::start("train-head", cfg)?;
    let ds = load(cfg, &mut run)?;
    let corpus = prepare(cfg, &ds, &mut run)?;
    let (train, _) = split_pages(cfg, &ds, &corpus)?;
    let extractor = if cfg.use_graph {
        let path = a.graph.clone().unwrap_or_else(|| run.dir.join(GRAPH_FILE));
        let bytes = fs::read(&path).map_err(|e| {
            CliError::Usage(format!(
                "no frozen graph model at {} ({e}); run pretrain-graph first or set use_graph = false",
                path.display()
            ))
        })?;
        run.input(&path)?;
        if path != run.dir.join(GRAPH_FILE) {
            run.write(GRAPH_FILE, &bytes)?;
        }
        Some(FrozenExtractor::from_bytes(&bytes)?)
    } else {
        None
    };
    let s = scorer(cfg, fit_lexical(&corpus, &train), &mut run);
    let models = fit_head(&corpus, &train, extractor, &cfg.pipeline().head, Some(s.as_ref()))?;
    let info = ModelsInfo { scorer: s.identity(), semantic_len: s.feature_len(), use_graph: cfg.use_graph };
    run.manifest.tau = Some(models.head.tau);
    run.write(HEAD_FILE, models.head.to_json())?;
    run.write(HEAD_REPORT_FILE, serde_json::to_string_pretty(&models.head_report).unwrap() + "\n")?;
    run.write(LEXICAL_FILE, serde_json::to_string_pretty(&models.lexical).unwrap() + "\n")?;
    run.write(MODELS_FILE, serde_json::to_string_pretty(&info).unwrap() + "\n")?;
    for w in &models.head_report.warnings {
        run.note(w.clone());
    }
    let t = &models.head_report.train;
    println!("head trained on {} pages: train f1 {:.3}, tau {}", train.len(), t.f1, models.head.tau);
    run.finish()
}

/// Files named on the command line, with directories expanded to their
/// `.htm`/`.html` files in name order.
fn page_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(CliError::io(p))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| matches!(f.extension().and_then(|e| e.to_str()), Some("htm" | "html")))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

pub fn extract(cfg: &RunConfig, a: &ExtractArgs) -> Result<(), CliError> {
    let mut run = Run::start("extract", cfg)?;
    let dir = a.models.clone().unwrap_or_else(|| cfg.out.clone());
    let models = load_models(&dir, &mut run)?;
    let files = page_files(&a.pages)?;
    let mut docs: Vec<PageDoc> = Vec::new();
    for f in &files {
        let html = fs::read(f).map_err(CliError::io(f))?;
        run.input(f)?;
        let id = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        match parse_html(&RawPage::new(id, "input", "input", html)) {
            Ok(doc) => docs.push(assign_layout(doc, &LayoutSource::Heuristic)?),
            Err(e) => run.note(format!("skipped {}: {e}", f.display())),
        }
    }
    if docs.is_empty() {
        return Err(CliError::Usage("no parseable pages".into()));
    }
    if docs.len() < 2 {
        run.note("one page only: text frequencies cannot separate labels from values".into());
    }
    let s = scorer(cfg, models.lexical.clone(), &mut run);
    check_scorer(&models.info, s.as_ref())?;
    let freq = compute_text_freq(&docs)?;
    let q = RelationQuery::new(a.keyword.clone(), a.description.clone());
    let mut preds = BTreeMap::new();
    for doc in &docs {
        let mut g: PageGraph = build_graph(doc, &freq)?;
        g.set_virtual_edges(generate_virtual_edges(&g, doc, &freq, &cfg.candidates));
        let tuples = extract_page(doc, &g, &q, &models.head, s.as_ref(), models.extractor.as_ref())?;
        preds.insert(UnitKey::new(doc.page.qualified(), a.keyword.clone()), tuples);
    }
    let tsv = to_tsv(&preds);
    print!("{tsv}");
    run.write(PREDICTIONS_FILE, &tsv)?;
    run.finish()
}

pub fn evaluate(cfg: &RunConfig, a: &EvaluateArgs) -> Result<(), CliError> {
    let mut run = Run::start("evaluate", cfg)?;
    let ds = load(cfg, &mut run)?;
    let corpus = prepare(cfg, &ds, &mut run)?;
    let pages = match a.pages {
        PageSet::Test => split_pages(cfg, &ds, &corpus)?.1,
        PageSet::All => (0..corpus.pages.len()).collect(),
    };
    let truth = truth_for(&corpus, &pages);
    let label = match a.pages {
        PageSet::Test => cfg.split_spec().label(),
        PageSet::All => "all pages".to_string(),
    };
    let preds = match &a.predictions {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(CliError::io(path))?;
            run.input(path)?;
            let pages: std::collections::BTreeSet<&str> = truth.keys().map(|k| k.page.as_str()).collect();
            let all = parse_tsv(path, &text)?;
            let dropped = all.keys().filter(|k| !pages.contains(k.page.as_str())).count();
            if dropped > 0 {
                run.note(format!("{dropped} predicted units are outside the scored pages"));
            }
            all.into_iter().filter(|(k, _)| pages.contains(k.page.as_str())).collect()
        }
        None => {
            let dir = a.models.clone().unwrap_or_else(|| cfg.out.clone());
            let m = load_models(&dir, &mut run)?;
            let s = scorer(cfg, m.lexical.clone(), &mut run);
            check_scorer(&m.info, s.as_ref())?;
            let models = TrainedModels {
                extractor: m.extractor,
                graph_log: None,
                head: m.head,
                head_report: m.head_report,
                lexical: m.lexical,
            };
            let preds = predict(&corpus, &pages, &models, Some(s.as_ref()))?;
            run.write(PREDICTIONS_FILE, to_tsv(&preds))?;
            preds
        }
    };
    let report = EvalReport::from_units(label.clone(), &evaluate_by_unit(&preds, &truth, &MatchRule));
    let base_preds = run_baseline(&corpus, &pages, &cfg.candidates);
    let baseline = EvalReport::from_units(format!("{label} baseline"), &evaluate_by_unit(&base_preds, &truth, &MatchRule));
    run.write("metrics.json", report.to_json())?;
    run.write("baseline.json", baseline.to_json())?;
    print!("{}", report.to_table());
    println!("baseline average f1 {:.3}", baseline.average_f1);
    run.finish()
}

pub fn ablate(cfg: &RunConfig) -> Result<(), CliError> {
    let mut run = Run::start("ablate", cfg)?;
    let ds = load(cfg, &mut run)?;
    let corpus = prepare(cfg, &ds, &mut run)?;
    let report = run_ablation(&corpus, &ds, &AblationSpec { split: cfg.split_spec() }, &cfg.pipeline())?;
    run.write("ablation.json", report.to_json())?;
    print!("{}", report.to_table());
    run.finish()
}

pub fn report(cfg: &RunConfig, a: &ReportArgs) -> Result<(), CliError> {
    let mut run = Run::start("report", cfg)?;
    let mut text = String::new();
    for path in &a.inputs {
        let v: serde_json::Value = read_json(path, &mut run)?;
        let bad = |e: serde_json::Error| CliError::BadInput { path: path.clone(), line: 0, message: e.to_string() };
        if v.get("arms").is_some() {
            text.push_str(&serde_json::from_value::<AblationReport>(v).map_err(bad)?.to_table());
        } else {
            text.push_str(&serde_json::from_value::<EvalReport>(v).map_err(bad)?.to_table());
        }
        text.push('\n');
    }
    print!("{text}");
    run.write("report.txt", &text)?;
    run.finish()
}
