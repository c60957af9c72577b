//! Browser demo: generate a synthetic website, inspect the candidate
//! relation/value pairs of one of its pages, and rank them for a keyword.
//!
//! Every export takes and returns JSON strings. The plain `*_json` functions
//! hold the logic so they can be tested off the browser.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use relgraph_core::corpus::{assign_layout, compute_text_freq, parse_html, LayoutSource};
use relgraph_core::eval::{generate_synthetic, heuristic_baseline, SynthSpec};
use relgraph_core::graph::{build_graph, generate_virtual_edges};
use relgraph_core::scorer::LexicalScorer;
use relgraph_core::{CandidateConfig, PageDoc, PageGraph, RawPage, RelationQuery, TextFreqTable};

#[derive(Debug, Serialize, Deserialize)]
pub struct Site {
    pub keywords: Vec<Keyword>,
    pub pages: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Keyword {
    pub keyword: String,
    pub description: String,
}

#[derive(Debug, Serialize)]
struct NodeRow {
    id: usize,
    tag: String,
    text: String,
    freq: f64,
}

#[derive(Debug, Serialize)]
struct PairRow {
    k: usize,
    v: usize,
    relation: String,
    value: String,
    hops: usize,
}

#[derive(Debug, Serialize)]
struct Candidates {
    nodes: Vec<NodeRow>,
    pairs: Vec<PairRow>,
}

#[derive(Debug, Serialize)]
struct Ranked {
    relation: String,
    value: String,
    score: f64,
    hops: usize,
    features: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct Extraction {
    ranked: Vec<Ranked>,
    baseline: Vec<(String, String)>,
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("demo types serialize")
}

/// One synthetic website with a single vertical's keywords.
pub fn synth_site_json(seed: u64, pages: usize) -> Result<String, String> {
    let spec = SynthSpec { vertical_count: 1, websites_per_vertical: 1, pages_per_website: pages, ..SynthSpec::default() };
    let ds = generate_synthetic(&spec, seed).map_err(|e| e.to_string())?;
    let v = &ds.verticals[0];
    let site = Site {
        keywords: v
            .keywords
            .iter()
            .map(|k| Keyword { keyword: k.keyword.clone(), description: k.description.clone() })
            .collect(),
        pages: v.websites[0].pages.iter().map(|p| String::from_utf8_lossy(&p.html).into_owned()).collect(),
    };
    Ok(to_json(&site))
}

/// All pages parsed as one website, plus the graph of page `page`.
fn prepare(pages: &[String], page: usize, cfg: &CandidateConfig) -> Result<(PageDoc, PageGraph, TextFreqTable), String> {
    if page >= pages.len() {
        return Err(format!("page {page} out of range ({} pages)", pages.len()));
    }
    let docs = pages
        .iter()
        .enumerate()
        .map(|(i, html)| {
            let raw = RawPage::new(format!("p{i}"), "demo", "demo", html.as_bytes());
            let doc = parse_html(&raw).map_err(|e| e.to_string())?;
            assign_layout(doc, &LayoutSource::Heuristic).map_err(|e| e.to_string())
        })
        .collect::<Result<Vec<_>, String>>()?;
    let freq = compute_text_freq(&docs).map_err(|e| e.to_string())?;
    let doc = docs.into_iter().nth(page).expect("index checked");
    let mut graph = build_graph(&doc, &freq).map_err(|e| e.to_string())?;
    graph.set_virtual_edges(generate_virtual_edges(&graph, &doc, &freq, cfg));
    Ok((doc, graph, freq))
}

fn parse_site(site_json: &str) -> Result<Site, String> {
    serde_json::from_str(site_json).map_err(|e| format!("bad site JSON: {e}"))
}

/// Text-bearing nodes of page `page` and its candidate pairs.
pub fn candidates_json(site_json: &str, page: usize) -> Result<String, String> {
    let site = parse_site(site_json)?;
    let cfg = CandidateConfig::default();
    let (doc, graph, freq) = prepare(&site.pages, page, &cfg)?;
    let nodes = doc
        .nodes
        .iter()
        .filter(|n| !n.text.is_empty())
        .map(|n| NodeRow { id: n.node_id, tag: n.tag.clone(), text: n.text.clone(), freq: freq.freq(&n.text) })
        .collect();
    let pairs = graph
        .virtual_edges()
        .iter()
        .map(|&(k, v)| PairRow {
            k,
            v,
            relation: doc.text(k).to_string(),
            value: doc.text(v).to_string(),
            hops: graph.distances_from(k, cfg.h)[v].unwrap_or(usize::MAX),
        })
        .collect();
    Ok(to_json(&Candidates { nodes, pairs }))
}

/// Candidate pairs of page `page` ranked by lexical similarity to the query,
/// next to the keyword baseline's answer.
pub fn extract_json(site_json: &str, page: usize, keyword: &str, description: &str, top: usize) -> Result<String, String> {
    let site = parse_site(site_json)?;
    let cfg = CandidateConfig::default();
    let (doc, graph, _) = prepare(&site.pages, page, &cfg)?;
    let scorer = LexicalScorer::new();
    let mut ranked: Vec<Ranked> = graph
        .virtual_edges()
        .iter()
        .map(|&(k, v)| {
            let f = scorer.features(keyword, description, doc.text(k), doc.text(v));
            Ranked {
                relation: doc.text(k).into(),
                value: doc.text(v).into(),
                score: f.scalar_score,
                hops: graph.distances_from(k, cfg.h)[v].unwrap_or(usize::MAX),
                features: f.vector,
            }
        })
        .collect();
    // Lexical scores tie across every value of one label; nearer values first.
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.hops.cmp(&b.hops)));
    ranked.truncate(top);
    let q = RelationQuery::new(keyword, description);
    let baseline = heuristic_baseline(&doc, &graph, &q, &cfg).into_iter().map(|t| (t.relation, t.value)).collect();
    Ok(to_json(&Extraction { ranked, baseline }))
}

#[wasm_bindgen]
pub fn synth_site(seed: u32, pages: u32) -> Result<String, JsValue> {
    synth_site_json(seed as u64, pages as usize).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn candidates(site_json: &str, page: u32) -> Result<String, JsValue> {
    candidates_json(site_json, page as usize).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn extract(site_json: &str, page: u32, keyword: &str, description: &str) -> Result<String, JsValue> {
    extract_json(site_json, page as usize, keyword, description, 10).map_err(|e| JsValue::from_str(&e))
}
