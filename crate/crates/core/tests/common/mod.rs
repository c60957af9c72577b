//! Generators and naive oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relgraph_core::corpus::{assign_layout, compute_text_freq, parse_html, LayoutSource};
use relgraph_core::gnn::{loss_and_grad, GraphNetParams, LabeledEdge, TrainingPage};
use relgraph_core::graph::{build_graph, compute_edge_features, generate_virtual_edges};
use relgraph_core::scorer::{head_loss_and_grad, FusionHeadParams, HeadRow, HeadSet};
use relgraph_core::{CandidateConfig, PageDoc, PageGraph, RawPage, TextFreqTable};

const TAGS: &[&str] = &["div", "span", "p", "li", "td", "b", "section", "em", "h3", "article"];
/// Small vocabulary so texts repeat across pages and both frequency sides of
/// the candidate thresholds are exercised.
const TEXTS: &[&str] = &[
    "Price", "Weight", "Color", "x", "Ships today", "In stock", "Model", "SKU-9", "12.99", "blue", "",
];

/// A random page with `n` elements below `<body>` (plus html/head/body).
pub fn random_page_html(rng: &mut ChaCha8Rng, n: usize) -> String {
    // Random parent pointers give a random tree; children rendered in order.
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for i in 1..=n {
        let parent = rng.gen_range(0..i);
        children[parent].push(i);
    }
    let tags: Vec<&str> = (0..=n).map(|_| *TAGS.choose(rng).unwrap()).collect();
    let texts: Vec<String> = (0..=n)
        .map(|_| {
            if rng.gen_bool(0.15) {
                format!("v{}", rng.gen_range(0..10_000))
            } else {
                TEXTS.choose(rng).unwrap().to_string()
            }
        })
        .collect();
    fn render(i: usize, children: &[Vec<usize>], tags: &[&str], texts: &[String], out: &mut String) {
        let tag = if i == 0 { "div" } else { tags[i] };
        out.push_str(&format!("<{tag}>{}", texts[i]));
        for &c in &children[i] {
            render(c, children, tags, texts, out);
        }
        out.push_str(&format!("</{tag}>"));
    }
    let mut body = String::new();
    render(0, &children, &tags, &texts, &mut body);
    format!("<html><head><title>t</title></head><body>{body}</body></html>")
}

/// `pages` random pages of one website, parsed and laid out.
pub fn random_site(seed: u64, pages: usize, min_nodes: usize, max_nodes: usize) -> Vec<PageDoc> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..pages)
        .map(|p| {
            let n = rng.gen_range(min_nodes..=max_nodes);
            let html = random_page_html(&mut rng, n);
            let raw = RawPage::new(format!("p{p}"), format!("site{seed}"), "v", html);
            assign_layout(parse_html(&raw).unwrap(), &LayoutSource::Heuristic).unwrap()
        })
        .collect()
}

/// Counts texts with a plain hash map, independent of the library table.
pub fn naive_text_freq(docs: &[PageDoc]) -> BTreeMap<String, f64> {
    let mut counts: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    for d in docs {
        for n in &d.nodes {
            if !n.text.is_empty() {
                *counts.entry(n.text.as_str()).or_insert(0) += 1;
            }
        }
    }
    counts.into_iter().map(|(t, c)| (t.to_string(), c as f64 / docs.len() as f64)).collect()
}

/// Tree distance with sibling chords, computed from the parent/children
/// fields of the document rather than from the graph's adjacency.
pub fn doc_hops(doc: &PageDoc, src: usize) -> Vec<Option<usize>> {
    let n = doc.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for node in &doc.nodes {
        if let Some(p) = node.parent {
            adj[p].push(node.node_id);
            adj[node.node_id].push(p);
        }
        for w in node.children.windows(2) {
            adj[w[0]].push(w[1]);
            adj[w[1]].push(w[0]);
        }
    }
    let mut dist = vec![None; n];
    dist[src] = Some(0);
    let mut q = VecDeque::from([src]);
    while let Some(u) = q.pop_front() {
        for &w in &adj[u] {
            if dist[w].is_none() {
                dist[w] = Some(dist[u].unwrap() + 1);
                q.push_back(w);
            }
        }
    }
    dist
}

/// All ordered pairs passing the four candidate conditions, by brute force.
pub fn brute_force_candidates(doc: &PageDoc, freq: &TextFreqTable, cfg: &CandidateConfig) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    let len_ok = |t: &str| {
        let l = t.chars().count();
        !t.is_empty() && cfg.l_min <= l && l <= cfg.l_max
    };
    for k in 0..doc.len() {
        let hops = doc_hops(doc, k);
        for v in 0..doc.len() {
            let (kt, vt) = (doc.text(k), doc.text(v));
            let within = matches!(hops[v], Some(h) if h <= cfg.h);
            if k != v && within && len_ok(kt) && len_ok(vt) && freq.freq(kt) > cfg.m && freq.freq(vt) < cfg.n {
                out.insert((k, v));
            }
        }
    }
    out
}

pub struct SiteGraphs {
    pub docs: Vec<PageDoc>,
    pub freq: TextFreqTable,
    pub graphs: Vec<PageGraph>,
}

pub fn site_graphs(seed: u64, pages: usize, min_nodes: usize, max_nodes: usize, cfg: &CandidateConfig) -> SiteGraphs {
    let docs = random_site(seed, pages, min_nodes, max_nodes);
    let freq = compute_text_freq(&docs).unwrap();
    let graphs = docs
        .iter()
        .map(|d| {
            let mut g = build_graph(d, &freq).unwrap();
            let ve = generate_virtual_edges(&g, d, &freq, cfg);
            g.set_virtual_edges(ve);
            g
        })
        .collect();
    SiteGraphs { docs, freq, graphs }
}

/// Random labeled training pages for gradient checks.
pub fn gradient_pages(seed: u64) -> Vec<TrainingPage> {
    let cfg = CandidateConfig { m: 0.0, n: 10.0, h: 3, ..CandidateConfig::default() };
    let site = site_graphs(seed, 2, 8, 14, &cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    site.docs
        .iter()
        .zip(site.graphs)
        .map(|(doc, graph)| {
            let edges = graph
                .virtual_edges()
                .iter()
                .take(12)
                .map(|&(k, v)| LabeledEdge {
                    k,
                    v,
                    features: compute_edge_features(&graph, doc, (k, v)).unwrap().to_flat(),
                    positive: rng.gen_bool(0.4),
                })
                .collect();
            TrainingPage { graph, edges }
        })
        .collect()
}

/// Worst per-coordinate relative error between the analytic graph-network
/// gradient and central differences, over `coords` sampled coordinates
/// (all of them when `coords` exceeds the parameter count).
pub fn gnn_gradient_error(seed: u64, eps: f64, coords: usize) -> f64 {
    let pages = gradient_pages(seed);
    let examples: Vec<(usize, usize)> =
        pages.iter().enumerate().flat_map(|(p, pg)| (0..pg.edges.len()).map(move |e| (p, e))).collect();
    assert!(!examples.is_empty(), "seed {seed} produced no edges");
    let params = GraphNetParams::init(relgraph_core::graph::NODE_FEATURE_LEN, 8, 2, 6, seed);
    let (_, grad, _) = loss_and_grad(&params, &pages, &examples).unwrap();
    let analytic = grad.to_flat();
    assert!(analytic.iter().any(|g| g.abs() > 1e-6), "seed {seed}: gradient vanished");
    let base = params.to_flat();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..base.len()).collect();
    idx.shuffle(&mut rng);
    idx.truncate(coords);
    let loss_at = |flat: &[f64]| loss_and_grad(&params.with_flat(flat), &pages, &examples).unwrap().0;
    let mut worst: f64 = 0.0;
    for i in idx {
        let mut plus = base.clone();
        plus[i] += eps;
        let mut minus = base.clone();
        minus[i] -= eps;
        let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * eps);
        worst = worst.max(rel_err(analytic[i], numeric));
    }
    worst
}

/// Same check for the fusion head over every weight and the bias.
pub fn head_gradient_error(seed: u64, eps: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (sem_len, graph_len) = (5, 9);
    let graph_rows: Vec<Vec<f64>> =
        (0..6).map(|_| (0..graph_len).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let rows = (0..40)
        .map(|_| HeadRow {
            semantic: (0..sem_len).map(|_| rng.gen_range(0.0..1.0)).collect(),
            graph_row: rng.gen_range(0..graph_rows.len()),
            label: rng.gen_bool(0.3),
        })
        .collect();
    let set = HeadSet { graph_rows, rows };
    let n = sem_len + graph_len;
    let mut params = FusionHeadParams::identity_scaled(n, 0.5);
    params.mean = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
    params.scale = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    params.weights = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    params.bias = rng.gen_range(-1.0..1.0);
    let (l2, pw) = (1e-3, 2.5);
    let (_, gw, gb) = head_loss_and_grad(&params, &set, l2, pw).unwrap();
    let loss = |p: &FusionHeadParams| head_loss_and_grad(p, &set, l2, pw).unwrap().0;
    let mut worst: f64 = 0.0;
    for i in 0..=n {
        let (mut plus, mut minus) = (params.clone(), params.clone());
        if i < n {
            plus.weights[i] += eps;
            minus.weights[i] -= eps;
        } else {
            plus.bias += eps;
            minus.bias -= eps;
        }
        let numeric = (loss(&plus) - loss(&minus)) / (2.0 * eps);
        let analytic = if i < n { gw[i] } else { gb };
        worst = worst.max(rel_err(analytic, numeric));
    }
    worst
}

/// `|a - b| / max(|a|, |b|, 1e-6)`; the floor keeps round-off on vanishing
/// components from dominating.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}
