use std::collections::{BTreeMap, BTreeSet};

use super::MatchRule;
use crate::corpus::PageDoc;
use crate::graph::{CandidateConfig, PageGraph};
use crate::scorer::{ExtractionTuple, RelationQuery};
use crate::text::content_words;

/// Keyword-matching baseline without any learning.
///
/// A relation node matches when its normalized text equals the normalized
/// keyword or shares a content word with it. Each matching node emits one
/// tuple: its virtual-edge partner with the fewest hops, then the smallest
/// `|dx| + |dy|` between box centers, then the first node after it in
/// document order. Scores are 1.
pub fn heuristic_baseline(
    doc: &PageDoc,
    graph: &PageGraph,
    q: &RelationQuery,
    cfg: &CandidateConfig,
) -> Vec<ExtractionTuple> {
    let rule = MatchRule;
    let kw_norm = rule.normalize(&q.keyword);
    let kw_words: BTreeSet<String> = content_words(&q.keyword).into_iter().collect();
    let matches = |text: &str| {
        rule.normalize(text) == kw_norm || content_words(text).iter().any(|w| kw_words.contains(w))
    };

    let mut by_k: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(k, v) in graph.virtual_edges() {
        by_k.entry(k).or_default().push(v);
    }
    let mut out = Vec::new();
    for (k, vs) in by_k {
        if !matches(doc.text(k)) {
            continue;
        }
        let hops = graph.distances_from(k, cfg.h);
        let kb = doc.node(k).bbox.unwrap_or_default();
        let best = vs.into_iter().min_by(|&a, &b| {
            let key = |v: usize| {
                let vb = doc.node(v).bbox.unwrap_or_default();
                let manhattan = (vb.center_x() - kb.center_x()).abs() + (vb.center_y() - kb.center_y()).abs();
                (hops[v].unwrap_or(usize::MAX), manhattan, v < k, v)
            };
            let (ha, ma, ba, ia) = key(a);
            let (hb, mb, bb, ib) = key(b);
            ha.cmp(&hb)
                .then(ma.total_cmp(&mb))
                .then(ba.cmp(&bb))
                .then(if ba { ib.cmp(&ia) } else { ia.cmp(&ib) })
        });
        if let Some(v) = best {
            out.push(ExtractionTuple {
                relation: doc.text(k).to_string(),
                value: doc.text(v).to_string(),
                k_node: k,
                v_node: v,
                score: 1.0,
            });
        }
    }
    out
}
