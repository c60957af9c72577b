use relgraph_web::{candidates_json, extract_json, synth_site_json, Site};
use serde_json::Value;

fn site() -> String {
    synth_site_json(4, 8).unwrap()
}

#[test]
fn site_has_pages_and_keywords() {
    let s: Site = serde_json::from_str(&site()).unwrap();
    assert_eq!(s.pages.len(), 8);
    assert!(!s.keywords.is_empty());
    assert!(s.pages.iter().all(|p| p.contains("<html")));
}

#[test]
fn candidates_are_listed_for_a_page() {
    let c: Value = serde_json::from_str(&candidates_json(&site(), 0).unwrap()).unwrap();
    let pairs = c["pairs"].as_array().unwrap();
    assert!(!pairs.is_empty());
    assert!(pairs.iter().all(|p| p["hops"].as_u64().unwrap() <= 5));
}

#[test]
fn extraction_ranks_the_matching_label_first() {
    let s: Site = serde_json::from_str(&site()).unwrap();
    let kw = &s.keywords[0];
    let out: Value =
        serde_json::from_str(&extract_json(&site(), 1, &kw.keyword, &kw.description, 5).unwrap()).unwrap();
    let ranked = out["ranked"].as_array().unwrap();
    assert!(ranked.len() <= 5 && !ranked.is_empty());
    let scores: Vec<f64> = ranked.iter().map(|r| r["score"].as_f64().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn bad_input_is_an_error_not_a_panic() {
    assert!(candidates_json("{", 0).is_err());
    assert!(candidates_json(&site(), 99).is_err());
}
