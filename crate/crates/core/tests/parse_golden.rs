//! Parser output on a fixed page against a golden tree produced once by an
//! independent parser (`fixtures/parse_oracle.py`).

use relgraph_core::corpus::parse_html;
use relgraph_core::RawPage;
use serde::Deserialize;

#[derive(Deserialize)]
struct Golden {
    node_count: usize,
    nodes: Vec<GoldenNode>,
}

#[derive(Deserialize)]
struct GoldenNode {
    tag: String,
    parent: Option<usize>,
    children: Vec<usize>,
    text: String,
}

#[test]
fn twenty_node_page_matches_golden_tree() {
    let html = include_str!("fixtures/page20.htm");
    let golden: Golden = serde_json::from_str(include_str!("fixtures/page20.golden.json")).unwrap();
    let doc = parse_html(&RawPage::new("page20", "site", "vert", html)).unwrap();

    assert_eq!(doc.len(), golden.node_count);
    assert_eq!(golden.node_count, 20);
    for (i, (got, want)) in doc.nodes.iter().zip(&golden.nodes).enumerate() {
        assert_eq!(got.tag, want.tag, "tag of node {i}");
        assert_eq!(got.parent, want.parent, "parent of node {i}");
        assert_eq!(got.children, want.children, "children of node {i}");
        assert_eq!(got.text, want.text, "text of node {i}");
    }
    assert_eq!(doc.entity, "Widget 9000");
}

#[test]
fn reparse_is_identical() {
    let html = include_str!("fixtures/page20.htm");
    let a = parse_html(&RawPage::new("p", "s", "v", html)).unwrap();
    let b = parse_html(&RawPage::new("p", "s", "v", html)).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}
