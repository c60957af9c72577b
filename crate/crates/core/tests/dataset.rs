mod common;

use std::fs;
use std::path::Path;

use relgraph_core::corpus::{
    assign_layout, load_dataset, parse_html, write_dataset, Diagnostic, LayoutSource, SidecarRow,
};
use relgraph_core::eval::{generate_synthetic, SynthSpec};
use relgraph_core::{BBox, RawPage};

fn write(path: &Path, text: &str) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, text).unwrap();
}

/// 2 verticals x 2 websites x 5 pages, one annotation per page.
fn fixture(root: &Path) {
    for v in ["auto", "book"] {
        write(&root.join(v).join("keywords.tsv"), "price\tthe amount paid\tPrice|MSRP\n");
        for w in ["w0", "w1"] {
            let mut gt = String::from("page_id\trelation\tvalue\n");
            for p in 0..5 {
                let html = format!("<html><head><title>{v} {w} {p}</title></head><body><div><b>Price</b><i>${p}</i></div></body></html>");
                write(&root.join(v).join(w).join("pages").join(format!("p{p}.htm")), &html);
                gt.push_str(&format!("p{p}\tPrice\t${p}\n"));
            }
            write(&root.join(v).join(w).join("groundtruth.tsv"), &gt);
        }
    }
}

/// Counts `.htm` files with a plain recursive walk.
fn walk_pages(dir: &Path) -> usize {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| if p.is_dir() { walk_pages(&p) } else { (p.extension().is_some_and(|e| e == "htm")) as usize })
        .sum()
}

#[test]
fn loads_every_page() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let ds = load_dataset(dir.path()).unwrap();
    assert_eq!(walk_pages(dir.path()), 20);
    assert_eq!(ds.page_count(), 20);
    assert_eq!(ds.verticals.len(), 2);
    assert!(ds.diagnostics.is_empty(), "{:?}", ds.diagnostics);
    let kw = &ds.verticals[0].keywords[0];
    assert_eq!(kw.surface_forms, ["price", "Price", "MSRP"]);
    assert_eq!(ds.websites().map(|w| w.annotations.len()).sum::<usize>(), 20);
}

#[test]
fn missing_page_leaves_a_dangling_annotation() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    fs::remove_file(dir.path().join("book/w1/pages/p3.htm")).unwrap();
    let ds = load_dataset(dir.path()).unwrap();
    assert_eq!(ds.page_count(), 19);
    assert_eq!(ds.diagnostics.len(), 1);
    assert!(matches!(&ds.diagnostics[0], Diagnostic::DanglingAnnotation { page_id, .. } if page_id == "p3"));
}

#[test]
fn empty_root_is_an_empty_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let ds = load_dataset(dir.path()).unwrap();
    assert_eq!(ds.page_count(), 0);
    assert!(ds.verticals.is_empty());
}

#[test]
fn missing_root_is_an_error() {
    assert!(load_dataset(Path::new("/nonexistent/relgraph/data")).is_err());
}

#[test]
fn write_then_load_round_trips() {
    let ds = generate_synthetic(&SynthSpec::moderate(2, 2, 4), 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &ds).unwrap();
    let back = load_dataset(dir.path()).unwrap();
    assert_eq!(back, ds);
}

fn doc(html: &str) -> relgraph_core::PageDoc {
    parse_html(&RawPage::new("p", "w", "v", html)).unwrap()
}

#[test]
fn sidecar_boxes_are_used_verbatim() {
    let d = doc("<html><body><div><b>Price</b><i>$1</i></div></body></html>");
    let rows: Vec<SidecarRow> = (0..d.len())
        .map(|i| SidecarRow { node_id: i, bbox: BBox::new(0.1 * i as f64, 1.0 / 3.0, 12.5, 7.0 + i as f64) })
        .collect();
    let laid = assign_layout(d, &LayoutSource::Sidecar(rows.clone())).unwrap();
    for r in &rows {
        let b = laid.nodes[r.node_id].bbox.unwrap();
        assert_eq!(
            [b.x, b.y, b.width, b.height].map(f64::to_bits),
            [r.bbox.x, r.bbox.y, r.bbox.width, r.bbox.height].map(f64::to_bits)
        );
    }
}

#[test]
fn sidecar_row_past_the_last_node_is_rejected() {
    let d = doc("<html><body><p>x</p></body></html>");
    let n = d.len();
    let rows = vec![SidecarRow { node_id: n, bbox: BBox::new(0.0, 0.0, 1.0, 1.0) }];
    assert!(assign_layout(d, &LayoutSource::Sidecar(rows)).is_err());
}

#[test]
fn heuristic_layout_follows_document_order() {
    for (seed, d) in common::random_site(9, 10, 5, 80).into_iter().enumerate() {
        let texts: Vec<usize> = (0..d.len()).filter(|&i| !d.text(i).is_empty()).collect();
        // Text lines advance in pre-order, and deeper nodes sit further right.
        for w in texts.windows(2) {
            let (a, b) = (d.nodes[w[0]].bbox.unwrap(), d.nodes[w[1]].bbox.unwrap());
            assert!(a.y < b.y, "page {seed}");
        }
        for node in &d.nodes {
            let b = node.bbox.unwrap();
            if let Some(p) = node.parent {
                let pb = d.nodes[p].bbox.unwrap();
                assert!(pb.x <= b.x, "page {seed}");
                if !b.is_empty() {
                    assert!(pb.y <= b.y && b.bottom() <= pb.bottom() && b.right() <= pb.right(), "page {seed}");
                }
            }
        }
    }
}
