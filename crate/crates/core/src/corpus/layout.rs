//! Layout boxes for DOM nodes.
//!
//! Boxes come either from a renderer sidecar file or from a deterministic
//! pseudo-layout: every text-bearing node occupies one line
//! ([`LINE_HEIGHT`] px) in document order, indented by [`INDENT`] px per tree
//! level, [`CHAR_WIDTH`] px per character. Nodes with children take the union
//! of their own line and their non-empty descendants; nodes with no visible
//! content get a zero-size box at the current cursor, indented to the parent.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BBox, PageDoc};
use crate::text::char_len;

pub const LINE_HEIGHT: f64 = 16.0;
pub const INDENT: f64 = 24.0;
pub const CHAR_WIDTH: f64 = 7.0;

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("page {page_id}: sidecar references node {node_id}, page has {node_count} nodes")]
    SidecarMismatch {
        page_id: String,
        node_id: usize,
        node_count: usize,
    },
    #[error("sidecar line {line}: {message}")]
    BadSidecarRow { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidecarRow {
    pub node_id: usize,
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum LayoutSource {
    #[default]
    Heuristic,
    /// Boxes produced by an external renderer. Nodes missing from the sidecar
    /// keep their pseudo-layout box.
    Sidecar(Vec<SidecarRow>),
}

/// Parses a `node_id  x  y  width  height` tab-separated sidecar. Blank lines
/// and `#` comments are skipped.
pub fn parse_sidecar(text: &str) -> Result<Vec<SidecarRow>, LayoutError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(LayoutError::BadSidecarRow {
                line: line_no,
                message: format!("expected 5 columns, found {}", cols.len()),
            });
        }
        let bad = |what: &str| LayoutError::BadSidecarRow {
            line: line_no,
            message: format!("unparsable {what}"),
        };
        let node_id = cols[0].trim().parse().map_err(|_| bad("node_id"))?;
        let mut vals = [0.0f64; 4];
        for (slot, col) in vals.iter_mut().zip(&cols[1..]) {
            *slot = col.trim().parse().map_err(|_| bad("coordinate"))?;
        }
        if vals[2] < 0.0 || vals[3] < 0.0 || vals.iter().any(|v| !v.is_finite()) {
            return Err(LayoutError::BadSidecarRow {
                line: line_no,
                message: "negative or non-finite extent".into(),
            });
        }
        rows.push(SidecarRow {
            node_id,
            bbox: BBox::new(vals[0], vals[1], vals[2], vals[3]),
        });
    }
    Ok(rows)
}

/// Gives every node of `doc` a layout box.
pub fn assign_layout(mut doc: PageDoc, source: &LayoutSource) -> Result<PageDoc, LayoutError> {
    let boxes = heuristic_boxes(&doc);
    for (node, b) in doc.nodes.iter_mut().zip(boxes) {
        node.bbox = Some(b);
    }
    if let LayoutSource::Sidecar(rows) = source {
        let n = doc.nodes.len();
        let mut by_id = BTreeMap::new();
        for row in rows {
            if row.node_id >= n {
                return Err(LayoutError::SidecarMismatch {
                    page_id: doc.page.page_id.clone(),
                    node_id: row.node_id,
                    node_count: n,
                });
            }
            by_id.insert(row.node_id, row.bbox);
        }
        for (id, b) in by_id {
            doc.nodes[id].bbox = Some(b);
        }
    }
    Ok(doc)
}

fn heuristic_boxes(doc: &PageDoc) -> Vec<BBox> {
    let n = doc.nodes.len();
    let mut boxes = vec![BBox::default(); n];
    let mut line = 0usize;

    enum Step {
        Enter(usize, usize),
        Exit(usize, usize),
    }
    let mut own: Vec<Option<BBox>> = vec![None; n];
    let mut stack = vec![Step::Enter(doc.root, 0)];
    while let Some(step) = stack.pop() {
        match step {
            Step::Enter(id, depth) => {
                let node = &doc.nodes[id];
                if !node.text.is_empty() {
                    own[id] = Some(BBox::new(
                        INDENT * depth as f64,
                        LINE_HEIGHT * line as f64,
                        CHAR_WIDTH * char_len(&node.text) as f64,
                        LINE_HEIGHT,
                    ));
                    line += 1;
                }
                stack.push(Step::Exit(id, depth));
                for &c in node.children.iter().rev() {
                    stack.push(Step::Enter(c, depth + 1));
                }
            }
            Step::Exit(id, depth) => {
                let node = &doc.nodes[id];
                let mut acc = own[id];
                for &c in &node.children {
                    let cb = boxes[c];
                    if cb.is_empty() {
                        continue;
                    }
                    acc = Some(match acc {
                        Some(a) => a.union(&cb),
                        None => cb,
                    });
                }
                boxes[id] = acc.unwrap_or_else(|| {
                    // Nothing visible: zero box at the parent's indent on the current line.
                    let x = INDENT * depth.saturating_sub(1) as f64;
                    BBox::new(x, LINE_HEIGHT * line as f64, 0.0, 0.0)
                });
            }
        }
    }
    boxes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_html, RawPage};

    fn doc(html: &str) -> PageDoc {
        parse_html(&RawPage::new("p", "w", "v", html)).unwrap()
    }

    fn find<'a>(d: &'a PageDoc, text: &str) -> &'a crate::corpus::DomNode {
        d.nodes.iter().find(|n| n.text == text).unwrap()
    }

    #[test]
    fn leaf_formula() {
        // html > body > div > p : p is at depth 3 and is the first text line.
        let d = assign_layout(doc("<html><body><div><p>abc</p></div></body></html>"), &LayoutSource::Heuristic)
            .unwrap();
        let p = find(&d, "abc");
        assert_eq!(d.depth(p.node_id), 3);
        assert_eq!(p.bbox, Some(BBox::new(72.0, 0.0, 21.0, 16.0)));
    }

    #[test]
    fn parent_is_union() {
        let d = assign_layout(doc("<body><div><p>abc</p><p>hello</p></div></body>"), &LayoutSource::Heuristic)
            .unwrap();
        let a = find(&d, "abc").bbox.unwrap();
        let b = find(&d, "hello").bbox.unwrap();
        let div = d.nodes.iter().find(|n| n.tag == "div").unwrap();
        assert_eq!(div.bbox.unwrap(), a.union(&b));
        assert_eq!(div.bbox.unwrap(), BBox::new(72.0, 0.0, 35.0, 32.0));
    }

    #[test]
    fn textless_leaf_is_zero_sized() {
        let d = assign_layout(doc("<body><div><p>abc</p><br></div></body>"), &LayoutSource::Heuristic)
            .unwrap();
        let br = d.nodes.iter().find(|n| n.tag == "br").unwrap();
        let b = br.bbox.unwrap();
        assert!(b.is_empty());
        assert_eq!(b.x, 48.0);
        assert_eq!(b.y, 16.0);
    }

    #[test]
    fn sidecar_overrides() {
        let d0 = doc("<body><p>abc</p></body>");
        let p = find(&d0, "abc").node_id;
        let text = format!("# node\tx\ty\tw\th\n{p}\t10\t20.5\t30\t40\n");
        let rows = parse_sidecar(&text).unwrap();
        let d = assign_layout(d0, &LayoutSource::Sidecar(rows)).unwrap();
        assert_eq!(d.nodes[p].bbox, Some(BBox::new(10.0, 20.5, 30.0, 40.0)));
        assert!(d.has_layout());
    }

    #[test]
    fn sidecar_unknown_node() {
        let d0 = doc("<body><p>abc</p></body>");
        let rows = vec![SidecarRow { node_id: 999, bbox: BBox::default() }];
        assert!(matches!(
            assign_layout(d0, &LayoutSource::Sidecar(rows)),
            Err(LayoutError::SidecarMismatch { node_id: 999, .. })
        ));
    }

    #[test]
    fn sidecar_rejects_garbage() {
        assert!(parse_sidecar("1\t2\t3\n").is_err());
        assert!(parse_sidecar("1\t2\t3\t-4\t5\n").is_err());
        assert!(parse_sidecar("x\t2\t3\t4\t5\n").is_err());
    }
}
