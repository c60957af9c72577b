use serde::{Deserialize, Serialize};

use super::{hop_distance, GraphError, NodeFeatures, PageGraph, NODE_FEATURE_LEN};
use crate::corpus::PageDoc;

/// Pixel deltas are divided by this in the flattened form.
pub const PIXEL_SCALE: f64 = 100.0;
/// `k`, `v`, hop distance, dx, dy, dw, dh.
pub const EDGE_FEATURE_LEN: usize = 2 * NODE_FEATURE_LEN + 5;

/// Geometric and structural description of a `(k, v)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeFeatures {
    pub k_features: NodeFeatures,
    pub v_features: NodeFeatures,
    pub hop_distance: usize,
    /// Center offsets, `v` minus `k`.
    pub dx: f64,
    pub dy: f64,
    /// Box size differences, `v` minus `k`.
    pub dw: f64,
    pub dh: f64,
}

impl EdgeFeatures {
    pub fn write_flat(&self, out: &mut Vec<f64>) {
        self.k_features.write_flat(out);
        self.v_features.write_flat(out);
        out.push(self.hop_distance as f64);
        out.push(self.dx / PIXEL_SCALE);
        out.push(self.dy / PIXEL_SCALE);
        out.push(self.dw / PIXEL_SCALE);
        out.push(self.dh / PIXEL_SCALE);
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(EDGE_FEATURE_LEN);
        self.write_flat(&mut v);
        v
    }
}

/// Features of the edge `(k, v)`, which must be a structural edge or a
/// virtual edge in either orientation.
pub fn compute_edge_features(
    graph: &PageGraph,
    doc: &PageDoc,
    (k, v): (usize, usize),
) -> Result<EdgeFeatures, GraphError> {
    let n = graph.node_count();
    if k >= n || v >= n {
        return Err(GraphError::UnknownEdge(k, v));
    }
    if !(graph.is_structural(k, v) || graph.is_virtual(k, v) || graph.is_virtual(v, k)) {
        return Err(GraphError::UnknownEdge(k, v));
    }
    let kb = doc.nodes[k].bbox.ok_or_else(|| GraphError::MissingLayout {
        page_id: doc.page.page_id.clone(),
        node_id: k,
    })?;
    let vb = doc.nodes[v].bbox.ok_or_else(|| GraphError::MissingLayout {
        page_id: doc.page.page_id.clone(),
        node_id: v,
    })?;
    let hops = hop_distance(graph, k, v).ok_or(GraphError::UnknownEdge(k, v))?;
    Ok(EdgeFeatures {
        k_features: graph.node_features()[k],
        v_features: graph.node_features()[v],
        hop_distance: hops,
        dx: vb.center_x() - kb.center_x(),
        dy: vb.center_y() - kb.center_y(),
        dw: vb.width - kb.width,
        dh: vb.height - kb.height,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{BBox, DomNode, PageRef};

    fn two_node(kb: BBox, vb: BBox) -> (PageGraph, PageDoc) {
        let node = |id: usize, bbox: BBox, parent: Option<usize>, children: Vec<usize>| DomNode {
            node_id: id,
            tag: "td".into(),
            sibling_index: 0,
            text: format!("t{id}"),
            bbox: Some(bbox),
            parent,
            children,
        };
        let doc = PageDoc {
            page: PageRef { page_id: "p".into(), website_id: "w".into(), vertical_id: "v".into() },
            entity: String::new(),
            nodes: vec![node(0, kb, None, vec![1]), node(1, vb, Some(0), vec![])],
            root: 0,
        };
        let f = NodeFeatures { tag_slot: 23, sibling_index: 0, text_freq: 0.0 };
        (PageGraph::from_parts("p", vec![f, f], [(0, 1)]), doc)
    }

    #[test]
    fn identical_boxes_zero_deltas() {
        let b = BBox::new(5.0, 6.0, 7.0, 8.0);
        let (g, d) = two_node(b, b);
        let e = compute_edge_features(&g, &d, (0, 1)).unwrap();
        assert_eq!((e.dx, e.dy, e.dw, e.dh), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(e.hop_distance, 1);
    }

    #[test]
    fn center_offsets() {
        let kb = BBox::new(0.0, 0.0, 70.0, 16.0);
        let vb = BBox::new(100.0, 0.0, 50.0, 16.0);
        let (g, d) = two_node(kb, vb);
        let e = compute_edge_features(&g, &d, (0, 1)).unwrap();
        // Independent recomputation: centers at 35 and 125.
        let expected_dx = (vb.x + vb.width / 2.0) - (kb.x + kb.width / 2.0);
        assert_eq!(expected_dx, 90.0);
        assert_eq!(e.dx, 90.0);
        assert_eq!(e.dw, -20.0);
        assert_eq!(e.dh, 0.0);
        assert_eq!(e.dy, 0.0);
        let r = compute_edge_features(&g, &d, (1, 0)).unwrap();
        assert_eq!((r.dx, r.dy, r.dw, r.dh), (-e.dx, -e.dy, -e.dw, -e.dh));
        assert_eq!(e.to_flat().len(), EDGE_FEATURE_LEN);
    }

    #[test]
    fn unknown_edge() {
        let b = BBox::new(0.0, 0.0, 1.0, 1.0);
        let (g, d) = two_node(b, b);
        assert_eq!(
            compute_edge_features(&g, &d, (0, 0)),
            Err(GraphError::UnknownEdge(0, 0))
        );
        assert_eq!(
            compute_edge_features(&g, &d, (0, 7)),
            Err(GraphError::UnknownEdge(0, 7))
        );
    }
}
