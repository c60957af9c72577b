//! Corpus ingestion: raw pages, DOM trees, layout boxes and per-website
//! text statistics.

mod dataset;
mod html;
mod layout;
mod store;
mod textfreq;

pub use dataset::{
    load_dataset, read_keywords, write_dataset, Annotation, Dataset, DatasetError, Diagnostic, KeywordSpec,
    Vertical, Website,
};
pub use html::parse_html;
pub use layout::{
    assign_layout, parse_sidecar, LayoutError, LayoutSource, SidecarRow, LINE_HEIGHT, CHAR_WIDTH,
    INDENT,
};
pub use store::{read_corpus_dir, write_corpus_dir, StoredWebsite};
pub use textfreq::{compute_text_freq, TextFreqTable};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("page {page_id}: no HTML element could be recovered")]
    MalformedHtml { page_id: String },
}

/// One web page as fetched: identifiers plus the raw document bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPage {
    pub page_id: String,
    pub website_id: String,
    pub vertical_id: String,
    pub html: Vec<u8>,
}

impl RawPage {
    pub fn new(
        page_id: impl Into<String>,
        website_id: impl Into<String>,
        vertical_id: impl Into<String>,
        html: impl Into<Vec<u8>>,
    ) -> Self {
        Self {
            page_id: page_id.into(),
            website_id: website_id.into(),
            vertical_id: vertical_id.into(),
            html: html.into(),
        }
    }

    pub fn page_ref(&self) -> PageRef {
        PageRef {
            page_id: self.page_id.clone(),
            website_id: self.website_id.clone(),
            vertical_id: self.vertical_id.clone(),
        }
    }
}

/// Identifiers of the page a [`PageDoc`] was parsed from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PageRef {
    pub page_id: String,
    pub website_id: String,
    pub vertical_id: String,
}

impl PageRef {
    /// `vertical/website/page`, unique across a dataset.
    pub fn qualified(&self) -> String {
        format!("{}/{}/{}", self.vertical_id, self.website_id, self.page_id)
    }
}

/// Axis-aligned layout box in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl BBox {
    pub const fn new(x: f64, y: f64, width: f64, height: f64) -> Self {
        Self { x, y, width, height }
    }

    pub fn center_x(&self) -> f64 {
        self.x + self.width / 2.0
    }

    pub fn center_y(&self) -> f64 {
        self.y + self.height / 2.0
    }

    pub fn right(&self) -> f64 {
        self.x + self.width
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.height
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0.0 && self.height == 0.0
    }

    pub fn union(&self, other: &BBox) -> BBox {
        let x = self.x.min(other.x);
        let y = self.y.min(other.y);
        BBox {
            x,
            y,
            width: self.right().max(other.right()) - x,
            height: self.bottom().max(other.bottom()) - y,
        }
    }
}

/// One element of the parsed DOM tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomNode {
    /// Dense index in document (pre-)order; the root is 0.
    pub node_id: usize,
    /// Lowercased element name.
    pub tag: String,
    /// Position among the parent's element children.
    pub sibling_index: usize,
    /// The node's own direct text, whitespace-collapsed. Descendant text is
    /// not included.
    pub text: String,
    pub bbox: Option<BBox>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// A parsed page: DOM nodes in document order plus the page entity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageDoc {
    pub page: PageRef,
    /// Text of the first `<title>`, or empty.
    pub entity: String,
    pub nodes: Vec<DomNode>,
    pub root: usize,
}

impl PageDoc {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: usize) -> &DomNode {
        &self.nodes[id]
    }

    pub fn text(&self, id: usize) -> &str {
        &self.nodes[id].text
    }

    /// Number of ancestors of `id`.
    pub fn depth(&self, id: usize) -> usize {
        let mut depth = 0;
        let mut cur = self.nodes[id].parent;
        while let Some(p) = cur {
            depth += 1;
            cur = self.nodes[p].parent;
        }
        depth
    }

    pub fn has_layout(&self) -> bool {
        self.nodes.iter().all(|n| n.bbox.is_some())
    }
}
