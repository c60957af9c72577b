use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DatasetError, PageDoc};

/// Per-website occurrence counts of exact node texts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextFreqTable {
    pub website_id: String,
    pub page_count: usize,
    pub counts: BTreeMap<String, u64>,
}

impl TextFreqTable {
    /// Average occurrences of `text` per page; 0 for unseen text.
    pub fn freq(&self, text: &str) -> f64 {
        match self.counts.get(text) {
            Some(&c) => c as f64 / self.page_count as f64,
            None => 0.0,
        }
    }
}

/// Counts every node's own normalized text over all pages of one website.
pub fn compute_text_freq(docs: &[PageDoc]) -> Result<TextFreqTable, DatasetError> {
    let first = docs.first().ok_or(DatasetError::NoPages)?;
    let website_id = &first.page.website_id;
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for doc in docs {
        if &doc.page.website_id != website_id {
            return Err(DatasetError::MixedWebsites {
                expected: website_id.clone(),
                found: doc.page.website_id.clone(),
            });
        }
        for node in &doc.nodes {
            if !node.text.is_empty() {
                *counts.entry(node.text.clone()).or_default() += 1;
            }
        }
    }
    Ok(TextFreqTable {
        website_id: website_id.clone(),
        page_count: docs.len(),
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_html, RawPage};

    fn site(pages: &[&str]) -> Vec<PageDoc> {
        pages
            .iter()
            .enumerate()
            .map(|(i, h)| parse_html(&RawPage::new(format!("p{i}"), "w", "v", *h)).unwrap())
            .collect()
    }

    #[test]
    fn label_on_every_page() {
        let docs = site(&[
            "<p>Price:</p><p>$1</p>",
            "<p>Price:</p><p>$2</p>",
            "<p>Price:</p><p>$3</p>",
        ]);
        let t = compute_text_freq(&docs).unwrap();
        assert_eq!(t.page_count, 3);
        assert_eq!(t.freq("Price:"), 1.0);
        assert_eq!(t.freq("$2"), 1.0 / 3.0);
        assert_eq!(t.freq("unseen"), 0.0);
    }

    #[test]
    fn repeated_on_one_page() {
        let docs = site(&["<p>SKU-9</p><i>SKU-9</i>", "<p>a</p>", "<p>b</p>", "<p>c</p>"]);
        assert_eq!(compute_text_freq(&docs).unwrap().freq("SKU-9"), 0.5);
    }

    #[test]
    fn mixed_websites_rejected() {
        let mut docs = site(&["<p>a</p>", "<p>b</p>"]);
        docs[1].page.website_id = "other".into();
        assert!(matches!(
            compute_text_freq(&docs),
            Err(DatasetError::MixedWebsites { .. })
        ));
        assert!(matches!(compute_text_freq(&[]), Err(DatasetError::NoPages)));
    }

    #[test]
    fn duplication_preserves_freq() {
        let docs = site(&["<p>x</p><p>y</p>", "<p>x</p><p>x</p>", "<p>z</p>"]);
        let mut doubled = docs.clone();
        doubled.extend(docs.iter().cloned());
        let a = compute_text_freq(&docs).unwrap();
        let b = compute_text_freq(&doubled).unwrap();
        for k in a.counts.keys() {
            assert_eq!(a.freq(k), b.freq(k));
        }
    }
}
