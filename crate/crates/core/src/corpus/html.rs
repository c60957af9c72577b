use scraper::{node::Node, Html};

use super::{DomNode, PageDoc, ParseError, RawPage};
use crate::text::collapse_whitespace;

/// Elements whose text content is never visible.
const HIDDEN_TEXT_TAGS: &[&str] = &["script", "style", "noscript", "template"];

/// Parses a page into a [`PageDoc`].
///
/// Parsing is lenient (HTML5 tree construction), so missing end tags and
/// stray markup are recovered rather than rejected. Only element nodes become
/// [`DomNode`]s; each node's `text` is its own direct text children joined and
/// whitespace-collapsed. Comments and script/style content never contribute
/// text.
pub fn parse_html(raw: &RawPage) -> Result<PageDoc, ParseError> {
    let source = String::from_utf8_lossy(&raw.html);
    if source.trim().is_empty() {
        return Err(ParseError::MalformedHtml {
            page_id: raw.page_id.clone(),
        });
    }
    let html = Html::parse_document(&source);

    let mut nodes: Vec<DomNode> = Vec::new();
    // (node, parent id, sibling index)
    let mut stack = vec![(*html.root_element(), None::<usize>, 0usize)];
    while let Some((node, parent, sibling_index)) = stack.pop() {
        let Node::Element(el) = node.value() else {
            continue;
        };
        let tag = el.name().to_ascii_lowercase();
        let id = nodes.len();

        let text = if HIDDEN_TEXT_TAGS.contains(&tag.as_str()) {
            String::new()
        } else {
            let mut buf = String::new();
            for child in node.children() {
                if let Node::Text(t) = child.value() {
                    buf.push(' ');
                    buf.push_str(t);
                }
            }
            collapse_whitespace(&buf)
        };

        if let Some(p) = parent {
            nodes[p].children.push(id);
        }
        nodes.push(DomNode {
            node_id: id,
            tag,
            sibling_index,
            text,
            bbox: None,
            parent,
            children: Vec::new(),
        });

        let element_children: Vec<_> = node
            .children()
            .filter(|c| matches!(c.value(), Node::Element(_)))
            .collect();
        for (idx, child) in element_children.into_iter().enumerate().rev() {
            stack.push((child, Some(id), idx));
        }
    }

    if nodes.is_empty() {
        return Err(ParseError::MalformedHtml {
            page_id: raw.page_id.clone(),
        });
    }

    let entity = nodes
        .iter()
        .find(|n| n.tag == "title")
        .map(|n| n.text.clone())
        .unwrap_or_default();

    Ok(PageDoc {
        page: raw.page_ref(),
        entity,
        nodes,
        root: 0,
    })
}
