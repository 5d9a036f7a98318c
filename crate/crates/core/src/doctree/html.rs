use html5ever::tendril::TendrilSink;
use html5ever::{parse_document, ParseOpts};
use indexmap::IndexMap;
use markup5ever_rcdom::{Handle, NodeData, RcDom};

use super::{DocNode, Element, SENTENCE_BEGIN, SENTENCE_END};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("input is not valid UTF-8 (first invalid byte at offset {valid_up_to})")]
    Encoding { valid_up_to: usize },
}

const DROPPED: &[&str] = &["script", "style", "noscript", "template"];
const HEAD_METADATA: &[&str] = &["meta", "link", "base"];

/// Parses HTML into a normalized [`DocNode`] rooted at `html`.
///
/// Malformed markup never fails: the result is whatever tree the HTML5
/// tree builder recovers. Comments, processing instructions, scripts and
/// styles are dropped, whitespace runs collapse to a single space outside
/// `pre`, and whitespace-only text between block structure is removed.
pub fn parse_html(source: &[u8]) -> Result<DocNode, ParseError> {
    let source = source.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(source);
    let text = std::str::from_utf8(source).map_err(|e| ParseError::Encoding {
        valid_up_to: e.valid_up_to(),
    })?;
    let dom = parse_document(RcDom::default(), ParseOpts::default()).one(text);
    let html = dom
        .document
        .children
        .borrow()
        .iter()
        .find(|h| matches!(&h.data, NodeData::Element { name, .. } if &*name.local == "html"))
        .cloned();
    let mut root = match html {
        Some(h) => match convert_element(&h, false) {
            Some(DocNode::Element(e)) => e,
            _ => Element::new("html"),
        },
        None => Element::new("html"),
    };
    normalize_root(&mut root);
    Ok(DocNode::Element(root))
}

fn normalize_root(root: &mut Element) {
    for child in root.children.iter_mut() {
        if let DocNode::Element(head) = child {
            if head.tag == "head" {
                head.children
                    .retain(|c| !c.tag().is_some_and(|t| HEAD_METADATA.contains(&t)));
            }
        }
    }
    root.children.retain(|c| match c {
        DocNode::Element(e) if e.tag == "head" || e.tag == "body" => !e.children.is_empty(),
        _ => true,
    });
}

fn convert_element(handle: &Handle, in_pre: bool) -> Option<DocNode> {
    let NodeData::Element { name, attrs, .. } = &handle.data else {
        return None;
    };
    let tag = name.local.to_string();
    if DROPPED.contains(&tag.as_str()) {
        return None;
    }
    let mut el = Element::new(tag);
    el.attrs = attrs
        .borrow()
        .iter()
        .map(|a| (a.name.local.to_string(), a.value.to_string()))
        .collect::<IndexMap<_, _>>();
    let in_pre = in_pre || el.tag == "pre" || el.tag == "textarea";
    el.children = convert_children(handle, in_pre);
    Some(DocNode::Element(el))
}

fn convert_children(handle: &Handle, in_pre: bool) -> Vec<DocNode> {
    let mut out: Vec<DocNode> = Vec::new();
    for child in handle.children.borrow().iter() {
        match &child.data {
            NodeData::Text { contents } => {
                let raw = contents.borrow();
                push_text(&mut out, &raw);
            }
            NodeData::Element { .. } => match convert_element(child, in_pre) {
                // `<sentence-beg/>` is not void in HTML, so the tree builder
                // nests whatever follows inside it; hoist it back out.
                Some(DocNode::Element(mut e)) if is_sentinel_tag(&e.tag) => {
                    let hoisted = std::mem::take(&mut e.children);
                    e.attrs.clear();
                    out.push(DocNode::Element(e));
                    for h in hoisted {
                        match h {
                            DocNode::Text(s) => push_text(&mut out, &s),
                            other => out.push(other),
                        }
                    }
                }
                Some(node) => out.push(node),
                None => {}
            },
            _ => {}
        }
    }
    if !in_pre {
        for node in out.iter_mut() {
            if let DocNode::Text(s) = node {
                *s = collapse_whitespace(s);
            }
        }
    }
    drop_layout_whitespace(out)
}

fn is_sentinel_tag(tag: &str) -> bool {
    tag == SENTENCE_BEGIN || tag == SENTENCE_END
}

fn push_text(out: &mut Vec<DocNode>, s: &str) {
    if let Some(DocNode::Text(prev)) = out.last_mut() {
        prev.push_str(s);
    } else {
        out.push(DocNode::Text(s.to_string()));
    }
}

pub(crate) fn is_html_space(c: char) -> bool {
    matches!(c, ' ' | '\t' | '\n' | '\r' | '\x0C')
}

fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_space = false;
    for c in s.chars() {
        if is_html_space(c) {
            if !in_space {
                out.push(' ');
            }
            in_space = true;
        } else {
            out.push(c);
            in_space = false;
        }
    }
    out
}

/// Whitespace-only text survives only between two inline siblings.
fn drop_layout_whitespace(nodes: Vec<DocNode>) -> Vec<DocNode> {
    let is_blank = |n: &DocNode| n.as_text().is_some_and(|s| s.chars().all(is_html_space));
    let inline = |n: Option<&DocNode>| match n {
        Some(DocNode::Text(_)) => true,
        Some(DocNode::Element(e)) => !crate::render::is_block_tag(&e.tag),
        None => false,
    };
    let keep: Vec<bool> = (0..nodes.len())
        .map(|i| {
            !is_blank(&nodes[i])
                || (i > 0 && inline(nodes.get(i - 1)) && inline(nodes.get(i + 1)))
        })
        .collect();
    nodes
        .into_iter()
        .zip(keep)
        .filter_map(|(n, k)| k.then_some(n))
        .collect()
}

const VOID: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "source", "track",
    "wbr",
];

/// Serializes a tree back to HTML. Sentinels are written as
/// `<sentence-beg/>` / `<sentence-end/>`.
pub fn to_html(doc: &DocNode) -> String {
    let mut out = String::new();
    write_html(doc, &mut out);
    out
}

fn write_html(node: &DocNode, out: &mut String) {
    match node {
        DocNode::Text(s) => escape_into(s, false, out),
        DocNode::Element(e) => {
            out.push('<');
            out.push_str(&e.tag);
            for (k, v) in &e.attrs {
                out.push(' ');
                out.push_str(k);
                out.push_str("=\"");
                escape_into(v, true, out);
                out.push('"');
            }
            if is_sentinel_tag(&e.tag) && e.children.is_empty() {
                out.push_str("/>");
                return;
            }
            out.push('>');
            if VOID.contains(&e.tag.as_str()) {
                return;
            }
            for c in &e.children {
                write_html(c, out);
            }
            out.push_str("</");
            out.push_str(&e.tag);
            out.push('>');
        }
    }
}

fn escape_into(s: &str, attr: bool, out: &mut String) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' if attr => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
}
