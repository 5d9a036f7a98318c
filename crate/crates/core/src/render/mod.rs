//! Markdown rendering of selections, size estimation, and labeled views.

mod markdown;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::doctree::{DocNode, Path, PathSet};
use markdown::{Renderer, Tagged};

/// Tags rendered as blocks; everything else is inline.
const BLOCK_TAGS: &[&str] = &[
    "address", "article", "aside", "blockquote", "body", "caption", "center", "dd", "details",
    "dialog", "dir", "div", "dl", "dt", "fieldset", "figcaption", "figure", "footer", "form", "h1",
    "h2", "h3", "h4", "h5", "h6", "head", "header", "hgroup", "hr", "html", "li", "main", "menu",
    "nav", "ol", "p", "pre", "section", "summary", "table", "tbody", "td", "tfoot", "th", "thead",
    "title", "tr", "ul",
];

pub fn is_block_tag(tag: &str) -> bool {
    BLOCK_TAGS.contains(&tag)
}

/// Size of rendered text in budget units.
pub trait Sizer: Send + Sync {
    fn size(&self, text: &str) -> usize;
}

impl<F> Sizer for F
where
    F: Fn(&str) -> usize + Send + Sync,
{
    fn size(&self, text: &str) -> usize {
        self(text)
    }
}

/// Counts whitespace-separated tokens.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceSizer;

impl Sizer for WhitespaceSizer {
    fn size(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}

pub fn cost(text: &str, sizer: &dyn Sizer) -> usize {
    sizer.size(text)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RenderError {
    #[error("text leaf {0} belongs to more than one unit")]
    OverlappingUnits(Path),
}

/// Renders the selection `paths` of `doc` as Markdown.
///
/// Members that have selected descendants render only those descendants;
/// other members render their whole subtree, and ancestors are implied.
pub fn render_markdown(doc: &DocNode, paths: &PathSet) -> String {
    render_tagged(doc, paths, &HashMap::new())
        .map(|t| compose(&t, false).0)
        .unwrap_or_default()
}

/// Renders a whole document.
pub fn render_document(doc: &DocNode) -> String {
    render_markdown(doc, &PathSet::single(Path::root()))
}

fn render_tagged(doc: &DocNode, paths: &PathSet, units: &HashMap<Path, u32>) -> Option<Tagged> {
    let mat = doc.materialize(paths)?;
    Some(Renderer::new(doc, &mat, units).render())
}

/// A citable unit shown in a view under a label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledUnit {
    pub label: String,
    pub paths: PathSet,
}

/// Rendered text with `<lab_N>` markers and the unit behind each label.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RenderedView {
    pub text: String,
    pub labels: Vec<LabeledUnit>,
}

impl RenderedView {
    /// Paths of the unit shown under `label` (`"lab_3"`).
    pub fn paths_for(&self, label: &str) -> Option<&PathSet> {
        self.labels.iter().find(|u| u.label == label).map(|u| &u.paths)
    }

    pub fn label_names(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(|u| u.label.as_str())
    }
}

/// Renders like [`render_markdown`], wrapping the text of each unit in
/// `<lab_N>` … `</lab_N>`.
///
/// Labels are numbered from 1 in order of first appearance. Units that
/// contribute no visible text get no label. Whitespace at a unit boundary
/// is placed between the closing and the next opening marker, so removing
/// the markers gives back the plain rendering.
pub fn render_labeled(
    doc: &DocNode,
    paths: &PathSet,
    units: &[PathSet],
) -> Result<RenderedView, RenderError> {
    let mut owner: HashMap<Path, u32> = HashMap::new();
    let mut text_owner: HashMap<&Path, u32> = HashMap::new();
    for (i, unit) in units.iter().enumerate() {
        let i = i as u32;
        for p in unit.iter() {
            if doc.get(p).and_then(DocNode::as_text).is_some() {
                if let Some(prev) = text_owner.insert(p, i) {
                    if prev != i {
                        return Err(RenderError::OverlappingUnits(p.clone()));
                    }
                }
            }
            owner.entry(p.clone()).or_insert(i);
        }
    }
    let Some(tagged) = render_tagged(doc, paths, &owner) else {
        return Ok(RenderedView::default());
    };
    let (text, order) = compose(&tagged, true);
    let labels = order
        .into_iter()
        .enumerate()
        .map(|(n, unit)| LabeledUnit {
            label: label_name(n + 1),
            paths: units[unit as usize].clone(),
        })
        .collect();
    Ok(RenderedView { text, labels })
}

pub fn label_name(n: usize) -> String {
    format!("lab_{n}")
}

/// Flattens tagged text, optionally inserting label markers. Returns the
/// text and the units in order of first appearance.
fn compose(t: &Tagged, labeled: bool) -> (String, Vec<u32>) {
    let mut out = String::with_capacity(t.chars.len());
    let mut order: Vec<u32> = Vec::new();
    let mut open: Option<(u32, usize)> = None;
    let mut pending = String::new();
    for &(c, tag) in &t.chars {
        if c.is_whitespace() {
            pending.push(c);
            continue;
        }
        if labeled && tag != open.map(|(u, _)| u) {
            if let Some((_, n)) = open.take() {
                out.push_str(&format!("</lab_{n}>"));
            }
            out.push_str(&pending);
            if let Some(u) = tag {
                let n = match order.iter().position(|&x| x == u) {
                    Some(i) => i + 1,
                    None => {
                        order.push(u);
                        order.len()
                    }
                };
                out.push_str(&format!("<lab_{n}>"));
                open = Some((u, n));
            }
        } else {
            out.push_str(&pending);
        }
        pending.clear();
        out.push(c);
    }
    if let Some((_, n)) = open {
        out.push_str(&format!("</lab_{n}>"));
    }
    out.push_str(&pending);
    (out, order)
}

/// Removes `<lab_N>` / `</lab_N>` markers.
pub fn strip_labels(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(i) = rest.find('<') {
        out.push_str(&rest[..i]);
        let tail = &rest[i..];
        match label_marker_len(tail) {
            Some(len) => rest = &tail[len..],
            None => {
                out.push('<');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn label_marker_len(s: &str) -> Option<usize> {
    let body = s.strip_prefix('<')?;
    let body = body.strip_prefix('/').unwrap_or(body);
    let digits = body.strip_prefix("lab_")?;
    let n = digits.bytes().take_while(u8::is_ascii_digit).count();
    if n == 0 || digits.as_bytes().get(n) != Some(&b'>') {
        return None;
    }
    Some(s.len() - digits.len() + n + 1)
}

/// Cuts `text` so that it fits `limit` together with `marker`, breaking at
/// whitespace. Returns `text` unchanged when it already fits.
pub fn truncate_to_budget(text: &str, limit: usize, sizer: &dyn Sizer, marker: &str) -> String {
    if sizer.size(text) <= limit {
        return text.to_string();
    }
    let cuts: Vec<usize> = text
        .char_indices()
        .filter(|&(i, c)| c.is_whitespace() && i > 0)
        .map(|(i, _)| i)
        .collect();
    let fits = |i: usize| sizer.size(&format!("{}{marker}", text[..i].trim_end())) <= limit;
    // largest prefix that fits, assuming size grows with the prefix
    let (mut lo, mut hi) = (0usize, cuts.len());
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if fits(cuts[mid - 1]) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let head = if lo == 0 { "" } else { text[..cuts[lo - 1]].trim_end() };
    format!("{head}{marker}").trim_start().to_string()
}
