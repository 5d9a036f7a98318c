//! Sentence structure on top of parsed trees.
//!
//! Sentences are marked by inserting empty `sentence-beg` / `sentence-end`
//! elements as siblings of existing content. Text leaves may be split at a
//! boundary; elements are never split, moved or duplicated.

mod splitter;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::doctree::{DocNode, Element, Path, PathSet, SENTENCE_BEGIN, SENTENCE_END};
use crate::render::is_block_tag;

pub use splitter::{RuleSplitter, SentenceSplitter};

/// Tags that delimit segmentation units when they hold no such tag below them.
pub const BLOCK_LEAF_TAGS: &[&str] = &[
    "p",
    "li",
    "td",
    "th",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "blockquote",
    "caption",
];

pub(crate) const HEADER_TAGS: &[&str] = &["h1", "h2", "h3", "h4", "h5", "h6"];

/// Heading level of an `h1`–`h6` element.
pub fn header_level(node: &DocNode) -> Option<usize> {
    node.tag().and_then(heading_level)
}

/// Heading level of an `h1`–`h6` tag name.
pub fn heading_level(tag: &str) -> Option<usize> {
    HEADER_TAGS.iter().position(|h| *h == tag).map(|i| i + 1)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SegmentError {
    #[error("splitter returned an unusable span {span:?} for a {len}-byte text: {reason}")]
    SpanMapping {
        span: Range<usize>,
        len: usize,
        reason: &'static str,
    },
    #[error("no sentence begins at {0}")]
    UnknownSentence(Path),
    #[error("unbalanced sentence sentinel at {0}")]
    MalformedSentinels(Path),
}

/// Identifies a sentence by the path of its begin sentinel.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SentenceId(Path);

impl SentenceId {
    pub fn begin_path(&self) -> &Path {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub id: SentenceId,
    /// Everything strictly between the two sentinels, down-closed.
    pub paths: PathSet,
    /// The segmentation unit the sentence belongs to, down-closed.
    pub block: PathSet,
    /// Inside an `h1`–`h6` or `title` element.
    pub in_heading: bool,
}

/// A tree carrying sentence sentinels plus the sentences found in it.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedDoc {
    doc: DocNode,
    sentences: Vec<Sentence>,
}

impl AnnotatedDoc {
    /// Reads the sentences off a tree that already carries sentinels.
    pub fn from_annotated(doc: DocNode) -> Result<Self, SegmentError> {
        let sentences = collect_sentences(&doc)?;
        Ok(AnnotatedDoc { doc, sentences })
    }

    pub fn doc(&self) -> &DocNode {
        &self.doc
    }

    pub fn into_doc(self) -> DocNode {
        self.doc
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn sentence_ids(&self) -> impl Iterator<Item = &SentenceId> {
        self.sentences.iter().map(|s| &s.id)
    }

    pub fn sentence(&self, id: &SentenceId) -> Option<&Sentence> {
        self.sentences
            .binary_search_by(|s| s.id.cmp(id))
            .ok()
            .map(|i| &self.sentences[i])
    }

    pub fn sent_paths(&self, id: &SentenceId) -> Result<&PathSet, SegmentError> {
        self.sentence(id)
            .map(|s| &s.paths)
            .ok_or_else(|| SegmentError::UnknownSentence(id.0.clone()))
    }

    pub fn block_leaves(&self) -> Vec<Path> {
        block_leaves(&self.doc)
    }
}

fn is_block_leaf_tag(tag: &str) -> bool {
    BLOCK_LEAF_TAGS.contains(&tag)
}

/// Block-level elements containing no other block-level element, in
/// document order.
pub fn block_leaves(doc: &DocNode) -> Vec<Path> {
    let mut out = Vec::new();
    block_leaves_aux(doc, &mut Vec::new(), &mut out);
    out
}

/// Returns whether `node` is or contains a block leaf.
fn block_leaves_aux(node: &DocNode, path: &mut Vec<usize>, out: &mut Vec<Path>) -> bool {
    let DocNode::Element(e) = node else {
        return false;
    };
    let mut below = false;
    for (i, c) in e.children.iter().enumerate() {
        path.push(i);
        below |= block_leaves_aux(c, path, out);
        path.pop();
    }
    if !below && is_block_leaf_tag(&e.tag) {
        out.push(Path::from(path.clone()));
        return true;
    }
    below
}

/// Block-leaf membership queries answered from the sorted leaf set.
struct Leaves(PathSet);

impl Leaves {
    fn of(doc: &DocNode) -> Self {
        Leaves(block_leaves(doc).into_iter().collect())
    }

    fn is_leaf(&self, path: &Path) -> bool {
        self.0.contains(path)
    }

    fn holds_leaf(&self, path: &Path) -> bool {
        self.0.contains(path) || self.0.has_proper_descendant(path)
    }

    /// Elements break inline runs when they are block-level or hold a block leaf.
    fn is_blockish(&self, node: &DocNode, path: &Path) -> bool {
        match node {
            DocNode::Text(_) => false,
            DocNode::Element(e) => is_block_tag(&e.tag) || self.holds_leaf(path),
        }
    }
}

/// Inserts sentinel pairs around every sentence of every block.
///
/// Blocks are the block leaves plus maximal runs of inline content sitting
/// directly in elements that also hold block leaves (such as the label of a
/// nested list item). A document without block leaves is treated as one
/// block. Already-annotated input is returned as is.
pub fn segment_sentences(
    doc: &DocNode,
    splitter: &dyn SentenceSplitter,
) -> Result<AnnotatedDoc, SegmentError> {
    if contains_sentinel(doc) {
        return AnnotatedDoc::from_annotated(doc.clone());
    }
    let mut targets = Vec::new();
    let leaves = Leaves::of(doc);
    if leaves.0.is_empty() {
        if let DocNode::Element(e) = doc {
            targets.push((Path::root(), 0..e.children.len()));
        }
    } else {
        for leaf in leaves.0.iter() {
            let n = doc.get(leaf).map_or(0, |n| n.children().len());
            targets.push((leaf.clone(), 0..n));
        }
        inline_runs(doc, Path::root(), &leaves, &mut targets);
    }
    // later targets first so insertions never shift a pending target
    targets.sort_by_key(|t| std::cmp::Reverse(t.0.child(t.1.start)));

    let mut out = doc.clone();
    for (container, range) in targets {
        let (container, range) = descend(&out, container, range);
        if let Some(DocNode::Element(e)) = out.get_mut(&container) {
            insert_sentinels(e, range, splitter)?;
        }
    }
    AnnotatedDoc::from_annotated(out)
}

fn contains_sentinel(node: &DocNode) -> bool {
    node.is_sentinel() || node.children().iter().any(contains_sentinel)
}

fn has_words(node: &DocNode) -> bool {
    match node {
        DocNode::Text(s) => s.chars().any(|c| !c.is_whitespace()),
        DocNode::Element(e) => e.children.iter().any(has_words),
    }
}

/// Segmentation targets outside block leaves: runs of inline children in
/// elements holding block leaves, and block-level elements holding none.
fn inline_runs(node: &DocNode, path: Path, leaves: &Leaves, out: &mut Vec<(Path, Range<usize>)>) {
    let DocNode::Element(e) = node else { return };
    let mut start = None;
    for (i, c) in e.children.iter().enumerate() {
        let child = path.child(i);
        if !leaves.is_blockish(c, &child) {
            start.get_or_insert(i);
            continue;
        }
        push_run(e, &path, start.take(), i, out);
        if leaves.is_leaf(&child) || c.is_tag("head") {
            continue;
        }
        if leaves.holds_leaf(&child) {
            inline_runs(c, child, leaves, out);
        } else if has_words(c) {
            out.push((child, 0..c.children().len()));
        }
    }
    push_run(e, &path, start, e.children.len(), out);
}

fn push_run(
    e: &Element,
    path: &Path,
    start: Option<usize>,
    end: usize,
    out: &mut Vec<(Path, Range<usize>)>,
) {
    if let Some(s) = start {
        if e.children[s..end].iter().any(has_words) {
            out.push((path.clone(), s..end));
        }
    }
}

/// While all words of the range sit in a single element child, move into it.
fn descend(doc: &DocNode, mut container: Path, mut range: Range<usize>) -> (Path, Range<usize>) {
    loop {
        let Some(node) = doc.get(&container) else {
            return (container, range);
        };
        let kids = &node.children()[range.clone()];
        let mut wordy = kids.iter().enumerate().filter(|(_, c)| has_words(c));
        let (Some((i, only)), None) = (wordy.next(), wordy.next()) else {
            return (container, range);
        };
        match only {
            DocNode::Element(e) if !e.children.is_empty() => {
                container = container.child(range.start + i);
                range = 0..e.children.len();
            }
            _ => return (container, range),
        }
    }
}

fn insert_sentinels(
    container: &mut Element,
    range: Range<usize>,
    splitter: &dyn SentenceSplitter,
) -> Result<(), SegmentError> {
    let kids = &container.children[range.clone()];
    let mut text = String::new();
    let mut bounds = Vec::with_capacity(kids.len());
    for k in kids {
        let start = text.len();
        text.push_str(&k.text_content());
        bounds.push((start, text.len()));
    }
    if !text.chars().any(|c| !c.is_whitespace()) {
        return Ok(());
    }
    let spans = splitter.split(&text);
    validate_spans(&spans, &text)?;

    let mut cuts: Vec<usize> = Vec::new();
    for span in spans.iter().skip(1) {
        if let Some(x) = snap(span.start, kids, &bounds) {
            cuts.push(x);
        }
    }
    cuts.sort_unstable();
    cuts.dedup();
    let cuts = drop_blank_segments(cuts, &text);

    let beg = || DocNode::Element(Element::new(SENTENCE_BEGIN));
    let end = || DocNode::Element(Element::new(SENTENCE_END));
    let mut wrapped = vec![beg()];
    let mut next_cut = cuts.iter().copied().peekable();
    for (k, &(s, e)) in kids.iter().zip(&bounds) {
        match k {
            DocNode::Text(t) => {
                let mut from = s;
                while let Some(&x) = next_cut.peek() {
                    if x >= e {
                        break;
                    }
                    if x > from {
                        wrapped.push(DocNode::Text(t[from - s..x - s].to_string()));
                    }
                    wrapped.push(end());
                    wrapped.push(beg());
                    from = x;
                    next_cut.next();
                }
                wrapped.push(DocNode::Text(t[from - s..].to_string()));
            }
            DocNode::Element(_) => {
                if e > s && next_cut.peek() == Some(&s) {
                    wrapped.push(end());
                    wrapped.push(beg());
                    next_cut.next();
                }
                wrapped.push(k.clone());
            }
        }
    }
    wrapped.push(end());
    container.children.splice(range, wrapped);
    Ok(())
}

fn validate_spans(spans: &[Range<usize>], text: &str) -> Result<(), SegmentError> {
    let err = |span: &Range<usize>, reason| SegmentError::SpanMapping {
        span: span.clone(),
        len: text.len(),
        reason,
    };
    let mut prev_end = 0;
    for span in spans {
        if span.start > span.end || span.end > text.len() {
            return Err(err(span, "out of range"));
        }
        if span.start < prev_end {
            return Err(err(span, "overlaps the previous span"));
        }
        if !text.is_char_boundary(span.start) || !text.is_char_boundary(span.end) {
            return Err(err(span, "not on a character boundary"));
        }
        prev_end = span.end;
    }
    Ok(())
}

/// Moves a cut that falls strictly inside an element child to just after
/// that element. `None` when the cut lands at either end of the range.
fn snap(mut x: usize, kids: &[DocNode], bounds: &[(usize, usize)]) -> Option<usize> {
    loop {
        let j = bounds.iter().position(|&(_, e)| e > x)?;
        let (s, e) = bounds[j];
        if s < x && kids[j].as_element().is_some() {
            x = e;
            continue;
        }
        return (x > 0).then_some(x);
    }
}

/// Drops cuts that would leave a sentence without any words.
fn drop_blank_segments(cuts: Vec<usize>, text: &str) -> Vec<usize> {
    let wordy = |a: usize, b: usize| text[a..b].chars().any(|c| !c.is_whitespace());
    let mut kept: Vec<usize> = Vec::with_capacity(cuts.len());
    let mut prev = 0;
    for x in cuts {
        if wordy(prev, x) {
            kept.push(x);
            prev = x;
        }
    }
    while let Some(&last) = kept.last() {
        if wordy(last, text.len()) {
            break;
        }
        kept.pop();
    }
    kept
}

fn collect_sentences(doc: &DocNode) -> Result<Vec<Sentence>, SegmentError> {
    let leaves = Leaves::of(doc);
    let mut out = Vec::new();
    for (path, node) in doc.walk() {
        let DocNode::Element(e) = node else { continue };
        if !e.children.iter().any(DocNode::is_sentinel) {
            continue;
        }
        let mut open: Option<usize> = None;
        for (i, c) in e.children.iter().enumerate() {
            match c.tag() {
                Some(SENTENCE_BEGIN) => {
                    if open.is_some() {
                        return Err(SegmentError::MalformedSentinels(path.child(i)));
                    }
                    open = Some(i);
                }
                Some(SENTENCE_END) => {
                    let Some(b) = open.take() else {
                        return Err(SegmentError::MalformedSentinels(path.child(i)));
                    };
                    out.push(sentence_at(doc, &leaves, &path, b, i));
                }
                _ => {}
            }
        }
        if let Some(b) = open {
            return Err(SegmentError::MalformedSentinels(path.child(b)));
        }
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

fn sentence_at(doc: &DocNode, leaves: &Leaves, container: &Path, beg: usize, end: usize) -> Sentence {
    let between: PathSet = (beg + 1..end).map(|i| container.child(i)).collect();
    let paths = doc.down(&between);

    let chain: Vec<Path> = std::iter::once(container.clone())
        .chain(container.ancestors())
        .collect();
    let node_of = |p: &Path| doc.get(p).expect("ancestor of a valid path");
    let in_heading = chain
        .iter()
        .any(|p| header_level(node_of(p)).is_some() || node_of(p).is_tag("title"));
    let leaf = chain.iter().find(|p| leaves.is_leaf(p));
    let block = match leaf {
        Some(p) => doc.down(&PathSet::single(p.clone())),
        None => {
            // inline run around the sentence inside its container
            let kids = node_of(container).children();
            let mut lo = beg;
            let blockish = |i: usize| leaves.is_blockish(&kids[i], &container.child(i));
            while lo > 0 && !blockish(lo - 1) {
                lo -= 1;
            }
            let mut hi = end + 1;
            while hi < kids.len() && !blockish(hi) {
                hi += 1;
            }
            let run: PathSet = (lo..hi)
                .filter(|&i| !kids[i].is_sentinel())
                .map(|i| container.child(i))
                .collect();
            doc.down(&run)
        }
    };
    Sentence {
        id: SentenceId(container.child(beg)),
        paths,
        block,
        in_heading,
    }
}

/// Removes every sentinel, re-joining text leaves split by segmentation.
pub fn strip_sentinels(doc: &DocNode) -> DocNode {
    match doc {
        DocNode::Text(_) => doc.clone(),
        DocNode::Element(e) => {
            let had = e.children.iter().any(DocNode::is_sentinel);
            let mut children: Vec<DocNode> = Vec::with_capacity(e.children.len());
            for c in e.children.iter().filter(|c| !c.is_sentinel()) {
                match (children.last_mut(), c) {
                    (Some(DocNode::Text(prev)), DocNode::Text(t)) if had => prev.push_str(t),
                    _ => children.push(strip_sentinels(c)),
                }
            }
            DocNode::Element(Element {
                tag: e.tag.clone(),
                attrs: e.attrs.clone(),
                children,
            })
        }
    }
}

#[cfg(test)]
mod tests;
