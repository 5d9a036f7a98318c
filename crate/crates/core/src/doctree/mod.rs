//! Path-addressable document trees.
//!
//! A document is either a text leaf or an element carrying a tag, an ordered
//! attribute map and an ordered list of children. Nodes are addressed by
//! [`Path`]s (0-based child indices from the root) and selections by
//! [`PathSet`]s. Everything here is a pure function over immutable trees:
//! path-set operations never materialize anything, and [`DocNode::prune`] /
//! [`DocNode::materialize`] are the only places that copy tree structure.

mod html;
mod path;

use std::collections::HashMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

pub use html::{parse_html, to_html, ParseError};
pub use path::{Path, PathSet};

/// Tag of the zero-width element opening a sentence.
pub const SENTENCE_BEGIN: &str = "sentence-beg";
/// Tag of the zero-width element closing a sentence.
pub const SENTENCE_END: &str = "sentence-end";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocNode {
    Text(String),
    Element(Element),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Element {
    pub tag: String,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub attrs: IndexMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<DocNode>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DocError {
    #[error("path {0} does not address a node of the document")]
    InvalidPath(Path),
}

impl Element {
    pub fn new(tag: impl Into<String>) -> Self {
        Element {
            tag: tag.into(),
            attrs: IndexMap::new(),
            children: Vec::new(),
        }
    }

    pub fn with_children(tag: impl Into<String>, children: Vec<DocNode>) -> Self {
        Element {
            children,
            ..Element::new(tag)
        }
    }

    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs.get(name).map(String::as_str)
    }
}

impl DocNode {
    pub fn text(s: impl Into<String>) -> Self {
        DocNode::Text(s.into())
    }

    pub fn element(tag: impl Into<String>, children: Vec<DocNode>) -> Self {
        DocNode::Element(Element::with_children(tag, children))
    }

    pub fn as_element(&self) -> Option<&Element> {
        match self {
            DocNode::Element(e) => Some(e),
            DocNode::Text(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            DocNode::Text(s) => Some(s),
            DocNode::Element(_) => None,
        }
    }

    /// Tag name for elements, `None` for text leaves.
    pub fn tag(&self) -> Option<&str> {
        self.as_element().map(|e| e.tag.as_str())
    }

    pub fn is_tag(&self, tag: &str) -> bool {
        self.tag() == Some(tag)
    }

    pub fn children(&self) -> &[DocNode] {
        match self {
            DocNode::Element(e) => &e.children,
            DocNode::Text(_) => &[],
        }
    }

    pub fn is_sentinel(&self) -> bool {
        matches!(self.tag(), Some(SENTENCE_BEGIN) | Some(SENTENCE_END))
    }

    /// Number of nodes in the tree, including the root.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(DocNode::size).sum::<usize>()
    }

    /// Concatenated text of all descendant leaves, in document order.
    pub fn text_content(&self) -> String {
        let mut out = String::new();
        self.push_text(&mut out);
        out
    }

    fn push_text(&self, out: &mut String) {
        match self {
            DocNode::Text(s) => out.push_str(s),
            DocNode::Element(e) => e.children.iter().for_each(|c| c.push_text(out)),
        }
    }

    /// The subtree rooted at `path`.
    pub fn node_at(&self, path: &Path) -> Result<&DocNode, DocError> {
        self.get(path)
            .ok_or_else(|| DocError::InvalidPath(path.clone()))
    }

    pub fn get(&self, path: &Path) -> Option<&DocNode> {
        let mut node = self;
        for &i in path.indices() {
            node = node.children().get(i)?;
        }
        Some(node)
    }

    pub(crate) fn get_mut(&mut self, path: &Path) -> Option<&mut DocNode> {
        let mut node = self;
        for &i in path.indices() {
            node = match node {
                DocNode::Element(e) => e.children.get_mut(i)?,
                DocNode::Text(_) => return None,
            };
        }
        Some(node)
    }

    pub fn is_valid(&self, path: &Path) -> bool {
        self.get(path).is_some()
    }

    /// Checks `paths ⊆ valid_paths(self)`, reporting the first offender.
    pub fn validate(&self, paths: &PathSet) -> Result<(), DocError> {
        match paths.iter().find(|p| !self.is_valid(p)) {
            Some(p) => Err(DocError::InvalidPath(p.clone())),
            None => Ok(()),
        }
    }

    /// All nodes with their paths, in document (pre-)order.
    pub fn walk(&self) -> Vec<(Path, &DocNode)> {
        let mut out = Vec::with_capacity(self.size());
        self.walk_from(Path::root(), &mut out);
        out
    }

    /// Like [`DocNode::walk`] but for the subtree at `root`, reporting full paths.
    pub fn walk_from<'a>(&'a self, root: Path, out: &mut Vec<(Path, &'a DocNode)>) {
        let mut stack = vec![(root, self)];
        while let Some((path, node)) = stack.pop() {
            for (i, child) in node.children().iter().enumerate().rev() {
                stack.push((path.child(i), child));
            }
            out.push((path, node));
        }
    }

    pub fn valid_paths(&self) -> PathSet {
        self.walk().into_iter().map(|(p, _)| p).collect()
    }

    /// Ancestor completion: `paths` plus every proper prefix of its members.
    pub fn up(&self, paths: &PathSet) -> PathSet {
        let mut out = paths.clone();
        // Sets iterate in lexicographic order, so a member's prefixes were
        // visited (and completed) before it: stop at the first one present.
        for p in paths.iter() {
            let mut cur = p.clone();
            while let Some(parent) = cur.parent() {
                if !out.insert(parent.clone()) {
                    break;
                }
                cur = parent;
            }
        }
        out
    }

    /// Descendant completion: `paths` plus every valid descendant of its members.
    pub fn down(&self, paths: &PathSet) -> PathSet {
        let mut out = paths.clone();
        for p in paths.iter() {
            self.insert_subtree(p, &mut out);
        }
        out
    }

    fn insert_subtree(&self, root: &Path, out: &mut PathSet) {
        if let Some(node) = self.get(root) {
            let mut nodes = Vec::new();
            node.walk_from(root.clone(), &mut nodes);
            out.extend(nodes.into_iter().map(|(p, _)| p));
        }
    }

    /// Ancestor-descendant closure, `up(P) ∪ down(P)`.
    pub fn link(&self, paths: &PathSet) -> PathSet {
        let mut out = self.up(paths);
        out.extend(self.down(paths));
        out
    }

    /// Completion used when materializing contextualized selections.
    ///
    /// Members with no selected proper descendant stand for their whole
    /// subtree (descendant completion); members that already have selected
    /// descendants are kept as shells. Ancestors are always completed. This
    /// agrees with [`DocNode::link`] whenever no member has a partially
    /// selected subtree, and lets context policies add scaffolding such as a
    /// list or table element without dragging in every sibling under it.
    pub fn complete(&self, paths: &PathSet) -> PathSet {
        let frontier: PathSet = paths
            .iter()
            .filter(|p| !paths.has_proper_descendant(p))
            .cloned()
            .collect();
        let mut out = self.up(paths);
        for p in frontier.iter() {
            self.insert_subtree(p, &mut out);
        }
        out
    }

    /// Keeps exactly the nodes whose paths are in `keep`; `None` when the
    /// root itself is not kept. Surviving children are re-indexed densely.
    pub fn prune(&self, keep: &PathSet) -> Option<DocNode> {
        self.prune_tracked(keep, None)
    }

    /// `prune(link(P))`: the smallest well-formed tree holding every node of `P`.
    pub fn subdoc(&self, paths: &PathSet) -> Option<DocNode> {
        self.prune(&self.link(paths))
    }

    /// Prunes `complete(P)` and records, for every node of the result, the
    /// path it came from in `self`.
    pub fn materialize(&self, paths: &PathSet) -> Option<Materialized> {
        let keep = self.complete(paths);
        let mut origins = HashMap::new();
        let tree = self.prune_tracked(&keep, Some(&mut origins))?;
        Some(Materialized { tree, origins })
    }

    fn prune_tracked(
        &self,
        keep: &PathSet,
        mut origins: Option<&mut HashMap<Path, Path>>,
    ) -> Option<DocNode> {
        if !keep.contains(&Path::root()) {
            return None;
        }
        let mut src = Vec::new();
        let mut dst = Vec::new();
        Some(prune_aux(self, keep, &mut src, &mut dst, &mut origins))
    }
}

fn prune_aux(
    node: &DocNode,
    keep: &PathSet,
    src: &mut Vec<usize>,
    dst: &mut Vec<usize>,
    origins: &mut Option<&mut HashMap<Path, Path>>,
) -> DocNode {
    if let Some(map) = origins.as_deref_mut() {
        map.insert(Path::from(dst.clone()), Path::from(src.clone()));
    }
    match node {
        DocNode::Text(s) => DocNode::Text(s.clone()),
        DocNode::Element(e) => {
            let mut children = Vec::new();
            for (i, child) in e.children.iter().enumerate() {
                src.push(i);
                if keep.contains_indices(src) {
                    dst.push(children.len());
                    children.push(prune_aux(child, keep, src, dst, origins));
                    dst.pop();
                }
                src.pop();
            }
            DocNode::Element(Element {
                tag: e.tag.clone(),
                attrs: e.attrs.clone(),
                children,
            })
        }
    }
}

/// A materialized subdocument together with its origin-path annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct Materialized {
    pub tree: DocNode,
    origins: HashMap<Path, Path>,
}

impl Materialized {
    /// Source-tree path of the node at `path` in the materialized tree.
    pub fn origin(&self, path: &Path) -> Option<&Path> {
        self.origins.get(path)
    }
}
