use crate::doctree::{DocNode, Path, PathSet};
use crate::segment::heading_level;

/// An enrichment of path sets that is extensive, monotone and idempotent.
pub trait Policy: Send + Sync {
    fn name(&self) -> &'static str;
    fn enrich(&self, doc: &DocNode, paths: &PathSet) -> PathSet;
}

/// Subtrees that can carry their own `title`/`h1` without titling the page.
const FOREIGN: &[&str] = &["svg", "math", "iframe"];

fn first_tag(doc: &DocNode, tag: &str) -> Option<Path> {
    fn go(node: &DocNode, tag: &str, path: &mut Vec<usize>) -> Option<Path> {
        let DocNode::Element(e) = node else { return None };
        if e.tag == tag {
            return Some(Path::from(path.clone()));
        }
        if FOREIGN.contains(&e.tag.as_str()) {
            return None;
        }
        for (i, c) in e.children.iter().enumerate() {
            path.push(i);
            let found = go(c, tag, path);
            path.pop();
            if found.is_some() {
                return found;
            }
        }
        None
    }
    go(doc, tag, &mut Vec::new())
}

/// The `title` element, else the first `h1`, else nothing.
pub fn ctx_title(doc: &DocNode) -> PathSet {
    first_tag(doc, "title")
        .or_else(|| first_tag(doc, "h1"))
        .map(PathSet::single)
        .unwrap_or_default()
}

/// Headers in document order, each with the headers active right after it.
struct HeaderIndex {
    paths: Vec<Path>,
    active: Vec<[Option<usize>; 6]>,
}

impl HeaderIndex {
    fn build(doc: &DocNode) -> Self {
        let mut paths = Vec::new();
        let mut active = Vec::new();
        let mut slots: [Option<usize>; 6] = [None; 6];
        for (path, node) in doc.walk() {
            let Some(level) = node.tag().and_then(heading_level) else {
                continue;
            };
            slots[level - 1] = Some(paths.len());
            for deeper in slots.iter_mut().skip(level) {
                *deeper = None;
            }
            paths.push(path);
            active.push(slots);
        }
        HeaderIndex { paths, active }
    }

    /// Headers active immediately before `p` in document order.
    fn active_at(&self, p: &Path) -> impl Iterator<Item = (usize, &Path)> + '_ {
        let k = self.paths.partition_point(|h| h < p);
        let slots = if k == 0 { [None; 6] } else { self.active[k - 1] };
        slots
            .into_iter()
            .enumerate()
            .filter_map(move |(lvl, i)| i.map(|i| (lvl + 1, &self.paths[i])))
    }
}

fn is_header_at(doc: &DocNode, p: &Path) -> bool {
    doc.get(p)
        .and_then(DocNode::tag)
        .and_then(heading_level)
        .is_some()
}

/// Adds, for every non-header member, the headers active just before it:
/// the latest header of each level not superseded by a later header of
/// equal or higher rank. Header members do not trigger lookups.
pub fn ctx_headers(doc: &DocNode, paths: &PathSet) -> PathSet {
    let index = HeaderIndex::build(doc);
    let mut out = paths.clone();
    for p in paths.iter().filter(|p| !is_header_at(doc, p)) {
        out.extend(index.active_at(p).map(|(_, h)| h.clone()));
    }
    out
}

/// Innermost active header level at `p`, if any header is active.
pub(crate) fn innermost_header_level(doc: &DocNode, p: &Path) -> Option<usize> {
    HeaderIndex::build(doc).active_at(p).map(|(l, _)| l).max()
}

fn tag_at<'a>(doc: &'a DocNode, p: &Path) -> Option<&'a str> {
    doc.get(p).and_then(DocNode::tag)
}

fn is_list(tag: Option<&str>) -> bool {
    matches!(tag, Some("ul") | Some("ol"))
}

/// Adds list scaffolding around members inside lists: every node from the
/// member up to the outermost enclosing list, and for each enclosing item
/// except the innermost, the children that precede its nested list (the
/// item's label; a stray nested `li` also ends it). Sibling items are never
/// added.
pub fn ctx_lists(doc: &DocNode, paths: &PathSet) -> PathSet {
    let mut out = paths.clone();
    for p in paths.iter() {
        let chain: Vec<Path> = std::iter::once(p.clone()).chain(p.ancestors()).collect();
        let items: Vec<usize> = chain
            .iter()
            .enumerate()
            .filter(|(_, q)| tag_at(doc, q) == Some("li"))
            .map(|(i, _)| i)
            .collect();
        let Some(&outermost) = items.last() else {
            continue;
        };
        let top = chain[outermost..]
            .iter()
            .position(|q| is_list(tag_at(doc, q)))
            .map_or(outermost, |i| outermost + i);
        out.extend(chain[..=top].iter().cloned());
        for &j in &items[1..] {
            let li = &chain[j];
            let Some(DocNode::Element(e)) = doc.get(li) else { continue };
            let branch = p.indices()[li.len()];
            let first_list = e
                .children
                .iter()
                .position(|c| is_list(c.tag()) || c.is_tag("li"))
                .unwrap_or(e.children.len());
            out.extend((0..branch.min(first_list)).map(|i| li.child(i)));
        }
    }
    out
}

fn is_cell(tag: Option<&str>) -> bool {
    matches!(tag, Some("td") | Some("th"))
}

/// Position of the cell at `index` among the `td`/`th` children of `row`.
fn cell_column(row: &DocNode, index: usize) -> usize {
    row.children()[..index]
        .iter()
        .filter(|c| is_cell(c.tag()))
        .count()
}

fn nth_cell(row: &DocNode, col: usize) -> Option<usize> {
    row.children()
        .iter()
        .enumerate()
        .filter(|(_, c)| is_cell(c.tag()))
        .nth(col)
        .map(|(i, _)| i)
}

/// Rows of a table in document order, not looking into nested tables.
fn table_rows(doc: &DocNode, table: &Path) -> Vec<Path> {
    fn go(node: &DocNode, path: Path, out: &mut Vec<Path>) {
        for (i, c) in node.children().iter().enumerate() {
            match c.tag() {
                Some("tr") => out.push(path.child(i)),
                Some("table") | None => {}
                Some(_) => go(c, path.child(i), out),
            }
        }
    }
    let mut out = Vec::new();
    if let Some(t) = doc.get(table) {
        go(t, table.clone(), &mut out);
    }
    out
}

/// Adds, for every selected data cell, the leftmost header cell of its row
/// and the topmost header cell of its column, plus the row, section and
/// table elements linking them. Header cells never pull in labels.
pub fn ctx_tables(doc: &DocNode, paths: &PathSet) -> PathSet {
    let mut out = paths.clone();
    for p in paths.iter() {
        let cells = std::iter::once(p.clone())
            .chain(p.ancestors())
            .filter(|q| is_cell(tag_at(doc, q)));
        for cell in cells {
            let Some(row) = cell.parent().filter(|r| tag_at(doc, r) == Some("tr")) else {
                continue;
            };
            let Some(table) = row.ancestors().find(|q| tag_at(doc, q) == Some("table")) else {
                continue;
            };
            let spine = |q: &Path, out: &mut PathSet| {
                out.insert(q.clone());
                out.extend(q.ancestors().take_while(|a| a.len() >= table.len()));
            };
            spine(&cell, &mut out);
            if tag_at(doc, &cell) != Some("td") {
                continue;
            }
            let row_node = doc.get(&row).expect("parent of a valid path");
            if let Some(i) = row_node.children().iter().position(|c| c.is_tag("th")) {
                spine(&row.child(i), &mut out);
            }
            let col = cell_column(row_node, cell.last().unwrap_or(0));
            for r in table_rows(doc, &table) {
                let r_node = doc.get(&r).expect("row path from traversal");
                if let Some(i) = nth_cell(r_node, col) {
                    if r_node.children()[i].is_tag("th") {
                        spine(&r.child(i), &mut out);
                        break;
                    }
                }
            }
        }
    }
    out
}

pub struct TitlePolicy;
pub struct HeadersPolicy;
pub struct ListsPolicy;
pub struct TablesPolicy;

impl Policy for TitlePolicy {
    fn name(&self) -> &'static str {
        "title"
    }
    fn enrich(&self, doc: &DocNode, paths: &PathSet) -> PathSet {
        paths.union(&ctx_title(doc))
    }
}

impl Policy for HeadersPolicy {
    fn name(&self) -> &'static str {
        "headers"
    }
    fn enrich(&self, doc: &DocNode, paths: &PathSet) -> PathSet {
        ctx_headers(doc, paths)
    }
}

impl Policy for ListsPolicy {
    fn name(&self) -> &'static str {
        "lists"
    }
    fn enrich(&self, doc: &DocNode, paths: &PathSet) -> PathSet {
        ctx_lists(doc, paths)
    }
}

impl Policy for TablesPolicy {
    fn name(&self) -> &'static str {
        "tables"
    }
    fn enrich(&self, doc: &DocNode, paths: &PathSet) -> PathSet {
        ctx_tables(doc, paths)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown context policy {0:?} (expected title, headers, lists or tables)")]
pub struct UnknownPolicy(pub String);

/// The combined HTML policy with each component switchable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HtmlPolicy {
    pub title: bool,
    pub headers: bool,
    pub lists: bool,
    pub tables: bool,
}

impl Default for HtmlPolicy {
    fn default() -> Self {
        HtmlPolicy {
            title: true,
            headers: true,
            lists: true,
            tables: true,
        }
    }
}

impl HtmlPolicy {
    pub fn none() -> Self {
        HtmlPolicy {
            title: false,
            headers: false,
            lists: false,
            tables: false,
        }
    }

    /// Parses a comma-separated selection such as `"title,headers"`.
    pub fn from_names(names: &str) -> Result<Self, UnknownPolicy> {
        let mut out = HtmlPolicy::none();
        for name in names.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            match name {
                "title" => out.title = true,
                "headers" => out.headers = true,
                "lists" => out.lists = true,
                "tables" => out.tables = true,
                other => return Err(UnknownPolicy(other.to_string())),
            }
        }
        Ok(out)
    }

    pub fn names(&self) -> Vec<&'static str> {
        [
            (self.title, "title"),
            (self.headers, "headers"),
            (self.lists, "lists"),
            (self.tables, "tables"),
        ]
        .into_iter()
        .filter_map(|(on, n)| on.then_some(n))
        .collect()
    }

    /// One application of every enabled component, united.
    pub fn step(&self, doc: &DocNode, paths: &PathSet) -> PathSet {
        let mut out = paths.clone();
        if self.title {
            out.extend(ctx_title(doc));
        }
        if self.headers {
            out.extend(ctx_headers(doc, paths));
        }
        if self.lists {
            out.extend(ctx_lists(doc, paths));
        }
        if self.tables {
            out.extend(ctx_tables(doc, paths));
        }
        out
    }
}

impl Policy for HtmlPolicy {
    fn name(&self) -> &'static str {
        "html"
    }

    /// Least fixed point of [`HtmlPolicy::step`] above `paths`. Scaffolding
    /// added by one component can be a new trigger for another (a list
    /// label has headers of its own), so a single union is not idempotent.
    fn enrich(&self, doc: &DocNode, paths: &PathSet) -> PathSet {
        let mut cur = paths.clone();
        loop {
            let next = self.step(doc, &cur);
            if next.len() == cur.len() {
                return cur;
            }
            cur = next;
        }
    }
}

/// All four components, closed under repetition.
pub fn ctx_html(doc: &DocNode, paths: &PathSet) -> PathSet {
    HtmlPolicy::default().enrich(doc, paths)
}
