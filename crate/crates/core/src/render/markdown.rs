use std::collections::HashMap;

use crate::doctree::{DocNode, Element, Materialized, Path};
use crate::segment::heading_level;

use super::is_block_tag;

/// Index of the citable unit a character belongs to.
pub(super) type Tag = Option<u32>;

/// Rendered characters, each tagged with its unit.
#[derive(Debug, Clone, Default)]
pub(super) struct Tagged {
    pub chars: Vec<(char, Tag)>,
}

impl Tagged {
    fn push(&mut self, c: char, tag: Tag) {
        self.chars.push((c, tag));
    }

    fn push_str(&mut self, s: &str, tag: Tag) {
        self.chars.extend(s.chars().map(|c| (c, tag)));
    }

    fn append(&mut self, other: Tagged) {
        self.chars.extend(other.chars);
    }

    fn is_blank(&self) -> bool {
        self.chars.iter().all(|(c, _)| c.is_whitespace())
    }

    fn trim(mut self) -> Tagged {
        while self.chars.last().is_some_and(|(c, _)| c.is_whitespace()) {
            self.chars.pop();
        }
        let lead = self
            .chars
            .iter()
            .take_while(|(c, _)| c.is_whitespace())
            .count();
        self.chars.drain(..lead);
        self
    }

    fn join(parts: Vec<Tagged>, sep: &str) -> Tagged {
        let mut out = Tagged::default();
        for (i, p) in parts.into_iter().enumerate() {
            if i > 0 {
                out.push_str(sep, None);
            }
            out.append(p);
        }
        out
    }

    /// Prefixes the first line with `first` and every later line with
    /// `rest`; prefixes of empty lines lose their trailing spaces.
    fn prefix_lines(self, first: &str, rest: &str, tag: Tag) -> Tagged {
        let mut out = Tagged::default();
        let mut at_line_start = true;
        let mut first_line = true;
        for (c, t) in self.chars {
            if at_line_start {
                let pre = if first_line { first } else { rest };
                let empty_line = c == '\n';
                out.push_str(if empty_line { pre.trim_end() } else { pre }, tag);
                at_line_start = false;
                first_line = false;
            }
            out.push(c, t);
            if c == '\n' {
                at_line_start = true;
            }
        }
        out
    }
}

/// Inline content under construction, with whitespace collapsed.
#[derive(Default)]
struct Inline {
    out: Tagged,
    leading_space: bool,
    pending_space: bool,
}

impl Inline {
    fn text(&mut self, s: &str, tag: Tag) {
        for c in s.chars() {
            if c.is_whitespace() {
                self.space();
            } else {
                self.flush_space();
                self.out.push(c, tag);
            }
        }
    }

    fn space(&mut self) {
        if self.out.chars.is_empty() {
            self.leading_space = true;
        } else {
            self.pending_space = true;
        }
    }

    fn flush_space(&mut self) {
        if self.pending_space {
            if self.out.chars.last().is_some_and(|(c, _)| *c != '\n') {
                self.out.push(' ', None);
            }
            self.pending_space = false;
        }
    }

    fn raw(&mut self, s: &str, tag: Tag) {
        self.flush_space();
        self.out.push_str(s, tag);
    }

    fn hard_break(&mut self) {
        self.pending_space = false;
        if !self.out.chars.is_empty() {
            self.out.push('\n', None);
        }
    }

    /// Wraps a finished child run in `open`/`close`, moving its outer
    /// whitespace outside the markers.
    fn wrap(&mut self, child: Inline, open: &str, close: &str, tag: Tag) {
        if child.leading_space {
            self.space();
        }
        let body = child.out.trim();
        if !body.chars.is_empty() {
            self.raw(open, tag);
            self.out.append(body);
            self.out.push_str(close, tag);
        }
        if child.pending_space {
            self.space();
        }
    }
}

pub(super) struct Renderer<'a> {
    source: &'a DocNode,
    mat: &'a Materialized,
    units: &'a HashMap<Path, u32>,
}

impl<'a> Renderer<'a> {
    pub fn new(source: &'a DocNode, mat: &'a Materialized, units: &'a HashMap<Path, u32>) -> Self {
        Renderer { source, mat, units }
    }

    pub fn render(&self) -> Tagged {
        let root = &self.mat.tree;
        let tag = self.tag_of(&Path::root(), None);
        let blocks = match root {
            DocNode::Text(s) => {
                let mut inl = Inline::default();
                inl.text(s, tag);
                vec![inl.out.trim()]
            }
            DocNode::Element(e) if is_block_tag(&e.tag) => self.block(e, &Path::root(), tag),
            DocNode::Element(_) => self.blocks(std::slice::from_ref(root), &Path::root(), tag, true),
        };
        Tagged::join(blocks, "\n\n")
    }

    fn tag_of(&self, path: &Path, inherited: Tag) -> Tag {
        self.mat
            .origin(path)
            .and_then(|o| self.units.get(o).copied())
            .or(inherited)
    }

    /// Renders a sequence of siblings as blocks. `single` means `nodes` is
    /// the lone node at `base` rather than the children of `base`.
    fn blocks(&self, nodes: &[DocNode], base: &Path, tag: Tag, single: bool) -> Vec<Tagged> {
        let mut out = Vec::new();
        let mut run = Inline::default();
        for (i, node) in nodes.iter().enumerate() {
            let path = if single { base.clone() } else { base.child(i) };
            let t = self.tag_of(&path, tag);
            match node {
                DocNode::Element(e) if is_block_tag(&e.tag) => {
                    flush_paragraph(&mut run, &mut out);
                    out.extend(self.block(e, &path, t));
                }
                _ => self.inline(node, &path, t, &mut run),
            }
        }
        flush_paragraph(&mut run, &mut out);
        out
    }

    fn children_blocks(&self, e: &Element, path: &Path, tag: Tag) -> Vec<Tagged> {
        self.blocks(&e.children, path, tag, false)
    }

    fn block(&self, e: &Element, path: &Path, tag: Tag) -> Vec<Tagged> {
        if let Some(level) = heading_level(&e.tag).or((e.tag == "title").then_some(1)) {
            let body = self.flat_inline(e, path, tag);
            if body.is_blank() {
                return vec![];
            }
            let mut out = Tagged::default();
            out.push_str(&"#".repeat(level), tag);
            out.push(' ', tag);
            out.append(body);
            return vec![out];
        }
        match e.tag.as_str() {
            "ul" | "ol" => self.list(e, path, tag).into_iter().collect(),
            "table" => self.table(e, path, tag),
            "blockquote" => {
                let inner = self.children_blocks(e, path, tag);
                if inner.is_empty() {
                    return vec![];
                }
                vec![Tagged::join(inner, "\n\n").prefix_lines("> ", "> ", tag)]
            }
            "pre" => {
                let mut body = Tagged::default();
                self.raw_text(e, path, tag, &mut body);
                while body.chars.last().is_some_and(|(c, _)| *c == '\n') {
                    body.chars.pop();
                }
                if body.chars.is_empty() {
                    return vec![];
                }
                let mut out = Tagged::default();
                out.push_str("```\n", tag);
                out.append(body);
                out.push_str("\n```", tag);
                vec![out]
            }
            "hr" => {
                let mut out = Tagged::default();
                out.push_str("---", tag);
                vec![out]
            }
            _ => self.children_blocks(e, path, tag),
        }
    }

    fn list(&self, e: &Element, path: &Path, tag: Tag) -> Option<Tagged> {
        let ordered = e.tag == "ol";
        let start: i64 = e.attr("start").and_then(|s| s.trim().parse().ok()).unwrap_or(1);
        let mut items = Vec::new();
        let mut push_item = |body: Tagged, first: &Path, t: Tag| {
            if body.is_blank() {
                return;
            }
            let marker = if ordered {
                format!("{}. ", start + self.source_ordinal(first) as i64)
            } else {
                "- ".to_string()
            };
            let indent = " ".repeat(marker.chars().count());
            items.push(body.prefix_lines(&marker, &indent, t));
        };
        // stray inline content directly inside the list forms one item
        let mut run = Inline::default();
        let mut run_start: Option<Path> = None;
        for (i, child) in e.children.iter().enumerate() {
            let cpath = path.child(i);
            let t = self.tag_of(&cpath, tag);
            match child {
                DocNode::Element(ce) if ce.tag == "li" || is_block_tag(&ce.tag) => {
                    if let Some(first) = run_start.take() {
                        push_item(std::mem::take(&mut run).out.trim(), &first, tag);
                    }
                    let body = Tagged::join(self.block_or_container(ce, &cpath, t), "\n");
                    push_item(body, &cpath, t);
                }
                _ => {
                    run_start.get_or_insert(cpath.clone());
                    self.inline(child, &cpath, t, &mut run);
                }
            }
        }
        if let Some(first) = run_start {
            push_item(run.out.trim(), &first, tag);
        }
        (!items.is_empty()).then(|| Tagged::join(items, "\n"))
    }

    /// `li` renders its children; other block elements render as themselves.
    fn block_or_container(&self, e: &Element, path: &Path, tag: Tag) -> Vec<Tagged> {
        if e.tag == "li" {
            self.children_blocks(e, path, tag)
        } else {
            self.block(e, path, tag)
        }
    }

    /// Position of the item among the `li` siblings of the source tree, so
    /// numbering survives pruning.
    fn source_ordinal(&self, mat_path: &Path) -> usize {
        let Some(origin) = self.mat.origin(mat_path) else {
            return 0;
        };
        let (Some(parent), Some(idx)) = (origin.parent(), origin.last()) else {
            return 0;
        };
        let Some(parent) = self.source.get(&parent) else {
            return 0;
        };
        parent.children()[..idx]
            .iter()
            .filter(|c| c.is_tag("li"))
            .count()
    }

    fn table(&self, e: &Element, path: &Path, tag: Tag) -> Vec<Tagged> {
        let mut captions = Vec::new();
        let mut rows = Vec::new();
        self.collect_rows(e, path, tag, &mut captions, &mut rows);
        let mut out = captions;
        let rows: Vec<Vec<Tagged>> = rows.into_iter().filter(|r| !r.is_empty()).collect();
        if let Some(first) = rows.first() {
            let width = first.len();
            let mut lines = Vec::new();
            for (i, row) in rows.into_iter().enumerate() {
                let mut line = Tagged::default();
                line.push('|', tag);
                for cell in row {
                    line.push(' ', tag);
                    line.append(cell);
                    line.push_str(" |", tag);
                }
                lines.push(line);
                if i == 0 {
                    let mut sep = Tagged::default();
                    sep.push('|', tag);
                    for _ in 0..width {
                        sep.push_str(" --- |", tag);
                    }
                    lines.push(sep);
                }
            }
            out.push(Tagged::join(lines, "\n"));
        }
        out
    }

    fn collect_rows(
        &self,
        e: &Element,
        path: &Path,
        tag: Tag,
        captions: &mut Vec<Tagged>,
        rows: &mut Vec<Vec<Tagged>>,
    ) {
        for (i, child) in e.children.iter().enumerate() {
            let DocNode::Element(c) = child else { continue };
            let cpath = path.child(i);
            let t = self.tag_of(&cpath, tag);
            match c.tag.as_str() {
                "caption" => captions.extend(self.children_blocks(c, &cpath, t)),
                "tr" => {
                    let mut cells = Vec::new();
                    for (j, cell) in c.children.iter().enumerate() {
                        let DocNode::Element(ce) = cell else { continue };
                        if ce.tag != "td" && ce.tag != "th" {
                            continue;
                        }
                        let cp = cpath.child(j);
                        let ct = self.tag_of(&cp, t);
                        cells.push(escape_cell(self.flat_inline(ce, &cp, ct)));
                    }
                    rows.push(cells);
                }
                "thead" | "tbody" | "tfoot" => self.collect_rows(c, &cpath, t, captions, rows),
                _ => {}
            }
        }
    }

    /// All descendants rendered as one line of inline content.
    fn flat_inline(&self, e: &Element, path: &Path, tag: Tag) -> Tagged {
        let mut inl = Inline::default();
        for (i, c) in e.children.iter().enumerate() {
            let cp = path.child(i);
            let t = self.tag_of(&cp, tag);
            self.inline(c, &cp, t, &mut inl);
        }
        let mut out = inl.out.trim();
        for (c, _) in out.chars.iter_mut() {
            if *c == '\n' {
                *c = ' ';
            }
        }
        out
    }

    fn raw_text(&self, e: &Element, path: &Path, tag: Tag, out: &mut Tagged) {
        for (i, c) in e.children.iter().enumerate() {
            let cp = path.child(i);
            let t = self.tag_of(&cp, tag);
            match c {
                DocNode::Text(s) => out.push_str(s, t),
                DocNode::Element(ce) => self.raw_text(ce, &cp, t, out),
            }
        }
    }

    fn inline(&self, node: &DocNode, path: &Path, tag: Tag, buf: &mut Inline) {
        let e = match node {
            DocNode::Text(s) => return buf.text(s, tag),
            DocNode::Element(e) => e,
        };
        let child_run = |buf: &mut Inline| {
            for (i, c) in e.children.iter().enumerate() {
                let cp = path.child(i);
                let t = self.tag_of(&cp, tag);
                self.inline(c, &cp, t, buf);
            }
        };
        match e.tag.as_str() {
            "sentence-beg" | "sentence-end" => {}
            "br" => buf.hard_break(),
            "b" | "strong" | "em" | "i" | "code" | "a" => {
                let mut sub = Inline::default();
                child_run(&mut sub);
                let (open, close) = match e.tag.as_str() {
                    "b" | "strong" => ("**".to_string(), "**".to_string()),
                    "em" | "i" => ("*".to_string(), "*".to_string()),
                    "code" => ("`".to_string(), "`".to_string()),
                    _ => match e.attr("href") {
                        Some(href) => ("[".to_string(), format!("]({href})")),
                        None => (String::new(), String::new()),
                    },
                };
                buf.wrap(sub, &open, &close, tag);
            }
            "img" => {
                if let Some(src) = e.attr("src") {
                    let alt = e.attr("alt").unwrap_or("");
                    buf.raw(&format!("![{alt}]({src})"), tag);
                }
            }
            t if is_block_tag(t) => {
                buf.space();
                child_run(buf);
                buf.space();
            }
            _ => child_run(buf),
        }
    }
}

fn flush_paragraph(run: &mut Inline, out: &mut Vec<Tagged>) {
    let done = std::mem::take(run);
    let t = done.out.trim();
    if !t.is_blank() {
        out.push(t);
    }
}

fn escape_cell(cell: Tagged) -> Tagged {
    let mut out = Tagged::default();
    for (c, t) in cell.chars {
        if c == '|' {
            out.push('\\', t);
        }
        out.push(c, t);
    }
    out
}
