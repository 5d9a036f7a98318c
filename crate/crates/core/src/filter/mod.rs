//! Contextual filtering: each candidate is grown with local context, shown
//! to a generative model with its citable units labeled, and the labels
//! the model picks are mapped back to path-addressed citations.

mod provider;

use std::collections::{BTreeSet, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context::{expand_local_with, Budget, HtmlPolicy, Policy};
use crate::corpus::{Corpus, DocId};
use crate::doctree::{DocNode, Path, PathSet};
use crate::prompt::{evidence_selector_prompt, PromptError};
use crate::render::{is_block_tag, label_name, render_labeled, RenderError, RenderedView};
use crate::retrieve::AggregatedResult;
use crate::segment::{heading_level, AnnotatedDoc};

pub use provider::{
    prompt_key, GenerativeProvider, HttpGenerator, Scripted, SelectAll, SelectNone,
};

/// A selected citable unit, addressed in its source document.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Citation {
    pub doc_id: DocId,
    pub paths: PathSet,
}

/// What to filter: a document and a selection in it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterCandidate {
    pub doc_id: DocId,
    pub paths: PathSet,
}

impl From<&AggregatedResult> for FilterCandidate {
    fn from(r: &AggregatedResult) -> Self {
        FilterCandidate {
            doc_id: r.doc_id.clone(),
            paths: r.merged_seed.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    MissingDocument { doc_id: DocId },
    Provider { doc_id: DocId, message: String },
    Unparseable { doc_id: DocId, response: String },
    UnknownLabels { doc_id: DocId, labels: Vec<String> },
    Render { doc_id: DocId, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FilterOutcome {
    pub citations: Vec<Citation>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, thiserror::Error)]
pub enum FilterError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

#[derive(Debug, Clone)]
pub struct FilterOptions {
    pub expand_budget: Budget,
    /// Calls in flight at once.
    pub parallelism: usize,
    /// Extra calls for a view whose reply has no JSON array.
    pub parse_retries: usize,
    pub policy: HtmlPolicy,
}

impl Default for FilterOptions {
    fn default() -> Self {
        FilterOptions {
            expand_budget: Budget::new(1000),
            parallelism: 4,
            parse_retries: 1,
            policy: HtmlPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no JSON array in the response")]
pub struct NoJsonArray;

/// Labels accepted from a reply, in label order, and entries rejected.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelSelection {
    pub labels: BTreeSet<LabelNumber>,
    pub rejected: Vec<String>,
}

/// Orders labels by their number rather than as strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelNumber(pub usize);

impl LabelNumber {
    pub fn name(self) -> String {
        label_name(self.0)
    }
}

fn first_json_array(raw: &str) -> Option<Vec<serde_json::Value>> {
    raw.match_indices('[').find_map(|(i, _)| {
        let mut de = serde_json::Deserializer::from_str(&raw[i..]).into_iter::<serde_json::Value>();
        match de.next() {
            Some(Ok(serde_json::Value::Array(items))) => Some(items),
            _ => None,
        }
    })
}

fn opening_tag_number(s: &str) -> Option<usize> {
    let digits = s.strip_prefix("<lab_")?.strip_suffix('>')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
        return None;
    }
    digits.parse().ok()
}

/// Reads the first JSON array in `raw` (code fences and prose around it
/// are ignored) and keeps the entries that are exactly `<lab_N>` for a
/// known `N`.
pub fn parse_label_response(raw: &str, known: &BTreeSet<usize>) -> Result<LabelSelection, NoJsonArray> {
    let items = first_json_array(raw).ok_or(NoJsonArray)?;
    let mut out = LabelSelection::default();
    for item in items {
        match item.as_str().and_then(opening_tag_number) {
            Some(n) if known.contains(&n) => {
                out.labels.insert(LabelNumber(n));
            }
            _ => out.rejected.push(match item {
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            }),
        }
    }
    Ok(out)
}

/// Citable units of `doc` inside `sel`: the shown part of every body
/// sentence, then visible text outside sentences grouped by its nearest
/// block ancestor.
pub fn citable_units(ann: &AnnotatedDoc, sel: &PathSet) -> Vec<PathSet> {
    let doc = ann.doc();
    let visible = doc.complete(sel);
    let mut units: Vec<PathSet> = Vec::new();
    let mut covered: HashSet<&Path> = HashSet::new();
    for s in ann.sentences() {
        covered.extend(s.paths.iter());
        if s.in_heading {
            continue;
        }
        let shown = s.paths.intersection(&visible);
        let has_text = shown
            .iter()
            .any(|q| doc.get(q).and_then(DocNode::as_text).is_some_and(|t| !t.trim().is_empty()));
        if has_text {
            units.push(shown);
        }
    }

    let mut loose: Vec<(Path, PathSet)> = Vec::new();
    for q in visible.iter() {
        let Some(text) = doc.get(q).and_then(DocNode::as_text) else {
            continue;
        };
        if text.trim().is_empty() || covered.contains(q) {
            continue;
        }
        let chain: Vec<Path> = q.ancestors().collect();
        let in_heading = chain.iter().any(|a| {
            doc.get(a)
                .and_then(DocNode::tag)
                .is_some_and(|t| heading_level(t).is_some() || t == "title")
        });
        if in_heading {
            continue;
        }
        let block = chain
            .iter()
            .find(|a| doc.get(a).and_then(DocNode::tag).is_some_and(is_block_tag))
            .cloned()
            .unwrap_or_default();
        let mut unit: PathSet = chain
            .iter()
            .filter(|a| a.len() > block.len())
            .cloned()
            .collect();
        unit.insert(q.clone());
        match loose.iter_mut().find(|(b, _)| *b == block) {
            Some((_, u)) => u.extend(unit),
            None => loose.push((block, unit)),
        }
    }
    units.extend(loose.into_iter().map(|(_, u)| u));
    units
}

/// One candidate turned into a labeled view.
#[derive(Debug, Clone)]
pub struct PreparedView {
    pub doc_id: DocId,
    pub expanded: PathSet,
    pub view: RenderedView,
    pub prompt: String,
}

/// Expands a candidate and renders the labeled prompt for it.
pub fn prepare_view(
    corpus: &Corpus,
    cand: &FilterCandidate,
    query: &str,
    opts: &FilterOptions,
) -> Result<Option<PreparedView>, Diagnostic> {
    let ann = corpus.get(&cand.doc_id).ok_or_else(|| Diagnostic::MissingDocument {
        doc_id: cand.doc_id.clone(),
    })?;
    let expanded = expand_local_with(ann, &cand.paths, &opts.expand_budget, &opts.policy);
    let shown = opts.policy.enrich(ann.doc(), &expanded);
    let units = citable_units(ann, &expanded);
    let view = render_labeled(ann.doc(), &shown, &units).map_err(|e: RenderError| Diagnostic::Render {
        doc_id: cand.doc_id.clone(),
        message: e.to_string(),
    })?;
    if view.labels.is_empty() {
        return Ok(None);
    }
    let prompt = evidence_selector_prompt(&view.text, query).expect("query checked by the caller");
    Ok(Some(PreparedView {
        doc_id: cand.doc_id.clone(),
        expanded,
        view,
        prompt,
    }))
}

fn run_view(
    corpus: &Corpus,
    cand: &FilterCandidate,
    query: &str,
    provider: &dyn GenerativeProvider,
    opts: &FilterOptions,
) -> (Vec<Citation>, Vec<Diagnostic>) {
    let prepared = match prepare_view(corpus, cand, query, opts) {
        Ok(Some(p)) => p,
        Ok(None) => return (Vec::new(), Vec::new()),
        Err(d) => return (Vec::new(), vec![d]),
    };
    let known: BTreeSet<usize> = (1..=prepared.view.labels.len()).collect();
    let doc_id = prepared.doc_id.clone();
    let mut diags = Vec::new();
    for _ in 0..=opts.parse_retries {
        let raw = match provider.complete(&prepared.prompt) {
            Ok(raw) => raw,
            Err(e) => {
                diags.push(Diagnostic::Provider {
                    doc_id,
                    message: e.to_string(),
                });
                return (Vec::new(), diags);
            }
        };
        match parse_label_response(&raw, &known) {
            Ok(sel) => {
                if !sel.rejected.is_empty() {
                    diags.push(Diagnostic::UnknownLabels {
                        doc_id: doc_id.clone(),
                        labels: sel.rejected,
                    });
                }
                let cites = sel
                    .labels
                    .iter()
                    .map(|n| Citation {
                        doc_id: doc_id.clone(),
                        paths: prepared.view.labels[n.0 - 1].paths.clone(),
                    })
                    .collect();
                return (cites, diags);
            }
            Err(NoJsonArray) => diags.push(Diagnostic::Unparseable {
                doc_id: doc_id.clone(),
                response: raw,
            }),
        }
    }
    (Vec::new(), diags)
}

/// Runs every candidate through the model and unites the selected
/// citations, in candidate order, without duplicates.
pub fn filter_citations(
    corpus: &Corpus,
    candidates: &[FilterCandidate],
    query: &str,
    provider: &dyn GenerativeProvider,
    opts: &FilterOptions,
) -> Result<FilterOutcome, FilterError> {
    if query.trim().is_empty() {
        return Err(PromptError::EmptyQuery.into());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.parallelism.max(1))
        .build()
        .expect("thread pool");
    let per_view: Vec<(Vec<Citation>, Vec<Diagnostic>)> = pool.install(|| {
        candidates
            .par_iter()
            .map(|c| run_view(corpus, c, query, provider, opts))
            .collect()
    });
    let mut out = FilterOutcome::default();
    let mut seen = HashSet::new();
    for (cites, diags) in per_view {
        for c in cites {
            if seen.insert(c.clone()) {
                out.citations.push(c);
            }
        }
        out.diagnostics.extend(diags);
    }
    Ok(out)
}
