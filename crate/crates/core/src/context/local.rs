use std::sync::Arc;

use super::global::{innermost_header_level, HtmlPolicy, Policy};
use crate::doctree::{Path, PathSet};
use crate::render::{render_markdown, Sizer, WhitespaceSizer};
use crate::segment::{heading_level, AnnotatedDoc};

/// A size limit on the rendered, context-enriched selection.
#[derive(Clone)]
pub struct Budget {
    pub limit: usize,
    pub sizer: Arc<dyn Sizer>,
}

impl Budget {
    /// A limit counted in whitespace tokens.
    pub fn new(limit: usize) -> Self {
        Budget {
            limit,
            sizer: Arc::new(WhitespaceSizer),
        }
    }

    pub fn with_sizer(limit: usize, sizer: Arc<dyn Sizer>) -> Self {
        Budget { limit, sizer }
    }
}

impl std::fmt::Debug for Budget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Budget").field("limit", &self.limit).finish()
    }
}

/// Size of the selection once the global context is added.
pub fn context_cost(ann: &AnnotatedDoc, paths: &PathSet, policy: &HtmlPolicy, sizer: &dyn Sizer) -> usize {
    let enriched = policy.enrich(ann.doc(), paths);
    sizer.size(&render_markdown(ann.doc(), &enriched))
}

/// The growth chain of `seed`: each entry is the selection after one more
/// step. It depends only on the document and the seed, never on a budget.
///
/// Round 1 completes sentences the seed only partly covers. Round 2 adds
/// the whole block of every touched sentence. Round 3 adds neighbouring
/// body sentences of the same section, nearest first, following sentences
/// before preceding ones at equal distance.
pub fn expansion_steps(ann: &AnnotatedDoc, seed: &PathSet) -> Vec<PathSet> {
    let mut steps = Vec::new();
    let mut cur = seed.clone();
    let push = |cur: &mut PathSet, add: &PathSet, steps: &mut Vec<PathSet>| {
        if !add.is_subset(cur) {
            cur.extend(add.iter().cloned());
            steps.push(cur.clone());
        }
    };

    let snapshot = cur.clone();
    for s in ann.sentences() {
        if !s.paths.is_disjoint(&snapshot) && !s.paths.is_subset(&snapshot) {
            push(&mut cur, &s.paths, &mut steps);
        }
    }

    let snapshot = cur.clone();
    for s in ann.sentences() {
        if !s.block.is_disjoint(&snapshot) {
            push(&mut cur, &s.block, &mut steps);
        }
    }

    for j in neighbours(ann, &cur) {
        push(&mut cur, &ann.sentences()[j].paths, &mut steps);
    }
    steps
}

/// Indices of body sentences near the anchors (body sentences touching
/// `sel`), within the section spanned by the anchors, in visiting order.
fn neighbours(ann: &AnnotatedDoc, sel: &PathSet) -> Vec<usize> {
    let sents = ann.sentences();
    let anchors: Vec<usize> = (0..sents.len())
        .filter(|&i| !sents[i].in_heading && !sents[i].paths.is_disjoint(sel))
        .collect();
    let (Some(&first), Some(&last)) = (anchors.first(), anchors.last()) else {
        return Vec::new();
    };
    let doc = ann.doc();
    // a header outranking or matching every anchor's section closes the region
    let bound = anchors
        .iter()
        .map(|&a| innermost_header_level(doc, sents[a].id.begin_path()).unwrap_or(6))
        .min()
        .unwrap_or(6);
    let boundaries: Vec<Path> = doc
        .walk()
        .into_iter()
        .filter(|(_, n)| n.tag().and_then(heading_level).is_some_and(|l| l <= bound))
        .map(|(p, _)| p)
        .collect();
    let lo = boundaries.iter().rfind(|h| *h < sents[first].id.begin_path());
    let hi = boundaries.iter().find(|h| *h > sents[last].id.begin_path());
    let in_region = |p: &Path| lo.is_none_or(|h| p > h) && hi.is_none_or(|h| p < h);

    let mut cands: Vec<(usize, u8, usize)> = (0..sents.len())
        .filter(|&j| !sents[j].in_heading && anchors.binary_search(&j).is_err())
        .filter(|&j| in_region(sents[j].id.begin_path()))
        .map(|j| {
            let dist = anchors.iter().map(|&a| a.abs_diff(j)).min().unwrap_or(usize::MAX);
            let after = anchors.iter().any(|&a| a < j && j - a == dist);
            (dist, u8::from(!after), j)
        })
        .collect();
    cands.sort_unstable();
    cands.into_iter().map(|(_, _, j)| j).collect()
}

/// Grows `seed` while the enriched rendering stays within the budget.
///
/// Steps are tried in the order of [`expansion_steps`]; growth stops at the
/// first step that would exceed the limit, so a larger limit always yields
/// a superset. A seed that is already over the limit is returned as is.
pub fn expand_local(ann: &AnnotatedDoc, seed: &PathSet, budget: &Budget) -> PathSet {
    expand_local_with(ann, seed, budget, &HtmlPolicy::default())
}

pub fn expand_local_with(
    ann: &AnnotatedDoc,
    seed: &PathSet,
    budget: &Budget,
    policy: &HtmlPolicy,
) -> PathSet {
    let fits = |s: &PathSet| context_cost(ann, s, policy, budget.sizer.as_ref()) <= budget.limit;
    if !fits(seed) {
        return seed.clone();
    }
    let mut best = seed.clone();
    for step in expansion_steps(ann, seed) {
        if !fits(&step) {
            break;
        }
        best = step;
    }
    best
}
