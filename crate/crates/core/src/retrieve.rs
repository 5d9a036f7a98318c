//! Query-time retrieval: hits from the same document are merged into one
//! view so shared context is rendered and paid for once, then views are
//! admitted in rank order under a size budget.

use std::collections::HashMap;

use serde::Serialize;

use crate::context::{Budget, HtmlPolicy, Policy};
use crate::corpus::{Corpus, DocId};
use crate::doctree::PathSet;
use crate::index::{EmbeddingProvider, Hit, IndexError, VectorIndex};
use crate::provider::ProviderError;
use crate::render::{render_markdown, truncate_to_budget};

pub const TRUNCATION_MARKER: &str = " [truncated]";

/// Same-document hits merged into one view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub doc_id: DocId,
    pub seed: PathSet,
    pub best_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AggregatedResult {
    pub doc_id: DocId,
    pub best_rank: usize,
    pub cost: usize,
    #[serde(rename = "source_paths")]
    pub merged_seed: PathSet,
    #[serde(skip)]
    pub ctx_paths: PathSet,
    #[serde(rename = "rendered_markdown")]
    pub rendered: String,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum RetrieveError {
    #[error("invalid retrieval request: {0}")]
    Invalid(String),
    #[error("embedding the query failed: {0}")]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("index refers to document {0}, which is not in the corpus")]
    MissingDocument(DocId),
}

#[derive(Debug, Clone)]
pub struct RetrieveOptions {
    pub budget: Budget,
    pub initial_k: usize,
    /// The prefix grows while admitted cost is below this share of the limit.
    pub fill_threshold: f64,
    pub policy: HtmlPolicy,
}

impl RetrieveOptions {
    pub fn new(budget: Budget) -> Self {
        RetrieveOptions {
            budget,
            initial_k: 10,
            fill_threshold: 0.8,
            policy: HtmlPolicy::default(),
        }
    }
}

/// Groups hits by document in order of first appearance, uniting seeds.
pub fn merge_candidates(hits: &[Hit<'_>]) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = Vec::new();
    let mut slot: HashMap<&DocId, usize> = HashMap::new();
    for h in hits {
        match slot.get(&h.entry.doc_id) {
            Some(&i) => {
                let c = &mut out[i];
                c.seed.extend(h.entry.seed.iter().cloned());
                c.best_rank = c.best_rank.min(h.rank);
            }
            None => {
                slot.insert(&h.entry.doc_id, out.len());
                out.push(Candidate {
                    doc_id: h.entry.doc_id.clone(),
                    seed: h.entry.seed.clone(),
                    best_rank: h.rank,
                });
            }
        }
    }
    out.sort_by_key(|c| c.best_rank);
    out
}

/// Contextualizes and renders one merged candidate.
pub fn aggregate(
    corpus: &Corpus,
    cand: Candidate,
    policy: &HtmlPolicy,
    budget: &Budget,
) -> Result<AggregatedResult, RetrieveError> {
    let ann = corpus
        .get(&cand.doc_id)
        .ok_or_else(|| RetrieveError::MissingDocument(cand.doc_id.clone()))?;
    let ctx_paths = policy.enrich(ann.doc(), &cand.seed);
    let rendered = render_markdown(ann.doc(), &ctx_paths);
    Ok(AggregatedResult {
        cost: budget.sizer.size(&rendered),
        doc_id: cand.doc_id,
        best_rank: cand.best_rank,
        merged_seed: cand.seed,
        ctx_paths,
        rendered,
        truncated: false,
    })
}

/// Greedy admission in the given (rank) order while the running total
/// fits. A first result that alone exceeds the limit is admitted by itself,
/// truncated; later oversize results are skipped.
pub fn admit(results: Vec<AggregatedResult>, budget: &Budget) -> Vec<AggregatedResult> {
    let mut out = Vec::new();
    let mut total = 0usize;
    for (i, mut r) in results.into_iter().enumerate() {
        if total + r.cost <= budget.limit {
            total += r.cost;
            out.push(r);
        } else if i == 0 {
            r.rendered = truncate_to_budget(&r.rendered, budget.limit, budget.sizer.as_ref(), TRUNCATION_MARKER);
            r.cost = budget.sizer.size(&r.rendered);
            r.truncated = true;
            out.push(r);
            break;
        }
    }
    out
}

/// Retrieves the budgeted, document-aggregated results for `query`.
///
/// Starting from the `initial_k` best sentences, the prefix is doubled
/// while the admitted cost stays under `fill_threshold` of the limit and
/// unseen entries remain.
pub fn retrieve(
    index: &VectorIndex,
    corpus: &Corpus,
    provider: &dyn EmbeddingProvider,
    query: &str,
    opts: &RetrieveOptions,
) -> Result<Vec<AggregatedResult>, RetrieveError> {
    if opts.budget.limit == 0 {
        return Err(RetrieveError::Invalid("budget limit must be positive".into()));
    }
    if opts.initial_k == 0 {
        return Err(RetrieveError::Invalid("initial k must be at least 1".into()));
    }
    if index.is_empty() {
        return Ok(Vec::new());
    }
    let qv = provider
        .embed(&[query.to_string()])?
        .pop()
        .ok_or_else(|| ProviderError::Malformed("no vector for the query".into()))?;

    let n = index.len();
    let mut k = opts.initial_k.min(n);
    let target = opts.fill_threshold * opts.budget.limit as f64;
    loop {
        let hits = index.search(&qv, k)?;
        let results = merge_candidates(&hits)
            .into_iter()
            .map(|c| aggregate(corpus, c, &opts.policy, &opts.budget))
            .collect::<Result<Vec<_>, _>>()?;
        let admitted = admit(results, &opts.budget);
        let cost: usize = admitted.iter().map(|r| r.cost).sum();
        if (cost as f64) < target && k < n {
            k = (k * 2).min(n);
            continue;
        }
        return Ok(admitted);
    }
}
