//! Sentence-seeded embedding index with exhaustive cosine search.

mod embed;
mod store;

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context::{HtmlPolicy, Policy};
use crate::corpus::{Corpus, DocId};
use crate::doctree::PathSet;
use crate::provider::ProviderError;
use crate::render::render_markdown;

pub use embed::{EmbeddingProvider, HashEmbedder, HttpEmbedder};
pub use store::{write_atomic, FORMAT_VERSION};

/// One indexed sentence. `seed` is the bare sentence path set; context is
/// added only to the text that was embedded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub doc_id: DocId,
    pub seed: PathSet,
    #[serde(skip)]
    pub vector: Vec<f32>,
    pub rendered: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Cosine,
}

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error("embedding batch {batch} failed after {attempts} attempts: {source}")]
    Provider {
        batch: usize,
        inputs: Vec<String>,
        attempts: usize,
        #[source]
        source: ProviderError,
    },
    #[error("expected vectors of dimension {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("index format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u8, expected: u8 },
    #[error("corrupt index: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct IndexOptions {
    pub batch_size: usize,
    /// Extra attempts per failed batch.
    pub retries: usize,
    pub parallelism: usize,
    pub policy: HtmlPolicy,
}

impl Default for IndexOptions {
    fn default() -> Self {
        IndexOptions {
            batch_size: 32,
            retries: 2,
            parallelism: 4,
            policy: HtmlPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    pub dimension: usize,
    pub metric: Metric,
    pub entries: Vec<IndexEntry>,
}

/// A search result; `rank` counts from 1.
#[derive(Debug, Clone, Copy)]
pub struct Hit<'a> {
    pub rank: usize,
    pub score: f32,
    pub entry: &'a IndexEntry,
}

fn normalize(v: &mut [f32]) {
    let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

fn dot(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Keeps the first `limit` whitespace tokens of `text`.
fn truncate_tokens(text: &str, limit: usize) -> Option<String> {
    let mut words = text.split_whitespace();
    let kept: Vec<&str> = words.by_ref().take(limit).collect();
    words.next().map(|_| kept.join(" "))
}

impl VectorIndex {
    pub fn empty(dimension: usize) -> Self {
        VectorIndex {
            dimension,
            metric: Metric::Cosine,
            entries: Vec::new(),
        }
    }

    /// Embeds every body sentence of every document, rendered together with
    /// its global context.
    pub fn build(
        corpus: &Corpus,
        provider: &dyn EmbeddingProvider,
        opts: &IndexOptions,
    ) -> Result<Self, IndexError> {
        let mut entries = Vec::new();
        for (id, ann) in corpus.iter() {
            for s in ann.sentences().iter().filter(|s| !s.in_heading) {
                let ctx = opts.policy.enrich(ann.doc(), &s.paths);
                let rendered = render_markdown(ann.doc(), &ctx);
                if rendered.trim().is_empty() {
                    continue;
                }
                entries.push(IndexEntry {
                    doc_id: id.clone(),
                    seed: s.paths.clone(),
                    vector: Vec::new(),
                    rendered,
                });
            }
        }

        let inputs: Vec<String> = entries
            .iter()
            .map(|e| match provider.max_input_tokens().and_then(|n| truncate_tokens(&e.rendered, n)) {
                Some(cut) => {
                    log::warn!("truncating embedding input for {} to the provider limit", e.doc_id);
                    cut
                }
                None => e.rendered.clone(),
            })
            .collect();
        let batches: Vec<&[String]> = inputs.chunks(opts.batch_size.max(1)).collect();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.parallelism.max(1))
            .build()
            .map_err(|e| IndexError::Io(std::io::Error::other(e)))?;
        let embedded: Vec<Result<Vec<Vec<f32>>, IndexError>> = pool.install(|| {
            batches
                .par_iter()
                .enumerate()
                .map(|(i, batch)| embed_batch(provider, i, batch, opts.retries))
                .collect()
        });

        let dimension = provider.dimension();
        let vectors = embedded.into_iter().collect::<Result<Vec<_>, _>>()?;
        for (entry, mut v) in entries.iter_mut().zip(vectors.into_iter().flatten()) {
            if v.len() != dimension {
                return Err(IndexError::DimensionMismatch {
                    expected: dimension,
                    found: v.len(),
                });
            }
            normalize(&mut v);
            entry.vector = v;
        }
        Ok(VectorIndex {
            dimension,
            metric: Metric::Cosine,
            entries,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Top `k` entries by cosine similarity, ties broken by document id
    /// and then seed.
    pub fn search(&self, query: &[f32], k: usize) -> Result<Vec<Hit<'_>>, IndexError> {
        if query.len() != self.dimension {
            return Err(IndexError::DimensionMismatch {
                expected: self.dimension,
                found: query.len(),
            });
        }
        if k == 0 {
            return Ok(Vec::new());
        }
        let mut q = query.to_vec();
        normalize(&mut q);
        let mut scored: Vec<(f32, &IndexEntry)> =
            self.entries.iter().map(|e| (dot(&q, &e.vector), e)).collect();
        let order = |a: &(f32, &IndexEntry), b: &(f32, &IndexEntry)| -> Ordering {
            b.0.total_cmp(&a.0)
                .then_with(|| a.1.doc_id.cmp(&b.1.doc_id))
                .then_with(|| a.1.seed.cmp(&b.1.seed))
        };
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, order);
            scored.truncate(k);
        }
        scored.sort_by(order);
        Ok(scored
            .into_iter()
            .enumerate()
            .map(|(i, (score, entry))| Hit {
                rank: i + 1,
                score,
                entry,
            })
            .collect())
    }
}

fn embed_batch(
    provider: &dyn EmbeddingProvider,
    batch: usize,
    inputs: &[String],
    retries: usize,
) -> Result<Vec<Vec<f32>>, IndexError> {
    let mut attempt = 0;
    loop {
        attempt += 1;
        match provider.embed(inputs) {
            Ok(v) if v.len() == inputs.len() => return Ok(v),
            Ok(v) => {
                return Err(IndexError::Provider {
                    batch,
                    inputs: inputs.to_vec(),
                    attempts: attempt,
                    source: ProviderError::Malformed(format!(
                        "{} vectors for {} inputs",
                        v.len(),
                        inputs.len()
                    )),
                })
            }
            Err(e) if attempt > retries => {
                return Err(IndexError::Provider {
                    batch,
                    inputs: inputs.to_vec(),
                    attempts: attempt,
                    source: e,
                })
            }
            Err(e) => log::warn!("embedding batch {batch} failed (attempt {attempt}): {e}"),
        }
    }
}

#[cfg(test)]
mod tests;
