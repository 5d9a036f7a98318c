use std::hash::Hasher;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use crate::provider::{Endpoint, ProviderError};

/// Maps texts to fixed-dimension vectors.
pub trait EmbeddingProvider: Send + Sync {
    fn dimension(&self) -> usize;

    /// Longest input, in whitespace tokens, the provider accepts.
    fn max_input_tokens(&self) -> Option<usize> {
        None
    }

    fn embed(&self, inputs: &[String]) -> Result<Vec<Vec<f32>>, ProviderError>;
}

/// Offline embedder: signed feature hashing of lowercased word unigrams and
/// bigrams, L2-normalized. Equal texts give equal vectors; texts sharing
/// words score higher than unrelated ones.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    pub dimension: usize,
    pub seed: u64,
    pub max_input_tokens: Option<usize>,
}

impl HashEmbedder {
    pub fn new(dimension: usize, seed: u64) -> Self {
        HashEmbedder {
            dimension: dimension.max(1),
            seed,
            max_input_tokens: None,
        }
    }

    fn hash(&self, feature: &str) -> u64 {
        let mut h = FnvHasher::with_key(self.seed ^ 0xcbf2_9ce4_8422_2325);
        h.write(feature.as_bytes());
        h.finish()
    }

    fn add(&self, v: &mut [f32], feature: &str, weight: f32) {
        let h = self.hash(feature);
        let i = (h % self.dimension as u64) as usize;
        v[i] += if h >> 63 == 1 { -weight } else { weight };
    }

    pub fn embed_one(&self, text: &str) -> Vec<f32> {
        let words: Vec<String> = text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .map(str::to_lowercase)
            .collect();
        let mut v = vec![0f32; self.dimension];
        for w in &words {
            self.add(&mut v, w, 1.0);
        }
        for pair in words.windows(2) {
            self.add(&mut v, &format!("{} {}", pair[0], pair[1]), 0.5);
        }
        let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
        if norm == 0.0 {
            // no words: a fixed direction so that similarity stays defined
            v[(self.hash("") % self.dimension as u64) as usize] = 1.0;
        } else {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn max_input_tokens(&self) -> Option<usize> {
        self.max_input_tokens
    }

    fn embed(&self, inputs: &[String]) -> Result<Vec<Vec<f32>>, ProviderError> {
        Ok(inputs.iter().map(|t| self.embed_one(t)).collect())
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    inputs: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f32>>,
}

/// Embedder behind an HTTP endpoint taking `{"inputs": [...]}` and
/// answering `{"vectors": [[...], ...]}`.
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    pub endpoint: Endpoint,
    pub dimension: usize,
    pub max_input_tokens: Option<usize>,
}

impl EmbeddingProvider for HttpEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn max_input_tokens(&self) -> Option<usize> {
        self.max_input_tokens
    }

    fn embed(&self, inputs: &[String]) -> Result<Vec<Vec<f32>>, ProviderError> {
        let resp: EmbedResponse = self.endpoint.post_json(&EmbedRequest { inputs })?;
        if resp.vectors.len() != inputs.len() {
            return Err(ProviderError::Malformed(format!(
                "{} vectors for {} inputs",
                resp.vectors.len(),
                inputs.len()
            )));
        }
        Ok(resp.vectors)
    }
}
