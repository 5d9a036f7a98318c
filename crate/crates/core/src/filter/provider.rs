use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::provider::{Endpoint, ProviderError};

/// A text-completion model.
pub trait GenerativeProvider: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError>;
}

impl<F> GenerativeProvider for F
where
    F: Fn(&str) -> Result<String, ProviderError> + Send + Sync,
{
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        self(prompt)
    }
}

#[derive(Serialize)]
struct CompleteRequest<'a> {
    prompt: &'a str,
}

#[derive(Deserialize)]
struct CompleteResponse {
    text: String,
}

/// Generator behind an HTTP endpoint taking `{"prompt": ...}` and
/// answering `{"text": ...}`.
#[derive(Debug, Clone)]
pub struct HttpGenerator {
    pub endpoint: Endpoint,
}

impl GenerativeProvider for HttpGenerator {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        let resp: CompleteResponse = self.endpoint.post_json(&CompleteRequest { prompt })?;
        Ok(resp.text)
    }
}

/// Opening `<lab_N>` tags in the excerpt part of an evidence prompt.
fn excerpt_labels(prompt: &str) -> Vec<String> {
    let excerpt = prompt.rsplit_once("EXCERPT:\n").map_or(prompt, |(_, e)| e);
    let mut out: Vec<String> = Vec::new();
    for (i, _) in excerpt.match_indices("<lab_") {
        let digits: String = excerpt[i + 5..].chars().take_while(char::is_ascii_digit).collect();
        if !digits.is_empty() && excerpt[i + 5 + digits.len()..].starts_with('>') {
            let tag = format!("<lab_{digits}>");
            if !out.contains(&tag) {
                out.push(tag);
            }
        }
    }
    out
}

/// Selects every label shown in the excerpt.
#[derive(Debug, Clone, Copy, Default)]
pub struct SelectAll;

impl GenerativeProvider for SelectAll {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        Ok(serde_json::to_string(&excerpt_labels(prompt)).expect("strings serialize"))
    }
}

/// Never selects anything.
#[derive(Debug, Clone, Copy, Default)]
pub struct SelectNone;

impl GenerativeProvider for SelectNone {
    fn complete(&self, _prompt: &str) -> Result<String, ProviderError> {
        Ok("[]".to_string())
    }
}

/// Hex SHA-256 of a prompt, the key of scripted transcripts.
pub fn prompt_key(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// Replays canned responses keyed by [`prompt_key`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scripted {
    pub responses: HashMap<String, String>,
    /// Answer for prompts without a canned response; an error when unset.
    #[serde(default)]
    pub fallback: Option<String>,
}

impl Scripted {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, prompt: &str, response: impl Into<String>) -> Self {
        self.responses.insert(prompt_key(prompt), response.into());
        self
    }
}

impl GenerativeProvider for Scripted {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        let key = prompt_key(prompt);
        self.responses
            .get(&key)
            .or(self.fallback.as_ref())
            .cloned()
            .ok_or_else(|| ProviderError::Failed(format!("no scripted response for prompt {key}")))
    }
}
