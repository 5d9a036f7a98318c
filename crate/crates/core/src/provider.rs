//! Shared plumbing for model providers reached over HTTP.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProviderError {
    #[error("request to {endpoint} failed: {message}")]
    Transport { endpoint: String, message: String },
    #[error("{endpoint} answered HTTP {status}: {body}")]
    Status {
        endpoint: String,
        status: u16,
        body: String,
    },
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("provider failure: {0}")]
    Failed(String),
}

/// Where an HTTP provider lives and how to authenticate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endpoint {
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_timeout() -> u64 {
    60
}

impl Endpoint {
    pub fn new(url: impl Into<String>) -> Self {
        Endpoint {
            url: url.into(),
            api_key: None,
            timeout_secs: default_timeout(),
        }
    }

    /// POSTs `body` as JSON and decodes a JSON reply.
    pub fn post_json<B: Serialize, R: DeserializeOwned>(&self, body: &B) -> Result<R, ProviderError> {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(self.timeout_secs))
            .build();
        let mut req = agent.post(&self.url);
        if let Some(key) = &self.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        match req.send_json(body) {
            Ok(resp) => resp
                .into_json::<R>()
                .map_err(|e| ProviderError::Malformed(e.to_string())),
            Err(ureq::Error::Status(status, resp)) => Err(ProviderError::Status {
                endpoint: self.url.clone(),
                status,
                body: resp.into_string().unwrap_or_default(),
            }),
            Err(e) => Err(ProviderError::Transport {
                endpoint: self.url.clone(),
                message: e.to_string(),
            }),
        }
    }
}
