//! Flat TOML configuration with `SUBDOC_*` environment overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use subdoc::context::HtmlPolicy;
use subdoc::filter::{GenerativeProvider, HttpGenerator, Scripted, SelectAll, SelectNone};
use subdoc::index::{EmbeddingProvider, HashEmbedder, HttpEmbedder};
use subdoc::provider::Endpoint;

use crate::error::CliError;

pub const ENV_PREFIX: &str = "SUBDOC_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbedderKind {
    Hash,
    Http,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    SelectAll,
    SelectNone,
    Scripted,
    Http,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JudgeKind {
    Scripted,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub manifest: PathBuf,
    pub index_path: PathBuf,

    pub embedder: EmbedderKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embed_url: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embed_api_key: Option<String>,
    pub embed_dimension: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embed_max_tokens: Option<usize>,
    pub embed_batch_size: usize,
    pub embed_retries: usize,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator_url: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator_api_key: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator_script: Option<PathBuf>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub judge: Option<JudgeKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub judge_url: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub judge_api_key: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub judge_script: Option<PathBuf>,

    pub timeout_secs: u64,
    pub budget: usize,
    pub expand_budget: usize,
    pub k_init: usize,
    pub fill_threshold: f64,
    /// Comma-separated subset of title, headers, lists, tables; empty for none.
    pub policies: String,
    pub parallelism: usize,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            manifest: PathBuf::from("subdoc-manifest.json"),
            index_path: PathBuf::from("subdoc.index"),
            embedder: EmbedderKind::Hash,
            embed_url: None,
            embed_api_key: None,
            embed_dimension: 256,
            embed_max_tokens: None,
            embed_batch_size: 32,
            embed_retries: 2,
            generator: None,
            generator_url: None,
            generator_api_key: None,
            generator_script: None,
            judge: None,
            judge_url: None,
            judge_api_key: None,
            judge_script: None,
            timeout_secs: 60,
            budget: 1000,
            expand_budget: 1000,
            k_init: 10,
            fill_threshold: 0.8,
            policies: "title,headers,lists,tables".into(),
            parallelism: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    /// Taken verbatim from the environment.
    Text,
    /// Read as a TOML value, falling back to a string.
    Value,
}

/// Every key, with how an environment override is read.
const KEYS: &[(&str, Kind)] = &[
    ("manifest", Kind::Text),
    ("index_path", Kind::Text),
    ("embedder", Kind::Text),
    ("embed_url", Kind::Text),
    ("embed_api_key", Kind::Text),
    ("embed_dimension", Kind::Value),
    ("embed_max_tokens", Kind::Value),
    ("embed_batch_size", Kind::Value),
    ("embed_retries", Kind::Value),
    ("generator", Kind::Text),
    ("generator_url", Kind::Text),
    ("generator_api_key", Kind::Text),
    ("generator_script", Kind::Text),
    ("judge", Kind::Text),
    ("judge_url", Kind::Text),
    ("judge_api_key", Kind::Text),
    ("judge_script", Kind::Text),
    ("timeout_secs", Kind::Value),
    ("budget", Kind::Value),
    ("expand_budget", Kind::Value),
    ("k_init", Kind::Value),
    ("fill_threshold", Kind::Value),
    ("policies", Kind::Text),
    ("parallelism", Kind::Value),
    ("seed", Kind::Value),
];

fn env_value(raw: &str, kind: Kind) -> toml::Value {
    if kind == Kind::Value {
        if let Ok(mut t) = format!("v = {raw}").parse::<toml::Table>() {
            if let Some(v) = t.remove("v") {
                return v;
            }
        }
    }
    toml::Value::String(raw.to_string())
}

impl Config {
    /// Reads `file` (when given) and applies overrides from `env`.
    pub fn load(
        file: Option<&Path>,
        env: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, CliError> {
        let mut table = match file {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
            None => toml::Table::new(),
        };
        for (name, raw) in env {
            let Some(key) = name.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let key = key.to_ascii_lowercase();
            match KEYS.iter().find(|(k, _)| *k == key) {
                Some(&(k, kind)) => {
                    table.insert(k.to_string(), env_value(&raw, kind));
                }
                None => log::warn!("ignoring unknown setting {name}"),
            }
        }
        let cfg: Config = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads with the process environment.
    pub fn from_env(file: Option<&Path>) -> Result<Self, CliError> {
        Self::load(file, std::env::vars())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks what can be checked without touching providers.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.embed_dimension == 0 {
            return Err(CliError::Config("embed_dimension must be positive".into()));
        }
        if self.embed_batch_size == 0 {
            return Err(CliError::Config("embed_batch_size must be positive".into()));
        }
        if self.k_init == 0 {
            return Err(CliError::Config("k_init must be at least 1".into()));
        }
        if !(self.fill_threshold > 0.0 && self.fill_threshold <= 1.0) {
            return Err(CliError::Config("fill_threshold must be in (0, 1]".into()));
        }
        self.policy()?;
        Ok(())
    }

    pub fn policy(&self) -> Result<HtmlPolicy, CliError> {
        HtmlPolicy::from_names(&self.policies).map_err(|e| CliError::Config(e.to_string()))
    }

    fn endpoint(&self, what: &str, url: &Option<String>, key: &Option<String>) -> Result<Endpoint, CliError> {
        let url = url
            .as_deref()
            .filter(|u| !u.trim().is_empty())
            .ok_or_else(|| CliError::Config(format!("{what} is http but {what}_url is not set")))?;
        Ok(Endpoint {
            url: url.to_string(),
            api_key: key.clone(),
            timeout_secs: self.timeout_secs,
        })
    }

    pub fn embedder(&self) -> Result<Box<dyn EmbeddingProvider>, CliError> {
        Ok(match self.embedder {
            EmbedderKind::Hash => Box::new(HashEmbedder {
                max_input_tokens: self.embed_max_tokens,
                ..HashEmbedder::new(self.embed_dimension, self.seed)
            }),
            EmbedderKind::Http => Box::new(HttpEmbedder {
                endpoint: self.endpoint("embed", &self.embed_url, &self.embed_api_key)?,
                dimension: self.embed_dimension,
                max_input_tokens: self.embed_max_tokens,
            }),
        })
    }

    pub fn generator(&self) -> Result<Box<dyn GenerativeProvider>, CliError> {
        let kind = self
            .generator
            .ok_or_else(|| CliError::Config("filtering needs a generator setting".into()))?;
        Ok(match kind {
            GeneratorKind::SelectAll => Box::new(SelectAll),
            GeneratorKind::SelectNone => Box::new(SelectNone),
            GeneratorKind::Scripted => Box::new(load_script("generator", &self.generator_script)?),
            GeneratorKind::Http => Box::new(HttpGenerator {
                endpoint: self.endpoint("generator", &self.generator_url, &self.generator_api_key)?,
            }),
        })
    }

    pub fn judge(&self) -> Result<Box<dyn GenerativeProvider>, CliError> {
        let kind = self
            .judge
            .ok_or_else(|| CliError::Config("evaluation needs a judge setting".into()))?;
        Ok(match kind {
            JudgeKind::Scripted => Box::new(load_script("judge", &self.judge_script)?),
            JudgeKind::Http => Box::new(HttpGenerator {
                endpoint: self.endpoint("judge", &self.judge_url, &self.judge_api_key)?,
            }),
        })
    }
}

fn load_script(what: &str, path: &Option<PathBuf>) -> Result<Scripted, CliError> {
    let path = path
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("{what} is scripted but {what}_script is not set")))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
