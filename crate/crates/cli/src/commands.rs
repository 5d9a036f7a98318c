//! The four subcommands as library functions returning serializable reports.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use subdoc::context::Budget;
use subdoc::corpus::{Corpus, DocId};
use subdoc::doctree::{parse_html, PathSet};
use subdoc::filter::{filter_citations, Diagnostic, FilterCandidate, FilterOptions, GenerativeProvider};
use subdoc::index::{write_atomic, IndexOptions, VectorIndex};
use subdoc::prompt::{format_ratio, judge_prompt, parse_verdict, Verdict};
use subdoc::render::render_markdown;
use subdoc::retrieve::{retrieve, AggregatedResult, RetrieveOptions};
use subdoc::segment::{segment_sentences, AnnotatedDoc, RuleSplitter};

use crate::config::Config;
use crate::error::CliError;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub corpus_dir: PathBuf,
    pub documents: Vec<ManifestDoc>,
    pub errors: Vec<FileError>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestDoc {
    pub doc_id: DocId,
    /// Relative to the corpus directory.
    pub file: PathBuf,
    pub sentences: usize,
    pub block_leaves: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileError {
    pub file: PathBuf,
    pub message: String,
}

fn is_html(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("html") || e.eq_ignore_ascii_case("htm"))
}

fn read_document(path: &Path) -> Result<AnnotatedDoc, String> {
    let bytes = fs::read(path).map_err(|e| e.to_string())?;
    let doc = parse_html(&bytes).map_err(|e| e.to_string())?;
    segment_sentences(&doc, &RuleSplitter).map_err(|e| e.to_string())
}

/// Parses and segments every `.html`/`.htm` file directly under `dir`, in
/// file-name order. A file that cannot be read or parsed is listed under
/// `errors` and the rest are still ingested.
pub fn ingest(dir: &Path) -> Result<Manifest, CliError> {
    let dir = &fs::canonicalize(dir).map_err(|e| CliError::io(dir, e))?;
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| is_html(p))
        .collect();
    files.sort();

    let mut manifest = Manifest {
        version: MANIFEST_VERSION,
        corpus_dir: dir.to_path_buf(),
        documents: Vec::new(),
        errors: Vec::new(),
    };
    for path in files {
        let file = PathBuf::from(path.file_name().expect("directory entries have names"));
        let stem = path.file_stem().and_then(|s| s.to_str()).map(str::to_string);
        let outcome = match stem {
            None => Err("file name is not valid UTF-8".to_string()),
            Some(id) if manifest.documents.iter().any(|d| d.doc_id.as_str() == id) => {
                Err(format!("document id {id} is already taken by another file"))
            }
            Some(id) => read_document(&path).map(|ann| (id, ann)),
        };
        match outcome {
            Ok((id, ann)) => manifest.documents.push(ManifestDoc {
                doc_id: DocId::new(id),
                file,
                sentences: ann.sentences().len(),
                block_leaves: ann.block_leaves().len(),
            }),
            Err(message) => {
                log::warn!("skipping {}: {message}", path.display());
                manifest.errors.push(FileError { file, message });
            }
        }
    }
    Ok(manifest)
}

fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("reports serialize");
    out.push(b'\n');
    out
}

pub fn write_manifest(manifest: &Manifest, path: &Path) -> Result<(), CliError> {
    write_atomic(path, &to_json_bytes(manifest)).map_err(|e| CliError::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| CliError::io(path, e))?;
    if manifest.version != MANIFEST_VERSION {
        return Err(CliError::Data(format!(
            "{}: manifest version {} is not supported (expected {MANIFEST_VERSION})",
            path.display(),
            manifest.version
        )));
    }
    Ok(manifest)
}

/// Re-reads the documents listed in a manifest.
pub fn load_corpus(manifest: &Manifest) -> Result<Corpus, CliError> {
    let mut corpus = Corpus::new();
    for d in &manifest.documents {
        let path = manifest.corpus_dir.join(&d.file);
        let ann = read_document(&path).map_err(|m| CliError::Data(format!("{}: {m}", path.display())))?;
        if ann.sentences().len() != d.sentences {
            return Err(CliError::Data(format!(
                "{} changed since ingestion; run ingest again",
                path.display()
            )));
        }
        corpus
            .insert(d.doc_id.clone(), ann)
            .map_err(|e| CliError::Data(e.to_string()))?;
    }
    Ok(corpus)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexReport {
    pub index: PathBuf,
    pub documents: usize,
    pub entries: usize,
    pub dimension: usize,
}

/// Embeds the corpus of `manifest` and writes the index to `out`.
pub fn build_index(cfg: &Config, manifest: &Path, out: &Path) -> Result<IndexReport, CliError> {
    let embedder = cfg.embedder()?;
    let policy = cfg.policy()?;
    let manifest = read_manifest(manifest)?;
    let corpus = load_corpus(&manifest)?;
    let opts = IndexOptions {
        batch_size: cfg.embed_batch_size,
        retries: cfg.embed_retries,
        parallelism: cfg.parallelism,
        policy,
    };
    let index = VectorIndex::build(&corpus, embedder.as_ref(), &opts)?;
    index.save(out)?;
    Ok(IndexReport {
        index: out.to_path_buf(),
        documents: corpus.len(),
        entries: index.len(),
        dimension: index.dimension,
    })
}

#[derive(Debug, Clone)]
pub struct QueryArgs {
    pub text: String,
    pub budget: usize,
    pub filter: bool,
    pub k_init: usize,
}

/// A citation with the text it points at.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationReport {
    pub doc_id: DocId,
    pub paths: PathSet,
    pub text: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct QueryReport {
    pub query: String,
    pub budget: usize,
    pub total_cost: usize,
    pub results: Vec<AggregatedResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub citations: Option<Vec<CitationReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Vec<Diagnostic>>,
}

pub fn query(cfg: &Config, manifest: &Path, index_path: &Path, args: &QueryArgs) -> Result<QueryReport, CliError> {
    if args.budget == 0 {
        return Err(CliError::Usage("--budget must be positive".into()));
    }
    if args.k_init == 0 {
        return Err(CliError::Usage("--k-init must be at least 1".into()));
    }
    if args.text.trim().is_empty() {
        return Err(CliError::Usage("the query is empty".into()));
    }
    let embedder = cfg.embedder()?;
    let generator = if args.filter { Some(cfg.generator()?) } else { None };
    let policy = cfg.policy()?;

    let manifest = read_manifest(manifest)?;
    let corpus = load_corpus(&manifest)?;
    let index = VectorIndex::load(index_path)?;
    if index.dimension != embedder.dimension() {
        return Err(CliError::Config(format!(
            "index has dimension {} but the embedder produces {}",
            index.dimension,
            embedder.dimension()
        )));
    }

    let opts = RetrieveOptions {
        budget: Budget::new(args.budget),
        initial_k: args.k_init,
        fill_threshold: cfg.fill_threshold,
        policy,
    };
    let results = retrieve(&index, &corpus, embedder.as_ref(), &args.text, &opts)?;
    let total_cost = results.iter().map(|r| r.cost).sum();
    let mut report = QueryReport {
        query: args.text.clone(),
        budget: args.budget,
        total_cost,
        results,
        citations: None,
        diagnostics: None,
    };
    let Some(generator) = generator else {
        return Ok(report);
    };

    let candidates: Vec<FilterCandidate> = report.results.iter().map(FilterCandidate::from).collect();
    let fopts = FilterOptions {
        expand_budget: Budget::new(cfg.expand_budget),
        parallelism: cfg.parallelism,
        parse_retries: 1,
        policy,
    };
    let outcome = filter_citations(&corpus, &candidates, &args.text, generator.as_ref(), &fopts)?;
    let failed = outcome
        .diagnostics
        .iter()
        .filter(|d| matches!(d, Diagnostic::Provider { .. }))
        .count();
    if !candidates.is_empty() && failed == candidates.len() {
        for d in &outcome.diagnostics {
            log::error!("{d:?}");
        }
        return Err(CliError::Provider(format!("the generator failed on all {failed} views")));
    }
    let citations = outcome
        .citations
        .into_iter()
        .map(|c| {
            let doc = corpus.get(&c.doc_id).expect("citations come from corpus documents").doc();
            CitationReport {
                text: render_markdown(doc, &c.paths),
                doc_id: c.doc_id,
                paths: c.paths,
            }
        })
        .collect();
    report.citations = Some(citations);
    report.diagnostics = Some(outcome.diagnostics);
    Ok(report)
}

/// What `eval` reads: a `query` report. With citations, those are judged;
/// without, each retrieved result is judged as one citation.
#[derive(Debug, Clone, Deserialize)]
pub struct EvalInput {
    pub query: String,
    #[serde(default)]
    pub citations: Option<Vec<CitationReport>>,
    #[serde(default)]
    pub results: Vec<ResultInput>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ResultInput {
    pub doc_id: DocId,
    pub source_paths: PathSet,
    pub rendered_markdown: String,
}

impl EvalInput {
    pub fn items(self) -> Vec<(String, CitationReport)> {
        let q = self.query;
        match self.citations {
            Some(cs) => cs.into_iter().map(|c| (q.clone(), c)).collect(),
            None => self
                .results
                .into_iter()
                .map(|r| {
                    let c = CitationReport {
                        doc_id: r.doc_id,
                        paths: r.source_paths,
                        text: r.rendered_markdown,
                    };
                    (q.clone(), c)
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvalRecord {
    pub query: String,
    pub doc_id: DocId,
    pub paths: PathSet,
    pub citation: String,
    /// `None` when the judge's reply could not be read.
    pub verdict: Option<Verdict>,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvalReport {
    pub records: Vec<EvalRecord>,
    pub helpful: usize,
    /// Citations with a readable verdict.
    pub total: usize,
    pub unparseable: usize,
    pub ratio: String,
}

/// Sends one judge prompt per (query, citation) pair. Unreadable verdicts
/// are counted apart and left out of the ratio; a provider failure aborts.
pub fn judge_citations(
    judge: &dyn GenerativeProvider,
    items: Vec<(String, CitationReport)>,
    parallelism: usize,
) -> Result<EvalReport, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let replies: Vec<Result<String, String>> = pool.install(|| {
        items
            .par_iter()
            .map(|(q, c)| judge.complete(&judge_prompt(q, &c.text)).map_err(|e| e.to_string()))
            .collect()
    });
    let mut records = Vec::with_capacity(items.len());
    for ((query, c), reply) in items.into_iter().zip(replies) {
        let rationale = reply.map_err(CliError::Provider)?;
        records.push(EvalRecord {
            verdict: parse_verdict(&rationale),
            query,
            doc_id: c.doc_id,
            paths: c.paths,
            citation: c.text,
            rationale,
        });
    }
    let helpful = records.iter().filter(|r| r.verdict == Some(Verdict::Helpful)).count();
    let total = records.iter().filter(|r| r.verdict.is_some()).count();
    let unparseable = records.len() - total;
    Ok(EvalReport {
        ratio: format_ratio(helpful, total),
        records,
        helpful,
        total,
        unparseable,
    })
}

pub fn eval(cfg: &Config, inputs: &[PathBuf]) -> Result<EvalReport, CliError> {
    let judge = cfg.judge()?;
    let mut items = Vec::new();
    for path in inputs {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let input: EvalInput = serde_json::from_str(&text).map_err(|e| CliError::io(path, e))?;
        items.extend(input.items());
    }
    judge_citations(judge.as_ref(), items, cfg.parallelism)
}

/// Pretty JSON with a trailing newline, as printed on stdout.
pub fn render_json<T: Serialize>(value: &T) -> String {
    String::from_utf8(to_json_bytes(value)).expect("JSON is UTF-8")
}
