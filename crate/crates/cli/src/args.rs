use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "subdoc", version, about = "Structure-aware retrieval over HTML corpora")]
pub struct Cli {
    /// TOML configuration file; SUBDOC_* variables override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for the hash embedder (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FilterMode {
    On,
    Off,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and segment every .html/.htm file in a directory.
    Ingest {
        dir: PathBuf,
        /// Manifest to write (default: the `manifest` setting).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Embed the ingested corpus into a vector index.
    Index {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Index file to write (default: the `index_path` setting).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Retrieve budgeted, document-aggregated excerpts for a query.
    Query {
        text: String,
        /// Size budget for the admitted results (default: the `budget` setting).
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, value_enum, default_value = "off")]
        filter: FilterMode,
        /// Sentences fetched before the first doubling.
        #[arg(long)]
        k_init: Option<usize>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        index: Option<PathBuf>,
    },
    /// Judge the citations in saved query outputs.
    Eval {
        #[arg(required = true)]
        results: Vec<PathBuf>,
    },
}
