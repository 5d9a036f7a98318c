//! Command-line front end for subdoc: corpus ingestion, index build,
//! budgeted querying with optional evidence filtering, and a judge harness.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;

pub use args::{Cli, Command, FilterMode};
pub use config::Config;
pub use error::CliError;

/// Runs one parsed command line and returns the JSON to print.
pub fn run(cli: Cli, env: impl IntoIterator<Item = (String, String)>) -> Result<String, CliError> {
    let mut cfg = Config::load(cli.config.as_deref(), env)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match cli.command {
        Command::Ingest { dir, out } => {
            let out = out.unwrap_or_else(|| cfg.manifest.clone());
            let manifest = commands::ingest(&dir)?;
            commands::write_manifest(&manifest, &out)?;
            Ok(commands::render_json(&manifest))
        }
        Command::Index { manifest, out } => {
            // fail on provider settings before reading anything
            cfg.embedder()?;
            let manifest = manifest.unwrap_or_else(|| cfg.manifest.clone());
            let out = out.unwrap_or_else(|| cfg.index_path.clone());
            Ok(commands::render_json(&commands::build_index(&cfg, &manifest, &out)?))
        }
        Command::Query {
            text,
            budget,
            filter,
            k_init,
            manifest,
            index,
        } => {
            let args = commands::QueryArgs {
                text,
                budget: budget.unwrap_or(cfg.budget),
                filter: filter == FilterMode::On,
                k_init: k_init.unwrap_or(cfg.k_init),
            };
            let manifest = manifest.unwrap_or_else(|| cfg.manifest.clone());
            let index = index.unwrap_or_else(|| cfg.index_path.clone());
            Ok(commands::render_json(&commands::query(&cfg, &manifest, &index, &args)?))
        }
        Command::Eval { results } => Ok(commands::render_json(&commands::eval(&cfg, &results)?)),
    }
}
