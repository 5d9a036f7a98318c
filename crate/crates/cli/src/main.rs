use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use subdoc_cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli, std::env::vars()) {
        Ok(json) => {
            let mut out = std::io::stdout().lock();
            if out.write_all(json.as_bytes()).and_then(|_| out.flush()).is_err() {
                return ExitCode::from(4);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("subdoc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
