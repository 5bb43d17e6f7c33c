use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use slalomlab::{execute, load_config, Command, Config, Overrides};

/// Runs one slalom computation and writes a JSON report.
#[derive(Debug, Parser)]
#[command(name = "slalomlab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Config with `[family.<name>]` sections and a `[run]` table.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    horizon: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> slalomlab::Result<i32> {
    let config = match &cli.config {
        Some(path) => load_config(path)?,
        None => Config::default(),
    };
    let overrides = Overrides { depth: cli.depth, horizon: cli.horizon, seed: cli.seed };
    let report = execute(cli.command, &config, overrides)?;
    let text = report.to_json();
    match &cli.out {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("slalomlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
