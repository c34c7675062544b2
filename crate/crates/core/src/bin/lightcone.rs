use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lightcone::cli::{self, Command};

/// Light-cone bounds and exact dynamics for power-law spin lattices.
///
/// Usage: lightcone <COMMAND> --config <PATH> [--key value ...]
#[derive(Parser, Debug)]
#[command(name = "lightcone", version)]
struct Args {
    command: Command,
    /// `--config <path>` followed by any `--key value` overrides.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    rest: Vec<String>,
}

/// Pull `--config <path>` (or `--config=<path>`) out of the argument list.
fn take_config(rest: Vec<String>) -> Result<(Option<PathBuf>, Vec<String>), String> {
    let mut config = None;
    let mut others = Vec::new();
    let mut it = rest.into_iter();
    while let Some(arg) = it.next() {
        let path = if arg == "--config" {
            Some(it.next().ok_or("flag `--config` needs a value")?)
        } else {
            arg.strip_prefix("--config=").map(str::to_string)
        };
        match path {
            Some(p) if config.is_some() => return Err(format!("`--config` given twice (second: {p})")),
            Some(p) => config = Some(PathBuf::from(p)),
            None => others.push(arg),
        }
    }
    Ok((config, others))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (config, overrides) = match take_config(args.rest) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match cli::run(args.command, config.as_deref(), &overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
