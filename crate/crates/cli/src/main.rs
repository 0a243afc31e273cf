mod args;
mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{BoundCommand, Cli, Command};

const THREADS_ENV: &str = "BEC_KIT_THREADS";

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let argv = match config::merge(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("bec-kit: {e}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("bec-kit: {e}");
        return ExitCode::from(1);
    }

    let result = match &cli.command {
        Command::PotentialCheck(a) => commands::potential_check(a),
        Command::Bound(BoundCommand::Eval(a)) => commands::bound_eval(a),
        Command::Bound(BoundCommand::DeltaMin(a)) => commands::bound_delta_min(a),
        Command::Bound(BoundCommand::Sweep(a)) => commands::bound_sweep(a),
        Command::Meanfield(a) => commands::meanfield(a),
        Command::Verify(a) => commands::verify(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("bec-kit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
