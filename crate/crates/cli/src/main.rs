mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Bad arguments or settings; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<corridor_core::Error>() {
            return match e {
                corridor_core::Error::InvalidInput(_) | corridor_core::Error::Parse { .. } => 2,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = cli.jobs;
    let result = match &cli.command {
        Command::Train(a) => commands::train(a, jobs),
        Command::Eval(a) => commands::eval(a, jobs),
        Command::BaselineEval(a) => commands::baseline(a, jobs),
        Command::Sweep(a) => commands::sweep(a, jobs),
        Command::ExportHeatmap(a) => commands::heatmap(a, jobs),
        Command::Serve(a) => commands::serve_cmd(a),
        Command::Replay(a) => commands::replay(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
