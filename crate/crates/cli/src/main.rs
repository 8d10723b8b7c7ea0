//! `rulematch`: match regulatory rules to policy sentences from the command line.

mod args;
mod config;
mod embed;
mod evaluate;
mod finetune;
mod ingest;
mod io;
mod label;
mod manifest;
mod matching;

use std::process::ExitCode;

use clap::{CommandFactory, Parser};

use args::{Cli, Command};

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Ingest(a) => ingest::run(&a),
        Command::Embed(a) => embed::run(&a),
        Command::Encode(a) => embed::run_encode(&a),
        Command::Match(a) => matching::run(&a),
        Command::PseudoLabel(a) => label::run(&a),
        Command::Finetune(a) => finetune::run(&a),
        Command::Evaluate(a) => evaluate::run(&a),
    }
}

/// 3 for numerical failures, 2 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err
        .chain()
        .filter_map(|e| e.downcast_ref::<rulematch::Error>())
        .any(rulematch::Error::is_numerical);
    if numerical {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::apply_config_file(&Cli::command(), argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
