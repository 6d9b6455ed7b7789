//! `icg-bpoint` command-line tool.
//!
//! Exit status: 0 on success, 1 on data errors (unreadable or inconsistent
//! inputs), 2 on usage errors (bad flags, invalid configuration).

mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};

pub struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn usage(error: anyhow::Error) -> Self {
        Self { code: 2, error }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        // library errors may arrive wrapped in context
        let code = match error.downcast_ref::<icg_bpoint::Error>() {
            Some(e) => classify(e),
            None => 1,
        };
        Self { code, error }
    }
}

impl From<icg_bpoint::Error> for Failure {
    fn from(error: icg_bpoint::Error) -> Self {
        Self {
            code: classify(&error),
            error: error.into(),
        }
    }
}

fn classify(e: &icg_bpoint::Error) -> u8 {
    use icg_bpoint::Error::*;
    match e {
        InvalidConfig(_) | InvalidFilter(_) | InvalidSynthSpec(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Detect(a) => commands::detect(a),
        Command::Eval(a) => commands::eval(a),
        Command::Synth(a) => commands::synth(a),
        Command::ExportSegments(a) => commands::export(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
