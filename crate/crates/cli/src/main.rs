//! `spar` — command-line driver for the retrieval pipeline.
//!
//! Every subcommand reads a flat key-value config file (`--config`) whose
//! keys are mirrored one-to-one by flags; flags win over file values. Each
//! artifact is written with a sibling `.manifest` recording the resolved
//! configuration and input digests. Exit codes: 0 success, 1 configuration
//! error, 2 data-format error.

mod commands;
mod config;
mod manifest;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, Command};

use crate::commands::SUBCOMMANDS;
use crate::config::{Config, KEYS};

/// CLI failure classes, mapped onto exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, missing keys, unusable values, missing input files.
    Config(String),
    /// Inputs that exist but do not parse or are internally inconsistent.
    Data(String),
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(1),
            CliError::Data(_) => ExitCode::from(2),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "error kind=config msg={msg:?}"),
            CliError::Data(msg) => write!(f, "error kind=data msg={msg:?}"),
        }
    }
}

impl From<spar_core::Error> for CliError {
    fn from(err: spar_core::Error) -> Self {
        if err.is_data_error() {
            CliError::Data(err.to_string())
        } else {
            CliError::Config(err.to_string())
        }
    }
}

fn build_cli() -> Command {
    let mut cmd = Command::new("spar")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Desk-scale hybrid retrieval: BM25 teacher, dense imitation, vector fusion")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for (name, about, _, keys) in SUBCOMMANDS {
        let mut sub = Command::new(*name).about(*about).arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .help("config file with `key = value` lines"),
        );
        for key in *keys {
            let spec = KEYS
                .iter()
                .find(|k| k.name == *key)
                .expect("subcommand key is registered");
            sub = sub.arg(
                Arg::new(spec.name)
                    .long(spec.name)
                    .value_name("VALUE")
                    .action(ArgAction::Set)
                    .help(spec.help),
            );
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

fn run() -> Result<(), CliError> {
    let matches = build_cli()
        .try_get_matches()
        .map_err(|e| CliError::Config(e.to_string().trim().to_string()))?;
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let (_, _, handler, keys) = SUBCOMMANDS
        .iter()
        .find(|(n, ..)| *n == name)
        .expect("subcommand is registered");

    let config_file: Option<PathBuf> = sub.get_one::<String>("config").map(PathBuf::from);
    let mut overrides = BTreeMap::new();
    for key in *keys {
        if let Some(value) = sub.get_one::<String>(key) {
            overrides.insert(key.to_string(), value.clone());
        }
    }
    let cfg = Config::resolve(config_file.as_deref(), &overrides)?;

    let threads = match cfg.usize("threads")? {
        0 => std::env::var("SPAR_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .unwrap_or(0),
        n => n,
    };
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot configure thread pool: {e}")))?;
    }

    handler(&cfg, keys)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            err.exit_code()
        }
    }
}
