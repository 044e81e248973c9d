//! `pluie`: batch scoring and evaluation for perplexity-based judging.
//!
//! One binary, subcommand per operation. Exit codes: 0 success, 1 usage or
//! configuration error, 2 data error, 3 backend error.

mod cmd;
mod config;
mod output;
mod records;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use std::fmt;
use std::process::ExitCode;

use config::{CommonArgs, RunConfig};

/// A run failure, categorized for the exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Backend(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Backend(_) => 3,
        }
    }

    /// Prefixes a data failure with the record it concerns.
    pub fn for_record(self, id: &str) -> Failure {
        match self {
            Failure::Data(message) => Failure::Data(format!("record {id:?}: {message}")),
            other => other,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(message) => write!(f, "usage: {message}"),
            Failure::Data(message) => write!(f, "data: {message}"),
            Failure::Backend(message) => write!(f, "backend: {message}"),
        }
    }
}

/// Maps a library error onto the exit-code taxonomy.
pub fn lib_failure(error: pluie::Error) -> Failure {
    use pluie::Error::*;
    let message = error.to_string();
    match error {
        BackendUnavailable(_)
        | Timeout { .. }
        | Protocol(_)
        | MissingConditional { .. }
        | UnknownToken(_)
        | UnknownTokenId(_)
        | ChatRender(_)
        | EmptyContinuation
        | ZeroMaxTokens
        | MultiTokenAnswer(_) => Failure::Backend(message),
        UnknownTemplate(_) | Template(_) | MissingBinding(_) | UnusedBinding(_)
        | InvalidEpsilon(_) => Failure::Usage(message),
        UnknownRating(_) | EmptyInput(_) | Data(_) | DataAtLine { .. } | DuplicateId(_)
        | MissingScore(_) | Io(_) | Json(_) => Failure::Data(message),
    }
}

#[derive(Parser)]
#[command(name = "pluie", version, about = "Log-odds scoring and judge evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score pairs with the pluie log-odds metric, a lexical metric, or a judge.
    Score(CommonArgs),
    /// Classify a scored file at a threshold and report the confusion.
    Classify(CommonArgs),
    /// Sweep the decision threshold and report the best F1 plus the curve.
    Sweep(CommonArgs),
    /// Evaluate pairwise preferences against human choices.
    Prefer(CommonArgs),
    /// Report kappa, Cramér's V, and accuracy against human labels.
    Agree(CommonArgs),
    /// Expand transform records into labeled paraphrase pairs.
    BuildDataset(CommonArgs),
    /// Audit bidirectional scores against expected alignment labels.
    CheckAlign(CommonArgs),
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Score(args)
            | Command::Classify(args)
            | Command::Sweep(args)
            | Command::Prefer(args)
            | Command::Agree(args)
            | Command::BuildDataset(args)
            | Command::CheckAlign(args) => args,
        }
    }

    fn run(&self, config: &RunConfig) -> Result<(), Failure> {
        match self {
            Command::Score(_) => cmd::score::run(config),
            Command::Classify(_) => cmd::classify::run(config),
            Command::Sweep(_) => cmd::sweep::run(config),
            Command::Prefer(_) => cmd::prefer::run(config),
            Command::Agree(_) => cmd::agree::run(config),
            Command::BuildDataset(_) => cmd::build_dataset::run(config),
            Command::CheckAlign(_) => cmd::check_align::run(config),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };

    let result = RunConfig::resolve(cli.command.args())
        .and_then(|config| cli.command.run(&config));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("pluie: error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}
