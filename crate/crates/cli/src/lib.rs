//! The `cellist` command-line tool.

pub mod commands;
mod error;
pub mod inputs;

pub use error::CliError;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "cellist", version, about = "Cello bow-arm posture engine")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Model and configuration inputs shared by the engine commands.
#[derive(Debug, Clone, Args)]
pub struct EngineArgs {
    /// Wrist model file.
    #[arg(long, env = "CELLIST_WRIST_MODEL")]
    pub wrist_model: PathBuf,
    /// Elbow model file.
    #[arg(long, env = "CELLIST_ELBOW_MODEL")]
    pub elbow_model: PathBuf,
    /// Engine config document (JSON). Defaults apply when omitted.
    #[arg(long, env = "CELLIST_CONFIG")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a recorded stream and write per-frame results, the
    /// instruction timeline and the session summary.
    Replay(commands::replay::ReplayArgs),
    /// Train a wrist or elbow model.
    Train(commands::train::TrainArgs),
    /// Measure per-frame engine time on a recorded stream.
    Bench(commands::bench::BenchArgs),
    /// Run the WebSocket session service.
    Serve(commands::serve::ServeArgs),
    /// List a user's stored sessions.
    History(commands::history::HistoryArgs),
    /// Print a summary or session record as a table.
    Summary(commands::summary::SummaryArgs),
    /// Write a synthetic scripted stream.
    SynthStream(commands::synth_stream::SynthStreamArgs),
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Replay(a) => commands::replay::run(&a),
        Command::Train(a) => commands::train::run(&a),
        Command::Bench(a) => commands::bench::run(&a),
        Command::Serve(a) => commands::serve::run(&a),
        Command::History(a) => commands::history::run(&a),
        Command::Summary(a) => commands::summary::run(&a),
        Command::SynthStream(a) => commands::synth_stream::run(&a),
    }
}
