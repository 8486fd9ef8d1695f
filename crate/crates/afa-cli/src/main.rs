//! `afa`: train, evaluate, sweep, and interactively drive cost-sensitive
//! sequential feature-acquisition policies.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error,
//! 4 non-convergence in `--strict-convergence` mode, 1 anything else
//! (including aborted interactive sessions).

mod commands;
mod config;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "afa",
    version,
    about = "Instance-specific, cost-sensitive sequential feature acquisition",
    after_help = "Thread count follows RAYON_NUM_THREADS (default: all cores)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy and write the artifact plus training reports.
    Train(commands::train::TrainArgs),
    /// Evaluate a policy artifact on a test CSV.
    Eval(commands::eval::EvalArgs),
    /// Cost-accuracy frontier over a list of lambda values.
    Sweep(commands::sweep::SweepArgs),
    /// Interactive acquisition session: one recommendation at a time.
    Session(commands::session::SessionArgs),
    /// Export a policy as a Graphviz DOT file.
    ExportDot(commands::export_dot::ExportDotArgs),
    /// Generate a synthetic surrogate dataset (CSV + schema).
    Synth(commands::synth::SynthArgs),
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Train(args) => commands::train::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Sweep(args) => commands::sweep::run(args),
        Command::Session(args) => commands::session::run(args),
        Command::ExportDot(args) => commands::export_dot::run(args),
        Command::Synth(args) => commands::synth::run(args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err.downcast_ref::<afa::Error>() {
                Some(e) if e.is_config() => 2,
                Some(e) if e.is_data() => 3,
                Some(afa::Error::NonConvergence { .. }) => 4,
                _ => 1,
            };
            std::process::exit(code);
        }
    }
}
