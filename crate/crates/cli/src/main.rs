//! `timbre`: one executable for the whole pipeline. Every subcommand
//! writes machine-readable artifacts (CSV, JSON, checkpoints) into a run
//! directory along with a metadata echo of its configuration.

mod baseline;
mod distances;
mod params;
mod rundir;
mod synth;
mod training;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "timbre", version, about = "Constant-Q instrument recognition pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic source-filter corpus with a train/test manifest.
    Synth(synth::SynthArgs),
    /// Summarize pairwise MFCC distances per instrument / pitch / nuance cluster.
    MfccDistances(distances::DistancesArgs),
    /// Print per-layer parameter counts for one or all architectures.
    CountParams(params::CountParamsArgs),
    /// Train an architecture on a manifest's train split.
    Train(training::TrainArgs),
    /// Evaluate a checkpoint over half-overlapping test excerpts.
    Evaluate(training::EvaluateArgs),
    /// Train and evaluate several seeds, reporting mean and deviation.
    Trials(training::TrialsArgs),
    /// Bag-of-features plus random-forest baseline on the same manifest.
    Baseline(baseline::BaselineArgs),
}

fn main() -> anyhow::Result<()> {
    // Die quietly when a pipe downstream closes (e.g. `timbre ... | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    match Cli::parse().command {
        Command::Synth(args) => synth::run(args),
        Command::MfccDistances(args) => distances::run(args),
        Command::CountParams(args) => params::run(args),
        Command::Train(args) => training::run_train(args),
        Command::Evaluate(args) => training::run_evaluate(args),
        Command::Trials(args) => training::run_trials(args),
        Command::Baseline(args) => baseline::run(args),
    }
}
