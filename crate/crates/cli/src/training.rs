//! Train / evaluate / trials subcommands.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;

use timbre_net::{by_name, Network, NetworkSpec};
use timbre_tensor::{AdamConfig, Checkpoint};
use timbre_train::{evaluate, repeated_trials, train, DatasetManifest, LoadedDataset, TrainConfig};

use crate::rundir::RunDir;

#[derive(Args, Clone)]
pub struct TrainArgs {
    /// Architecture: 2d32, 2d48, 1d, spiral, spiral+1d, spiral+2d, 1d+2d, all.
    #[arg(long)]
    pub arch: String,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Safety cap on training epochs.
    #[arg(long, default_value_t = 100)]
    pub epochs_cap: usize,
    /// Adam learning rate.
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Silence threshold relative to the peak frame, in dB.
    #[arg(long, default_value_t = -60.0)]
    pub silence_db: f64,
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// When given, the checkpoint's stored architecture must match.
    #[arg(long)]
    pub arch: Option<String>,
    #[arg(long, default_value_t = -60.0)]
    pub silence_db: f64,
}

#[derive(Args)]
pub struct TrialsArgs {
    #[command(flatten)]
    pub train: TrainArgs,
    /// Number of independently seeded runs (seed, seed+1, ...).
    #[arg(long, default_value_t = 2)]
    pub trials: usize,
}

fn load_dataset(manifest: &Path, silence_db: f64) -> anyhow::Result<LoadedDataset> {
    let manifest = DatasetManifest::read_csv(manifest)?;
    eprintln!("loading {} files...", manifest.entries.len());
    Ok(LoadedDataset::load(manifest, silence_db)?)
}

fn config_of(args: &TrainArgs) -> TrainConfig {
    TrainConfig {
        seed: args.seed,
        max_epochs: args.epochs_cap,
        adam: AdamConfig { learning_rate: args.lr, ..Default::default() },
        ..Default::default()
    }
}

pub fn run_train(args: TrainArgs) -> anyhow::Result<()> {
    let spec = by_name(&args.arch)?;
    let dataset = load_dataset(&args.manifest, args.silence_db)?;
    let config = config_of(&args);
    let outcome = train(&spec, &dataset, &config)?;

    let dir = RunDir::create(&args.out)?;
    outcome.checkpoint.save(&dir.path("model.ckpt"))?;
    dir.write("loss_history.csv", outcome.loss_history_csv().as_bytes())?;
    dir.finish(
        "train",
        serde_json::json!({
            "arch": args.arch,
            "manifest": args.manifest.display().to_string(),
            "seed": args.seed,
            "epochs_cap": args.epochs_cap,
            "lr": args.lr,
            "silence_db": args.silence_db,
            "epochs_run": outcome.epochs_run,
            "stopped_early": outcome.stopped_early,
            "final_epoch_loss": outcome.epoch_losses.last(),
        }),
    )?;
    println!(
        "trained {} for {} epochs (stopped early: {}); final epoch loss {:.4}",
        args.arch,
        outcome.epochs_run,
        outcome.stopped_early,
        outcome.epoch_losses.last().unwrap()
    );
    Ok(())
}

pub fn run_evaluate(args: EvaluateArgs) -> anyhow::Result<()> {
    let ckpt = Checkpoint::load(&args.checkpoint)
        .with_context(|| format!("loading {}", args.checkpoint.display()))?;
    if let Some(arch) = &args.arch {
        let expected = by_name(arch)?;
        let stored: NetworkSpec = serde_json::from_value(ckpt.header.architecture.clone())
            .context("checkpoint architecture document")?;
        if stored != expected {
            bail!(
                "checkpoint holds architecture `{}`, but `{arch}` was requested",
                stored.name
            );
        }
    }
    let net = Network::<f32>::from_checkpoint(&ckpt)?;
    let dataset = load_dataset(&args.manifest, args.silence_db)?;
    let report = evaluate(&net, &dataset)?;

    let dir = RunDir::create(&args.out)?;
    dir.write("accuracy.csv", report.to_csv().as_bytes())?;
    dir.finish(
        "evaluate",
        serde_json::json!({
            "checkpoint": args.checkpoint.display().to_string(),
            "manifest": args.manifest.display().to_string(),
            "total_excerpts": report.total_excerpts,
            "mean_accuracy": report.mean_accuracy,
        }),
    )?;
    print!("{}", report.to_csv());
    Ok(())
}

pub fn run_trials(args: TrialsArgs) -> anyhow::Result<()> {
    let spec = by_name(&args.train.arch)?;
    let dataset = load_dataset(&args.train.manifest, args.train.silence_db)?;
    let config = config_of(&args.train);
    let seeds: Vec<u64> = (0..args.trials as u64).map(|i| args.train.seed + i).collect();
    let report = repeated_trials(&spec, &dataset, &config, &seeds)?;

    let dir = RunDir::create(&args.train.out)?;
    dir.write("accuracy_trials.csv", report.to_csv().as_bytes())?;
    dir.finish(
        "trials",
        serde_json::json!({
            "arch": args.train.arch,
            "manifest": args.train.manifest.display().to_string(),
            "seeds": seeds,
            "epochs_cap": args.train.epochs_cap,
            "lr": args.train.lr,
        }),
    )?;
    print!("{}", report.to_csv());
    Ok(())
}
