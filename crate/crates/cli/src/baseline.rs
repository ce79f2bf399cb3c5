//! Bag-of-features + random-forest baseline over the same manifest and
//! excerpt grid as the network evaluation, reported in the same schema.

use std::path::PathBuf;

use anyhow::Context;
use clap::Args;

use timbre_dsp::{load_audio, AudioBuffer, SAMPLE_RATE};
use timbre_forest::{
    bag_of_features, features_csv, forest_predict, forest_train, FeatureVector70, ForestConfig,
};
use timbre_train::{AccuracyReport, ClassAccuracy, DatasetManifest, Split};

use crate::rundir::RunDir;

#[derive(Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
}

/// Half-overlapping 3-second excerpts of one file.
fn excerpts(audio: &AudioBuffer) -> Vec<AudioBuffer> {
    let window = 3 * SAMPLE_RATE as usize;
    let hop = window / 2;
    let mut out = Vec::new();
    let mut start = 0usize;
    while start + window <= audio.samples.len() {
        out.push(AudioBuffer::new(
            audio.samples[start..start + window].to_vec(),
            audio.sample_rate,
        ));
        start += hop;
    }
    out
}

pub fn run(args: BaselineArgs) -> anyhow::Result<()> {
    let manifest = DatasetManifest::read_csv(&args.manifest)?;
    manifest.validate_for_training()?;

    let mut train_features: Vec<FeatureVector70> = Vec::new();
    let mut train_labels: Vec<usize> = Vec::new();
    let mut test_set: Vec<(usize, FeatureVector70)> = Vec::new();
    let mut table_rows: Vec<(String, FeatureVector70)> = Vec::new();

    eprintln!("extracting features from {} files...", manifest.entries.len());
    for entry in &manifest.entries {
        let audio = load_audio(&entry.path)
            .with_context(|| format!("loading {}", entry.path.display()))?;
        let class = manifest.class_index(&entry.label).expect("label known");
        for excerpt in excerpts(&audio) {
            let features = bag_of_features(&excerpt)?;
            if features.is_zero() {
                eprintln!("warning: silent excerpt in {}", entry.path.display());
            }
            table_rows.push((entry.label.clone(), features.clone()));
            match entry.split {
                Split::Train => {
                    train_features.push(features);
                    train_labels.push(class);
                }
                Split::Test => test_set.push((class, features)),
            }
        }
    }

    let config = ForestConfig { n_trees: args.trees, seed: args.seed, ..Default::default() };
    let model = forest_train(&train_features, &train_labels, &config)?;

    let n_classes = manifest.class_names.len();
    let mut correct = vec![0usize; n_classes];
    let mut totals = vec![0usize; n_classes];
    for (class, features) in &test_set {
        totals[*class] += 1;
        if forest_predict(&model, features).0 == *class {
            correct[*class] += 1;
        }
    }
    let classes: Vec<ClassAccuracy> = manifest
        .class_names
        .iter()
        .enumerate()
        .map(|(i, name)| ClassAccuracy {
            class: name.clone(),
            n_excerpts: totals[i],
            n_correct: correct[i],
            accuracy: (totals[i] > 0).then(|| correct[i] as f64 / totals[i] as f64),
        })
        .collect();
    let present: Vec<f64> = classes.iter().filter_map(|c| c.accuracy).collect();
    let report = AccuracyReport {
        mean_accuracy: (!present.is_empty())
            .then(|| present.iter().sum::<f64>() / present.len() as f64),
        total_excerpts: totals.iter().sum(),
        skipped_windows: 0,
        classes,
    };

    let dir = RunDir::create(&args.out)?;
    dir.write("accuracy.csv", report.to_csv().as_bytes())?;
    dir.write("features.csv", features_csv(&table_rows).as_bytes())?;
    model.save_json(&dir.path("forest.json"))?;
    dir.finish(
        "baseline",
        serde_json::json!({
            "manifest": args.manifest.display().to_string(),
            "seed": args.seed,
            "trees": args.trees,
            "train_excerpts": train_labels.len(),
            "test_excerpts": test_set.len(),
            "mean_accuracy": report.mean_accuracy,
        }),
    )?;
    print!("{}", report.to_csv());
    Ok(())
}
