//! Test-split evaluation over half-overlapping three-second excerpts, and
//! mean-and-deviation reports over repeated training trials.

use timbre_net::{Network, NetworkSpec};
use timbre_tensor::Tensor;

use crate::dataset::LoadedDataset;
use crate::manifest::Split;
use crate::trainer::{train, TrainConfig};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassAccuracy {
    pub class: String,
    pub n_excerpts: usize,
    pub n_correct: usize,
    /// Fraction correct; absent when the class has no test excerpts.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct AccuracyReport {
    pub classes: Vec<ClassAccuracy>,
    /// Mean over classes that have test excerpts.
    pub mean_accuracy: Option<f64>,
    pub total_excerpts: usize,
    /// Windows dropped for having zero variance.
    pub skipped_windows: usize,
}

impl AccuracyReport {
    /// `class,accuracy,stddev,n_excerpts` rows with accuracies in percent;
    /// classes absent from the test split keep an empty accuracy cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,accuracy,stddev,n_excerpts\n");
        for c in &self.classes {
            match c.accuracy {
                Some(a) => out.push_str(&format!(
                    "{},{:.2},,{}\n",
                    c.class,
                    100.0 * a,
                    c.n_excerpts
                )),
                None => out.push_str(&format!("{},,,{}\n", c.class, c.n_excerpts)),
            }
        }
        match self.mean_accuracy {
            Some(a) => out.push_str(&format!("average,{:.2},,{}\n", 100.0 * a, self.total_excerpts)),
            None => out.push_str(&format!("average,,,{}\n", self.total_excerpts)),
        }
        out
    }
}

/// Lowest index wins ties, so an all-uniform output classifies as class 0.
fn argmax(probs: &Tensor<f32>) -> usize {
    let mut best = 0usize;
    let mut best_v = f32::NEG_INFINITY;
    for (i, &v) in probs.data().iter().enumerate() {
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    best
}

/// Standardizes one window to zero mean, unit variance; `None` when the
/// window is constant.
fn standardize(window: &Tensor<f32>) -> Option<Tensor<f32>> {
    let data = window.data();
    let n = data.len() as f64;
    let mean = data.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = data.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
    if var == 0.0 {
        return None;
    }
    let (m, s) = (mean as f32, var.sqrt() as f32);
    Some(window.map(|v| (v - m) / s))
}

/// Classifies every half-overlapping test excerpt by argmax and reports
/// per-class excerpt accuracy plus the class-mean average.
pub fn evaluate(net: &Network<f32>, dataset: &LoadedDataset) -> Result<AccuracyReport> {
    let names = &dataset.manifest.class_names;
    let mut correct = vec![0usize; names.len()];
    let mut totals = vec![0usize; names.len()];
    let mut skipped = 0usize;

    for file in dataset.manifest.test_indices() {
        let entry = &dataset.manifest.entries[file];
        let class = dataset
            .manifest
            .class_index(&entry.label)
            .expect("label is in class_names");
        for frame in dataset.eval_windows(file) {
            let window = dataset.window(file, frame);
            let Some(input) = standardize(&window) else {
                skipped += 1;
                continue;
            };
            let probs = net.forward(&input)?;
            totals[class] += 1;
            if argmax(&probs) == class {
                correct[class] += 1;
            }
        }
    }

    let classes: Vec<ClassAccuracy> = names
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
    Ok(AccuracyReport {
        mean_accuracy: (!present.is_empty())
            .then(|| present.iter().sum::<f64>() / present.len() as f64),
        total_excerpts: totals.iter().sum(),
        skipped_windows: skipped,
        classes,
    })
}

#[derive(Debug, Clone)]
pub struct TrialRow {
    pub class: String,
    pub mean: Option<f64>,
    pub stddev: Option<f64>,
    pub n_excerpts: usize,
}

/// Per-class mean and deviation over several training runs.
#[derive(Debug, Clone)]
pub struct TrialsReport {
    pub rows: Vec<TrialRow>,
    pub average: TrialRow,
}

impl TrialsReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,accuracy,stddev,n_excerpts\n");
        let mut push = |row: &TrialRow| match (row.mean, row.stddev) {
            (Some(m), Some(s)) => out.push_str(&format!(
                "{},{:.2},{:.2},{}\n",
                row.class,
                100.0 * m,
                100.0 * s,
                row.n_excerpts
            )),
            _ => out.push_str(&format!("{},,,{}\n", row.class, row.n_excerpts)),
        };
        for row in &self.rows {
            push(row);
        }
        push(&self.average);
        out
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Trains and evaluates once per seed, reporting per-class mean accuracy
/// and its deviation across the trials.
pub fn repeated_trials(
    spec: &NetworkSpec,
    dataset: &LoadedDataset,
    config: &TrainConfig,
    seeds: &[u64],
) -> Result<TrialsReport> {
    if seeds.len() < 2 {
        return Err(crate::TrainError::Config(format!(
            "trials need at least 2 seeds, got {}",
            seeds.len()
        )));
    }
    let mut reports = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let trial_config = TrainConfig { seed, ..config.clone() };
        let outcome = train(spec, dataset, &trial_config)?;
        let net = Network::<f32>::from_checkpoint(&outcome.checkpoint)?;
        reports.push(evaluate(&net, dataset)?);
    }

    let names = &dataset.manifest.class_names;
    let mut rows = Vec::with_capacity(names.len());
    for (i, name) in names.iter().enumerate() {
        let per_trial: Vec<f64> = reports
            .iter()
            .filter_map(|r| r.classes[i].accuracy)
            .collect();
        let n_excerpts = reports[0].classes[i].n_excerpts;
        if per_trial.len() == reports.len() {
            let (mean, std) = mean_std(&per_trial);
            rows.push(TrialRow { class: name.clone(), mean: Some(mean), stddev: Some(std), n_excerpts });
        } else {
            rows.push(TrialRow { class: name.clone(), mean: None, stddev: None, n_excerpts });
        }
    }
    let means: Vec<f64> = reports.iter().filter_map(|r| r.mean_accuracy).collect();
    let (avg_mean, avg_std) = mean_std(&means);
    let average = TrialRow {
        class: "average".into(),
        mean: Some(avg_mean),
        stddev: Some(avg_std),
        n_excerpts: reports[0].total_excerpts,
    };
    Ok(TrialsReport { rows, average })
}

/// Entries in the given split, counted per class; used by reports.
pub fn split_counts(dataset: &LoadedDataset, split: Split) -> Vec<(String, usize)> {
    dataset
        .manifest
        .class_names
        .iter()
        .map(|name| {
            let count = dataset
                .manifest
                .entries
                .iter()
                .filter(|e| e.split == split && &e.label == name)
                .count();
            (name.clone(), count)
        })
        .collect()
}
