//! The forest: bootstrapped CART trees with inverse-frequency class
//! weights, probability averaging over normalized leaf histograms, and a
//! diffable JSON serialization.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::{FeatureVector70, FEATURE_DIM};
use crate::tree::{grow_tree, traverse, Node};
use crate::{ForestError, Result};

#[derive(Debug, Clone)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Candidate features per node; defaults to floor(sqrt(70)) = 8.
    pub max_features: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_features: (FEATURE_DIM as f64).sqrt().floor() as usize,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Vec<Node>>,
    pub n_classes: usize,
    /// Inverse-frequency sample weights, per class.
    pub class_weights: Vec<f64>,
    pub seed: u64,
}

/// Tree `i` trains from a rng seeded by the master seed and the tree
/// counter, so training is reproducible and trees stay independent.
fn tree_seed(master: u64, tree: usize) -> u64 {
    master ^ (tree as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Trains the forest: each tree sees a bootstrap resample, every node
/// considers `max_features` random candidates, and samples are weighted
/// inversely to their class frequency.
pub fn forest_train(
    features: &[FeatureVector70],
    labels: &[usize],
    config: &ForestConfig,
) -> Result<ForestModel> {
    if features.len() != labels.len() || features.is_empty() {
        return Err(ForestError::InvalidInput(format!(
            "{} feature vectors for {} labels",
            features.len(),
            labels.len()
        )));
    }
    let n_classes = labels.iter().max().unwrap() + 1;
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        counts[l] += 1;
    }
    let present = counts.iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(ForestError::SingleClass(present));
    }
    // Balanced class probability: weight = n / (k * n_c).
    let class_weights: Vec<f64> = counts
        .iter()
        .map(|&c| {
            if c == 0 {
                0.0
            } else {
                labels.len() as f64 / (present as f64 * c as f64)
            }
        })
        .collect();
    let weights: Vec<f64> = labels.iter().map(|&l| class_weights[l]).collect();
    let data: Vec<Vec<f32>> = features.iter().map(|f| f.values.clone()).collect();

    let trees = (0..config.n_trees)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(config.seed, t));
            let bootstrap: Vec<usize> =
                (0..data.len()).map(|_| rng.random_range(0..data.len())).collect();
            grow_tree(
                &data,
                labels,
                &weights,
                &bootstrap,
                n_classes,
                config.max_features,
                &mut rng,
            )
        })
        .collect();

    Ok(ForestModel { trees, n_classes, class_weights, seed: config.seed })
}

/// Averages the normalized leaf histograms over all trees; the predicted
/// class is the argmax with ties going to the lowest index.
pub fn forest_predict(model: &ForestModel, features: &FeatureVector70) -> (usize, Vec<f64>) {
    let mut probs = vec![0.0f64; model.n_classes];
    for tree in &model.trees {
        let hist = traverse(tree, &features.values);
        let total: f64 = hist.iter().sum();
        if total > 0.0 {
            for (p, &h) in probs.iter_mut().zip(hist) {
                *p += h / total;
            }
        }
    }
    for p in &mut probs {
        *p /= model.trees.len() as f64;
    }
    let mut best = 0usize;
    let mut best_p = f64::NEG_INFINITY;
    for (i, &p) in probs.iter().enumerate() {
        if p > best_p {
            best_p = p;
            best = i;
        }
    }
    (best, probs)
}

impl ForestModel {
    pub fn save_json(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self).map_err(|e| ForestError::Io(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| ForestError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load_json(path: &Path) -> Result<ForestModel> {
        let json = std::fs::read_to_string(path)
            .map_err(|e| ForestError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&json).map_err(|e| ForestError::Io(e.to_string()))
    }
}
