//! Statistical behavior of the balanced forest on synthetic blob data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use timbre_forest::{forest_predict, forest_train, FeatureVector70, ForestConfig, FEATURE_DIM};

fn embed(x: f32, y: f32) -> FeatureVector70 {
    let mut values = vec![0.0f32; FEATURE_DIM];
    values[0] = x;
    values[1] = y;
    FeatureVector70::new(values).unwrap()
}

/// Gaussian-ish blob via the sum of uniforms.
fn blob_point<R: Rng>(cx: f32, cy: f32, spread: f32, rng: &mut R) -> (f32, f32) {
    let mut noise = || -> f32 {
        let s: f32 = (0..6).map(|_| rng.random_range(-1.0f32..1.0)).sum();
        s / 6.0 * spread
    };
    (cx + noise(), cy + noise())
}

fn blobs(
    centers: &[(f32, f32, usize)],
    n_each: &[usize],
    spread: f32,
    seed: u64,
) -> (Vec<FeatureVector70>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (&(cx, cy, label), &n) in centers.iter().zip(n_each) {
        for _ in 0..n {
            let (x, y) = blob_point(cx, cy, spread, &mut rng);
            features.push(embed(x, y));
            labels.push(label);
        }
    }
    (features, labels)
}

fn train_accuracy(
    model: &timbre_forest::ForestModel,
    features: &[FeatureVector70],
    labels: &[usize],
) -> f64 {
    let correct = features
        .iter()
        .zip(labels)
        .filter(|(f, &l)| forest_predict(model, f).0 == l)
        .count();
    correct as f64 / labels.len() as f64
}

#[test]
fn separable_blobs_reach_99_percent_training_accuracy() {
    let (features, labels) = blobs(
        &[(0.0, 0.0, 0), (8.0, 8.0, 1)],
        &[500, 500],
        1.0,
        11,
    );
    let model = forest_train(&features, &labels, &ForestConfig::default()).unwrap();
    let acc = train_accuracy(&model, &features, &labels);
    assert!(acc >= 0.99, "training accuracy {acc}");
}

#[test]
fn duplicating_every_point_leaves_predictions_unchanged() {
    // Inverse-frequency weights are invariant to uniform duplication; with
    // the fixed seed protocol and a separable problem the duplicated
    // training set yields the same predictions on the original points.
    let (features, labels) = blobs(
        &[(0.0, 0.0, 0), (9.0, -6.0, 1)],
        &[150, 150],
        1.0,
        12,
    );
    let mut doubled_features = features.clone();
    doubled_features.extend(features.iter().cloned());
    let mut doubled_labels = labels.clone();
    doubled_labels.extend(labels.iter().cloned());

    let config = ForestConfig { n_trees: 50, ..Default::default() };
    let base = forest_train(&features, &labels, &config).unwrap();
    let doubled = forest_train(&doubled_features, &doubled_labels, &config).unwrap();
    for f in &features {
        assert_eq!(forest_predict(&base, f).0, forest_predict(&doubled, f).0);
    }
}

#[test]
fn balancing_keeps_minority_recall_close_to_majority() {
    // 9:1 imbalance with overlapping blobs; balanced weights keep the
    // minority class from being swallowed.
    let (features, labels) = blobs(
        &[(0.0, 0.0, 0), (2.4, 2.4, 1)],
        &[900, 100],
        1.2,
        13,
    );
    let model = forest_train(&features, &labels, &ForestConfig::default()).unwrap();
    let recall = |class: usize| {
        let of_class: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == class).then_some(i))
            .collect();
        let hits = of_class
            .iter()
            .filter(|&&i| forest_predict(&model, &features[i]).0 == class)
            .count();
        hits as f64 / of_class.len() as f64
    };
    let majority = recall(0);
    let minority = recall(1);
    assert!(
        (majority - minority).abs() <= 0.10,
        "majority recall {majority} vs minority {minority}"
    );
}

#[test]
fn monotone_feature_transforms_preserve_training_predictions() {
    // A strictly increasing per-feature rescale keeps every ordering, so
    // the same seed schedule grows structurally identical trees and the
    // training-set predictions are unchanged.
    let (features, labels) = blobs(
        &[(0.5, 1.0, 0), (4.0, -2.0, 1), (-3.0, 3.0, 2)],
        &[120, 120, 120],
        1.0,
        14,
    );
    let transformed: Vec<FeatureVector70> = features
        .iter()
        .map(|f| {
            let values = f.values.iter().map(|&v| v * v * v).collect();
            FeatureVector70::new(values).unwrap()
        })
        .collect();

    let config = ForestConfig { n_trees: 30, ..Default::default() };
    let base = forest_train(&features, &labels, &config).unwrap();
    let re_derived = forest_train(&transformed, &labels, &config).unwrap();
    for (f, t) in features.iter().zip(&transformed) {
        assert_eq!(forest_predict(&base, f).0, forest_predict(&re_derived, t).0);
    }
}
