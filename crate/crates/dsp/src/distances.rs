//! Pairwise squared-distance summaries of labeled feature clusters.

/// Five-number summary of one group's pairwise squared distances; whisker
/// ends are the lower and upper deciles.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSummary {
    pub group: String,
    pub decile10: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub decile90: f64,
    pub n_pairs: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ClusterDistances {
    pub summaries: Vec<DistanceSummary>,
    /// Groups skipped because they hold fewer than two vectors.
    pub skipped: Vec<String>,
}

/// Linear-interpolation quantile of a sorted slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// All pairwise squared Euclidean distances within each group, summarized
/// by deciles, quartiles, and the median. Singleton groups are skipped.
pub fn cluster_distances(groups: &[(String, Vec<Vec<f64>>)]) -> ClusterDistances {
    let mut out = ClusterDistances::default();
    for (name, vectors) in groups {
        if vectors.len() < 2 {
            out.skipped.push(name.clone());
            continue;
        }
        let mut distances = Vec::with_capacity(vectors.len() * (vectors.len() - 1) / 2);
        for i in 0..vectors.len() {
            for j in i + 1..vectors.len() {
                distances.push(squared_distance(&vectors[i], &vectors[j]));
            }
        }
        distances.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.summaries.push(DistanceSummary {
            group: name.clone(),
            decile10: quantile(&distances, 0.10),
            q25: quantile(&distances, 0.25),
            median: quantile(&distances, 0.50),
            q75: quantile(&distances, 0.75),
            decile90: quantile(&distances, 0.90),
            n_pairs: distances.len(),
        });
    }
    out
}
