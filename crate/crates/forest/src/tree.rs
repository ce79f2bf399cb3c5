//! CART decision trees: Gini-impurity splits over a random feature subset
//! per node, grown until pure or under two weighted samples.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Arena node; index 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f32,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Weighted class counts of the training samples reaching here.
        histogram: Vec<f64>,
    },
}

/// Minimum weighted sample mass a node needs before a split is attempted.
pub const MIN_SPLIT_WEIGHT: f64 = 2.0;

struct Grower<'a> {
    data: &'a [Vec<f32>],
    labels: &'a [usize],
    weights: &'a [f64],
    n_classes: usize,
    max_features: usize,
    nodes: Vec<Node>,
}

/// Grows one tree over `indices` (bootstrap sample positions, duplicates
/// allowed). Candidate features are drawn per node from `rng`.
pub fn grow_tree<R: Rng>(
    data: &[Vec<f32>],
    labels: &[usize],
    weights: &[f64],
    indices: &[usize],
    n_classes: usize,
    max_features: usize,
    rng: &mut R,
) -> Vec<Node> {
    let mut grower = Grower {
        data,
        labels,
        weights,
        n_classes,
        max_features,
        nodes: Vec::new(),
    };
    let mut indices = indices.to_vec();
    grower.grow(&mut indices, rng);
    grower.nodes
}

impl<'a> Grower<'a> {
    fn histogram(&self, indices: &[usize]) -> Vec<f64> {
        let mut hist = vec![0.0; self.n_classes];
        for &i in indices {
            hist[self.labels[i]] += self.weights[i];
        }
        hist
    }

    fn gini(hist: &[f64]) -> f64 {
        let total: f64 = hist.iter().sum();
        if total <= 0.0 {
            return 0.0;
        }
        1.0 - hist.iter().map(|&w| (w / total).powi(2)).sum::<f64>()
    }

    fn grow<R: Rng>(&mut self, indices: &mut [usize], rng: &mut R) -> usize {
        let hist = self.histogram(indices);
        let total: f64 = hist.iter().sum();
        let pure = hist.iter().filter(|&&w| w > 0.0).count() <= 1;
        if pure || total < MIN_SPLIT_WEIGHT {
            let id = self.nodes.len();
            self.nodes.push(Node::Leaf { histogram: hist });
            return id;
        }

        let n_features = self.data[0].len();
        let candidates = sample_features(n_features, self.max_features, rng);
        let parent_impurity = Self::gini(&hist);

        let mut best: Option<(f64, usize, f32)> = None; // (gain, feature, threshold)
        for &feature in &candidates {
            let mut order: Vec<usize> = indices.to_vec();
            order.sort_by(|&a, &b| {
                self.data[a][feature]
                    .partial_cmp(&self.data[b][feature])
                    .unwrap()
            });
            let mut left = vec![0.0; self.n_classes];
            let mut left_total = 0.0;
            for w in 0..order.len() - 1 {
                let i = order[w];
                left[self.labels[i]] += self.weights[i];
                left_total += self.weights[i];
                let (a, b) = (self.data[i][feature], self.data[order[w + 1]][feature]);
                if a == b {
                    continue;
                }
                let right: Vec<f64> = hist.iter().zip(&left).map(|(h, l)| h - l).collect();
                let right_total = total - left_total;
                let weighted = (left_total / total) * Self::gini(&left)
                    + (right_total / total) * Self::gini(&right);
                let gain = parent_impurity - weighted;
                let threshold = (a + b) / 2.0;
                if best.map_or(gain > 1e-12, |(g, _, _)| gain > g) {
                    best = Some((gain, feature, threshold));
                }
            }
        }

        let Some((_, feature, threshold)) = best else {
            let id = self.nodes.len();
            self.nodes.push(Node::Leaf { histogram: hist });
            return id;
        };

        let split_at = partition(indices, |i| self.data[i][feature] <= threshold);
        // Reserve our slot before the children claim theirs.
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { histogram: Vec::new() });
        let (left_ids, right_ids) = indices.split_at_mut(split_at);
        let left = self.grow(left_ids, rng);
        let right = self.grow(right_ids, rng);
        self.nodes[id] = Node::Split { feature, threshold, left, right };
        id
    }
}

/// Stable partition: `true` items first; returns the boundary.
fn partition(indices: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let mut reordered: Vec<usize> = indices.iter().copied().filter(|&i| pred(i)).collect();
    let split = reordered.len();
    reordered.extend(indices.iter().copied().filter(|&i| !pred(i)));
    indices.copy_from_slice(&reordered);
    split
}

/// `k` distinct feature indices in draw order (partial Fisher-Yates).
fn sample_features<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let k = k.min(n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

/// Walks a tree to its leaf histogram.
pub fn traverse<'t>(nodes: &'t [Node], features: &[f32]) -> &'t [f64] {
    let mut at = 0usize;
    loop {
        match &nodes[at] {
            Node::Leaf { histogram } => return histogram,
            Node::Split { feature, threshold, left, right } => {
                at = if features[*feature] <= *threshold { *left } else { *right };
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_sample_grows_a_pure_leaf() {
        let data = vec![vec![1.0, 2.0]];
        let labels = vec![1];
        let weights = vec![1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let nodes = grow_tree(&data, &labels, &weights, &[0], 3, 2, &mut rng);
        assert_eq!(nodes.len(), 1);
        let hist = traverse(&nodes, &[0.0, 0.0]);
        assert_eq!(hist, &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn separable_points_split_perfectly() {
        let data: Vec<Vec<f32>> = (0..20)
            .map(|i| vec![if i < 10 { i as f32 } else { 100.0 + i as f32 }, 0.5])
            .collect();
        let labels: Vec<usize> = (0..20).map(|i| usize::from(i >= 10)).collect();
        let weights = vec![1.0; 20];
        let indices: Vec<usize> = (0..20).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let nodes = grow_tree(&data, &labels, &weights, &indices, 2, 2, &mut rng);
        for (x, expect) in [(5.0f32, 0usize), (150.0, 1)] {
            let hist = traverse(&nodes, &[x, 0.5]);
            let pred = hist
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(pred, expect);
        }
    }

    #[test]
    fn leaf_histograms_sum_to_the_weight_reaching_them() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<Vec<f32>> = (0..40)
            .map(|_| vec![rng.random_range(-1.0f32..1.0), rng.random_range(-1.0f32..1.0)])
            .collect();
        let labels: Vec<usize> = (0..40).map(|i| i % 3).collect();
        let weights: Vec<f64> = (0..40).map(|i| 0.5 + (i % 4) as f64).collect();
        let indices: Vec<usize> = (0..40).collect();
        let total: f64 = indices.iter().map(|&i| weights[i]).sum();
        let nodes = grow_tree(&data, &labels, &weights, &indices, 3, 1, &mut rng);
        let leaf_total: f64 = nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { histogram } => Some(histogram.iter().sum::<f64>()),
                _ => None,
            })
            .sum();
        assert!((leaf_total - total).abs() < 1e-9);
    }
}
