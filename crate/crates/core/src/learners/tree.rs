//! CART-style trees on a squared-error criterion. With binary 0/1 targets
//! the variance criterion coincides with Gini impurity, so one builder
//! serves both the classification trees and the regression trees used by
//! the meta-combiner.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    /// Mean target of the leaf the row falls into. Rows go left when the
    /// feature value is strictly below the threshold.
    pub fn predict(&self, row: &[f64]) -> f64 {
        match self {
            TreeNode::Leaf { value } => *value,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if row[*feature] < *threshold {
                    left.predict(row)
                } else {
                    right.predict(row)
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// The split feature at the root, if any.
    pub fn root_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split { feature, .. } => Some(*feature),
        }
    }
}

pub struct TreeOptions {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features examined per split; 0 means all.
    pub mtry: usize,
}

/// Builds a tree over the given row indices. When `mtry` is nonzero each
/// split examines a random feature subset drawn from `rng`; tie-breaking is
/// by feature index then threshold, so the result is deterministic for a
/// fixed rng state.
pub fn build_tree(
    x: &[Vec<f64>],
    y: &[f64],
    indices: &[usize],
    opts: &TreeOptions,
    rng: &mut ChaCha8Rng,
) -> TreeNode {
    let n = indices.len();
    let mean = indices.iter().map(|&i| y[i]).sum::<f64>() / n as f64;
    if opts.max_depth == 0 || n < 2 * opts.min_leaf || n < 2 {
        return TreeNode::Leaf { value: mean };
    }
    let sse: f64 = indices.iter().map(|&i| (y[i] - mean).powi(2)).sum();
    if sse < 1e-12 {
        return TreeNode::Leaf { value: mean };
    }

    let p = x[0].len();
    let features: Vec<usize> = if opts.mtry == 0 || opts.mtry >= p {
        (0..p).collect()
    } else {
        let mut all: Vec<usize> = (0..p).collect();
        all.shuffle(rng);
        let mut chosen: Vec<usize> = all[..opts.mtry].to_vec();
        chosen.sort_unstable();
        chosen
    };

    let mut best: Option<(f64, usize, f64)> = None; // (sse, feature, threshold)
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for &f in &features {
        order.clear();
        order.extend_from_slice(indices);
        order.sort_by(|&a, &b| x[a][f].partial_cmp(&x[b][f]).unwrap().then(a.cmp(&b)));

        let total_sum: f64 = indices.iter().map(|&i| y[i]).sum();
        let total_sq: f64 = indices.iter().map(|&i| y[i] * y[i]).sum();
        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        for (count, w) in order.windows(2).enumerate() {
            let i = w[0];
            left_sum += y[i];
            left_sq += y[i] * y[i];
            let nl = count + 1;
            let nr = n - nl;
            if x[w[1]][f] <= x[i][f] {
                continue; // no threshold between equal values
            }
            if nl < opts.min_leaf || nr < opts.min_leaf {
                continue;
            }
            let right_sum = total_sum - left_sum;
            let right_sq = total_sq - left_sq;
            let sse_split = (left_sq - left_sum * left_sum / nl as f64)
                + (right_sq - right_sum * right_sum / nr as f64);
            if best.map_or(true, |(b, _, _)| sse_split < b - 1e-12) {
                // The midpoint of two nearly-equal floats can round down to
                // the lower value, which would leave the left child empty
                // under the strict `< threshold` rule; fall back to the
                // upper value, which still separates the pair.
                let mut threshold = 0.5 * (x[i][f] + x[w[1]][f]);
                if threshold <= x[i][f] {
                    threshold = x[w[1]][f];
                }
                best = Some((sse_split, f, threshold));
            }
        }
    }

    let Some((best_sse, feature, threshold)) = best else {
        return TreeNode::Leaf { value: mean };
    };
    if best_sse >= sse - 1e-12 {
        return TreeNode::Leaf { value: mean };
    }

    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
        indices.iter().partition(|&&i| x[i][feature] < threshold);
    let child_opts = TreeOptions {
        max_depth: opts.max_depth - 1,
        min_leaf: opts.min_leaf,
        mtry: opts.mtry,
    };
    let left = build_tree(x, y, &left_idx, &child_opts, rng);
    let right = build_tree(x, y, &right_idx, &child_opts, rng);
    TreeNode::Split {
        feature,
        threshold,
        left: Box::new(left),
        right: Box::new(right),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeNode>,
    /// true: score is the fraction of trees voting positive (classifier);
    /// false: score is the mean of leaf values (regression combiner).
    pub vote: bool,
}

impl ForestModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let acc: f64 = self
            .trees
            .iter()
            .map(|t| {
                let v = t.predict(row);
                if self.vote {
                    if v >= 0.5 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    v
                }
            })
            .sum();
        acc / self.trees.len() as f64
    }

    pub fn per_tree(&self, row: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict(row)).collect()
    }
}

pub struct ForestOptions {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// 0 selects ceil(sqrt(p)).
    pub mtry: usize,
    pub bootstrap: bool,
    pub vote: bool,
}

pub fn build_forest(
    x: &[Vec<f64>],
    y: &[f64],
    opts: &ForestOptions,
    rng: &mut ChaCha8Rng,
) -> ForestModel {
    let n = x.len();
    let p = x[0].len();
    let mtry = if opts.mtry == 0 {
        (p as f64).sqrt().ceil() as usize
    } else {
        opts.mtry
    };
    let tree_opts = TreeOptions {
        max_depth: opts.max_depth,
        min_leaf: opts.min_leaf,
        mtry,
    };
    let trees = (0..opts.n_trees)
        .map(|_| {
            let indices: Vec<usize> = if opts.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            build_tree(x, y, &indices, &tree_opts, rng)
        })
        .collect();
    ForestModel {
        trees,
        vote: opts.vote,
    }
}
