//! Gini decision tree and seeded bagged ensemble.
//!
//! Splits are chosen from sorted feature values (midpoint thresholds, best
//! impurity decrease, ties broken by lowest feature index then lowest
//! threshold), so a single tree is invariant to training-set order.

use serde::{Deserialize, Serialize};

use crate::error::ArcError;
use crate::seed;
use crate::Result;
use rand::Rng;

/// Tree growth limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 12,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        /// Class frequencies at the leaf, summing to 1.
        freqs: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: TreeNode,
    pub n_classes: usize,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p
        })
        .sum::<f64>()
}

fn class_counts(y: &[usize], idx: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0usize; n_classes];
    for &i in idx {
        counts[y[i]] += 1;
    }
    counts
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn find_best_split(
    x: &[Vec<f64>],
    y: &[usize],
    idx: &[usize],
    n_classes: usize,
    min_leaf: usize,
) -> Option<BestSplit> {
    let n = idx.len();
    let parent_counts = class_counts(y, idx, n_classes);
    let parent_gini = gini(&parent_counts, n);
    let d = x[idx[0]].len();
    let mut best: Option<BestSplit> = None;

    #[allow(clippy::needless_range_loop)]
    for feature in 0..d {
        let mut order: Vec<usize> = idx.to_vec();
        order.sort_by(|&a, &b| x[a][feature].partial_cmp(&x[b][feature]).unwrap());

        let mut left_counts = vec![0usize; n_classes];
        let mut right_counts = parent_counts.clone();
        for pos in 1..n {
            let prev = order[pos - 1];
            left_counts[y[prev]] += 1;
            right_counts[y[prev]] -= 1;
            let (lo, hi) = (x[prev][feature], x[order[pos]][feature]);
            if lo == hi {
                continue;
            }
            if pos < min_leaf || n - pos < min_leaf {
                continue;
            }
            let threshold = 0.5 * (lo + hi);
            let g = parent_gini
                - (pos as f64 / n as f64) * gini(&left_counts, pos)
                - ((n - pos) as f64 / n as f64) * gini(&right_counts, n - pos);
            let better = match &best {
                None => g > 1e-12,
                Some(b) => {
                    g > b.gain + 1e-12
                        || ((g - b.gain).abs() <= 1e-12
                            && (feature, threshold) < (b.feature, b.threshold))
                }
            };
            if better {
                best = Some(BestSplit {
                    feature,
                    threshold,
                    gain: g,
                });
            }
        }
    }
    best
}

fn grow(
    x: &[Vec<f64>],
    y: &[usize],
    idx: &[usize],
    n_classes: usize,
    params: &TreeParams,
    depth: usize,
) -> TreeNode {
    let counts = class_counts(y, idx, n_classes);
    let total = idx.len();
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    if pure || depth >= params.max_depth || total < 2 * params.min_leaf {
        return leaf(&counts, total);
    }
    match find_best_split(x, y, idx, n_classes, params.min_leaf) {
        None => leaf(&counts, total),
        Some(split) => {
            let (mut left, mut right) = (Vec::new(), Vec::new());
            for &i in idx {
                if x[i][split.feature] <= split.threshold {
                    left.push(i);
                } else {
                    right.push(i);
                }
            }
            TreeNode::Split {
                feature: split.feature,
                threshold: split.threshold,
                left: Box::new(grow(x, y, &left, n_classes, params, depth + 1)),
                right: Box::new(grow(x, y, &right, n_classes, params, depth + 1)),
            }
        }
    }
}

fn leaf(counts: &[usize], total: usize) -> TreeNode {
    let t = total.max(1) as f64;
    TreeNode::Leaf {
        freqs: counts.iter().map(|&c| c as f64 / t).collect(),
    }
}

impl DecisionTree {
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, params: &TreeParams) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(ArcError::Model("tree needs equal-length inputs".into()));
        }
        let idx: Vec<usize> = (0..x.len()).collect();
        Ok(Self {
            root: grow(x, y, &idx, n_classes, params, 0),
            n_classes,
        })
    }

    /// Leaf class frequencies for one input.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { freqs } => return freqs.clone(),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }
}

/// Bagged decision trees over seeded bootstrap samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaggedTrees {
    pub trees: Vec<DecisionTree>,
    pub n_classes: usize,
}

/// Bagging settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaggedParams {
    pub n_trees: usize,
    pub bootstrap_fraction: f64,
}

impl Default for BaggedParams {
    fn default() -> Self {
        Self {
            n_trees: 30,
            bootstrap_fraction: 1.0,
        }
    }
}

impl BaggedTrees {
    pub fn fit(
        x: &[Vec<f64>],
        y: &[usize],
        n_classes: usize,
        tree_params: &TreeParams,
        params: &BaggedParams,
        master_seed: u64,
    ) -> Result<Self> {
        if params.n_trees == 0
            || params.bootstrap_fraction.is_nan()
            || params.bootstrap_fraction <= 0.0
        {
            return Err(ArcError::InvalidParam(
                "bagging needs n_trees >= 1 and bootstrap_fraction > 0".into(),
            ));
        }
        let n = x.len();
        let draw = ((n as f64 * params.bootstrap_fraction).round() as usize).max(1);
        let mut trees = Vec::with_capacity(params.n_trees);
        for t in 0..params.n_trees {
            let mut rng = seed::rng(seed::derive(master_seed, t as u64));
            let (mut bx, mut by) = (Vec::with_capacity(draw), Vec::with_capacity(draw));
            for _ in 0..draw {
                let i = rng.gen_range(0..n);
                bx.push(x[i].clone());
                by.push(y[i]);
            }
            trees.push(DecisionTree::fit(&bx, &by, n_classes, tree_params)?);
        }
        Ok(Self { trees, n_classes })
    }

    /// Mean of the per-tree leaf frequency vectors.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_classes];
        for tree in &self.trees {
            for (a, s) in acc.iter_mut().zip(tree.scores(x)) {
                *a += s;
            }
        }
        for a in &mut acc {
            *a /= self.trees.len() as f64;
        }
        acc
    }
}
