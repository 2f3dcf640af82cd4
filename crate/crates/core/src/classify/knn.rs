//! K-nearest-neighbour voting on standardized features.

use serde::{Deserialize, Serialize};

use crate::error::ArcError;
use crate::Result;

/// Fitted KNN model: the standardized training set plus k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub vectors: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub k: usize,
}

impl KnnModel {
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, k: usize) -> Result<Self> {
        if k == 0 || k.is_multiple_of(2) {
            return Err(ArcError::InvalidParam(format!(
                "k must be odd and >= 1, got {k}"
            )));
        }
        if x.is_empty() || x.len() != y.len() {
            return Err(ArcError::Model("KNN needs equal-length inputs".into()));
        }
        Ok(Self {
            vectors: x.to_vec(),
            labels: y.to_vec(),
            n_classes,
            k,
        })
    }

    /// Vote fractions per class among the k nearest neighbours.
    ///
    /// Distance ties break on the class index so that predictions do not
    /// depend on training-set order.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let mut dist: Vec<(f64, usize)> = self
            .vectors
            .iter()
            .zip(&self.labels)
            .map(|(v, &c)| {
                let d2: f64 = v.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2, c)
            })
            .collect();
        dist.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let k = self.k.min(dist.len());
        let mut votes = vec![0.0; self.n_classes];
        for &(_, c) in dist.iter().take(k) {
            votes[c] += 1.0;
        }
        for v in &mut votes {
            *v /= k as f64;
        }
        votes
    }
}
