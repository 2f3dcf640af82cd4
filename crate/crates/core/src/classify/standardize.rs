//! Per-feature standardization fitted on the training set.

use serde::{Deserialize, Serialize};

use crate::error::ArcError;
use crate::Result;

/// Affine per-feature transform to zero mean and unit variance.
///
/// Zero-variance features are dropped; the `mask` records which original
/// columns survive. `apply` output dimension equals the retained count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    /// Training mean per original feature.
    pub mean: Vec<f64>,
    /// Training population standard deviation per original feature.
    pub std: Vec<f64>,
    /// True where the feature is retained (std > 0).
    pub mask: Vec<bool>,
}

impl Standardizer {
    /// Fit on training rows (each of equal dimension).
    ///
    /// Column sums run over sorted values, so the fitted statistics are
    /// bit-identical under any permutation of the training rows.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(ArcError::EmptyInput("cannot standardize empty set".into()));
        }
        let d = rows[0].len();
        for row in rows {
            if row.len() != d {
                return Err(ArcError::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
        }
        let mut mean = vec![0.0; d];
        let mut std = vec![0.0; d];
        for j in 0..d {
            let mut column: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            column.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let m = column.iter().sum::<f64>() / n as f64;
            let var = column.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
            mean[j] = m;
            std[j] = var.sqrt();
        }
        let mask: Vec<bool> = std.iter().map(|&s| s > 0.0).collect();
        Ok(Self { mean, std, mask })
    }

    /// Original feature dimension.
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    /// Retained dimension after masking.
    pub fn output_dim(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Standardize one vector, dropping masked columns.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.input_dim() {
            return Err(ArcError::DimensionMismatch {
                expected: self.input_dim(),
                got: v.len(),
            });
        }
        Ok(v.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .zip(&self.mask)
            .filter(|(_, &keep)| keep)
            .map(|(((x, m), s), _)| (x - m) / s)
            .collect())
    }

    /// Standardize a batch.
    pub fn apply_all(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.apply(r)).collect()
    }
}
