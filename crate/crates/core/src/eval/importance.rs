//! Permutation feature importance: mean accuracy drop when one feature
//! column is shuffled.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classify::{Dataset, TrainedModel};
use crate::error::ArcError;
use crate::seed;
use crate::signal::RegimeLabel;
use crate::Result;

/// Importance score of one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    /// Mean accuracy drop over the repeats; near 0 for uninformative
    /// features, possibly slightly negative from shuffle noise.
    pub score: f64,
}

/// Permutation importance for a fitted model on a held-out set.
pub fn permutation_importance(
    model: &TrainedModel,
    test: &Dataset,
    repeats: usize,
    master_seed: u64,
) -> Result<Vec<FeatureImportance>> {
    permutation_importance_with(&|v| Ok(model.predict(v)?.0), test, repeats, master_seed)
}

/// Same computation against any prediction function; lets tests supply
/// constant or hand-built predictors.
pub fn permutation_importance_with(
    predict: &dyn Fn(&[f64]) -> Result<RegimeLabel>,
    test: &Dataset,
    repeats: usize,
    master_seed: u64,
) -> Result<Vec<FeatureImportance>> {
    if test.is_empty() {
        return Err(ArcError::EmptyInput("empty test set".into()));
    }
    if repeats == 0 {
        return Err(ArcError::InvalidParam("repeats must be >= 1".into()));
    }
    let n = test.len();
    let baseline = accuracy_of(predict, &test.vectors, &test.labels)?;

    let mut out = Vec::with_capacity(test.dim());
    for feature in 0..test.dim() {
        let mut drop_sum = 0.0;
        for rep in 0..repeats {
            let mut rng = seed::rng(seed::derive(master_seed, (feature * repeats + rep) as u64));
            // Fisher-Yates on the column values
            let mut column: Vec<f64> = test.vectors.iter().map(|v| v[feature]).collect();
            for i in (1..n).rev() {
                let j = rng.gen_range(0..=i);
                column.swap(i, j);
            }
            let shuffled: Vec<Vec<f64>> = test
                .vectors
                .iter()
                .zip(&column)
                .map(|(v, &c)| {
                    let mut row = v.clone();
                    row[feature] = c;
                    row
                })
                .collect();
            drop_sum += baseline - accuracy_of(predict, &shuffled, &test.labels)?;
        }
        out.push(FeatureImportance {
            feature: test.feature_names[feature].clone(),
            score: drop_sum / repeats as f64,
        });
    }
    out.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap());
    Ok(out)
}

fn accuracy_of(
    predict: &dyn Fn(&[f64]) -> Result<RegimeLabel>,
    vectors: &[Vec<f64>],
    labels: &[RegimeLabel],
) -> Result<f64> {
    let mut hits = 0usize;
    for (v, &l) in vectors.iter().zip(labels) {
        if predict(v)? == l {
            hits += 1;
        }
    }
    Ok(hits as f64 / vectors.len() as f64)
}
