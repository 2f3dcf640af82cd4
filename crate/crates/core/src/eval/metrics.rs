//! Confusion matrix, per-class rates, binomial confidence interval and the
//! Fisher separability criterion.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::classify::Dataset;
use crate::error::ArcError;
use crate::signal::RegimeLabel;
use crate::Result;

/// Precision/recall/F1 for one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Confusion matrix (rows = truth, cols = predicted, fixed class order) with
/// derived rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMetrics {
    pub confusion: Vec<Vec<usize>>,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_f1: f64,
}

/// Standard confusion matrix and rates over the three regimes.
///
/// F1 is `2PR/(P+R)`, defined as 0 when `P + R = 0`; precision of a class
/// never predicted and recall of a class never present are 0.
pub fn confusion_and_metrics(
    truth: &[RegimeLabel],
    pred: &[RegimeLabel],
) -> Result<ConfusionMetrics> {
    if truth.len() != pred.len() {
        return Err(ArcError::DimensionMismatch {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(ArcError::EmptyInput("no predictions to score".into()));
    }
    let n_classes = RegimeLabel::ALL.len();
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    for (&t, &p) in truth.iter().zip(pred) {
        confusion[t.index()][p.index()] += 1;
    }
    let total = truth.len();
    let trace: usize = (0..n_classes).map(|i| confusion[i][i]).sum();
    let accuracy = trace as f64 / total as f64;

    let mut per_class = Vec::with_capacity(n_classes);
    for (c, confusion_row) in confusion.iter().enumerate() {
        let tp = confusion_row[c] as f64;
        let row: usize = confusion_row.iter().sum();
        let col: usize = confusion.iter().map(|r| r[c]).sum();
        let recall = if row > 0 { tp / row as f64 } else { 0.0 };
        let precision = if col > 0 { tp / col as f64 } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class.push(ClassMetrics {
            precision,
            recall,
            f1,
        });
    }
    let macro_f1 = per_class.iter().map(|m| m.f1).sum::<f64>() / n_classes as f64;
    Ok(ConfusionMetrics {
        confusion,
        accuracy,
        per_class,
        macro_f1,
    })
}

/// Wald binomial confidence interval `p_hat +/- z*sqrt(p_hat(1-p_hat)/n)`,
/// clamped to `[0, 1]`.
pub fn binomial_ci(accuracy: f64, n: usize, level: f64) -> Result<(f64, f64)> {
    if accuracy.is_nan() || !(0.0..=1.0).contains(&accuracy) {
        return Err(ArcError::InvalidParam(format!(
            "accuracy {accuracy} outside [0, 1]"
        )));
    }
    if n == 0 {
        return Err(ArcError::InvalidParam("n must be >= 1".into()));
    }
    if level.is_nan() || level <= 0.0 || level >= 1.0 {
        return Err(ArcError::InvalidParam(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    let z = Normal::new(0.0, 1.0)
        .expect("unit normal")
        .inverse_cdf(0.5 + level / 2.0);
    let half = z * (accuracy * (1.0 - accuracy) / n as f64).sqrt();
    Ok(((accuracy - half).max(0.0), (accuracy + half).min(1.0)))
}

/// Wilson score interval; more robust than Wald at small `n` or extreme
/// accuracies. Available as an alternative to [`binomial_ci`].
pub fn binomial_ci_wilson(accuracy: f64, n: usize, level: f64) -> Result<(f64, f64)> {
    if accuracy.is_nan() || !(0.0..=1.0).contains(&accuracy) {
        return Err(ArcError::InvalidParam(format!(
            "accuracy {accuracy} outside [0, 1]"
        )));
    }
    if n == 0 {
        return Err(ArcError::InvalidParam("n must be >= 1".into()));
    }
    if level.is_nan() || level <= 0.0 || level >= 1.0 {
        return Err(ArcError::InvalidParam(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    let z = Normal::new(0.0, 1.0)
        .expect("unit normal")
        .inverse_cdf(0.5 + level / 2.0);
    let nf = n as f64;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (accuracy + z2 / (2.0 * nf)) / denom;
    let half = z * (accuracy * (1.0 - accuracy) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    Ok(((center - half).max(0.0), (center + half).min(1.0)))
}

/// Fisher criterion `J = ||mu_a - mu_b||^2 / Tr(Sigma_a + Sigma_b)` between
/// two classes, with population covariances.
pub fn fisher_criterion(ds: &Dataset, a: RegimeLabel, b: RegimeLabel) -> Result<f64> {
    let (mu_a, var_a) = class_moments(ds, a)?;
    let (mu_b, var_b) = class_moments(ds, b)?;
    let dist2: f64 = mu_a.iter().zip(&mu_b).map(|(x, y)| (x - y) * (x - y)).sum();
    let trace: f64 = var_a.iter().sum::<f64>() + var_b.iter().sum::<f64>();
    if trace == 0.0 {
        return Err(ArcError::InvalidParam(
            "both classes constant: Tr(Sigma_a + Sigma_b) = 0".into(),
        ));
    }
    Ok(dist2 / trace)
}

/// Per-feature Fisher ratios `(mu_a - mu_b)^2 / (var_a + var_b)`; features
/// with zero pooled variance report 0.
pub fn fisher_per_feature(ds: &Dataset, a: RegimeLabel, b: RegimeLabel) -> Result<Vec<f64>> {
    let (mu_a, var_a) = class_moments(ds, a)?;
    let (mu_b, var_b) = class_moments(ds, b)?;
    Ok(mu_a
        .iter()
        .zip(&mu_b)
        .zip(var_a.iter().zip(&var_b))
        .map(|((ma, mb), (va, vb))| {
            let denom = va + vb;
            if denom > 0.0 {
                (ma - mb) * (ma - mb) / denom
            } else {
                0.0
            }
        })
        .collect())
}

fn class_moments(ds: &Dataset, class: RegimeLabel) -> Result<(Vec<f64>, Vec<f64>)> {
    let rows: Vec<&Vec<f64>> = ds
        .vectors
        .iter()
        .zip(&ds.labels)
        .filter(|(_, &l)| l == class)
        .map(|(v, _)| v)
        .collect();
    if rows.len() < 2 {
        return Err(ArcError::InvalidParam(format!(
            "class {class} needs >= 2 samples, has {}",
            rows.len()
        )));
    }
    let d = rows[0].len();
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for row in &rows {
        for (m, v) in mean.iter_mut().zip(row.iter()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; d];
    for row in &rows {
        for ((s, v), m) in var.iter_mut().zip(row.iter()).zip(&mean) {
            let c = v - m;
            *s += c * c;
        }
    }
    for s in &mut var {
        *s /= n;
    }
    Ok((mean, var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use RegimeLabel::{Extinction, Stable, Transient};

    #[test]
    fn perfect_predictions_give_identity_diagonal() {
        let truth = vec![Transient, Stable, Extinction, Stable];
        let m = confusion_and_metrics(&truth, &truth).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.confusion[0][0], 1);
        assert_eq!(m.confusion[1][1], 2);
        assert_eq!(m.confusion[2][2], 1);
        for c in &m.per_class {
            assert_eq!(c.f1, 1.0);
        }
        assert_eq!(m.macro_f1, 1.0);
    }

    #[test]
    fn two_of_36_wrong_gives_944() {
        // the 34/36 arithmetic behind a 94.4% hold-out accuracy
        let mut truth = Vec::new();
        let mut pred = Vec::new();
        for c in [Transient, Stable, Extinction] {
            for _ in 0..12 {
                truth.push(c);
                pred.push(c);
            }
        }
        pred[0] = Stable;
        pred[12] = Extinction;
        let m = confusion_and_metrics(&truth, &pred).unwrap();
        assert_relative_eq!(m.accuracy, 34.0 / 36.0, max_relative = 1e-12);
        assert_relative_eq!(m.accuracy, 0.9444, max_relative = 1e-3);
    }

    #[test]
    fn all_wrong_zeroes_rates() {
        let truth = vec![Transient; 5];
        let pred = vec![Stable; 5];
        let m = confusion_and_metrics(&truth, &pred).unwrap();
        assert_eq!(m.accuracy, 0.0);
        assert_eq!(m.per_class[Transient.index()].recall, 0.0);
        assert_eq!(m.per_class[Stable.index()].precision, 0.0);
        assert_eq!(m.per_class[Transient.index()].f1, 0.0);
        assert_eq!(m.per_class[Stable.index()].f1, 0.0);
    }

    #[test]
    fn confusion_rows_sum_to_truth_counts() {
        let truth = vec![
            Stable, Stable, Transient, Extinction, Extinction, Extinction,
        ];
        let pred = vec![Stable, Transient, Transient, Stable, Extinction, Extinction];
        let m = confusion_and_metrics(&truth, &pred).unwrap();
        let row_sums: Vec<usize> = m.confusion.iter().map(|r| r.iter().sum()).collect();
        assert_eq!(row_sums, vec![1, 2, 3]);
        let trace: usize = (0..3).map(|i| m.confusion[i][i]).sum();
        assert_relative_eq!(m.accuracy, trace as f64 / 6.0);
        assert!(confusion_and_metrics(&truth, &pred[..3]).is_err());
    }

    #[test]
    fn wald_interval_reproduces_published_values() {
        let (lo, hi) = binomial_ci(0.8707, 147, 0.95).unwrap();
        assert!((lo - 0.8165).abs() <= 5e-4, "low {lo}");
        assert!((hi - 0.9250).abs() <= 5e-4, "high {hi}");
    }

    #[test]
    fn wald_interval_edge_cases() {
        let (lo, hi) = binomial_ci(1.0, 100, 0.95).unwrap();
        assert_eq!((lo, hi), (1.0, 1.0));

        let (lo, hi) = binomial_ci(0.5, 4, 0.95).unwrap();
        // 0.5 +/- 1.96 * 0.25
        assert_relative_eq!(lo, 0.5 - 1.959964 * 0.25, max_relative = 1e-5);
        assert_relative_eq!(hi, 0.5 + 1.959964 * 0.25, max_relative = 1e-5);
        assert!((lo - 0.01).abs() < 1e-3 && (hi - 0.99).abs() < 1e-3);

        assert!(binomial_ci(1.5, 10, 0.95).is_err());
        assert!(binomial_ci(0.5, 0, 0.95).is_err());
        assert!(binomial_ci(0.5, 10, 1.0).is_err());
    }

    #[test]
    fn wilson_interval_stays_inside_unit_range_and_brackets_p() {
        // Wilson never needs clamping at the extremes, unlike Wald
        let (lo, hi) = binomial_ci_wilson(1.0, 20, 0.95).unwrap();
        assert!(lo > 0.7 && lo < 1.0 && hi == 1.0, "[{lo}, {hi}]");
        let (lo, hi) = binomial_ci_wilson(0.8707, 147, 0.95).unwrap();
        assert!(lo < 0.8707 && 0.8707 < hi);
        // close to Wald at this n but shifted toward 1/2
        let (wlo, whi) = binomial_ci(0.8707, 147, 0.95).unwrap();
        assert!((lo - wlo).abs() < 0.01 && (hi - whi).abs() < 0.01);
        assert!(lo < wlo && hi < whi);
    }

    #[test]
    fn wald_width_shrinks_as_inverse_sqrt_n() {
        let width = |n: usize| {
            let (lo, hi) = binomial_ci(0.3, n, 0.95).unwrap();
            hi - lo
        };
        assert_relative_eq!(width(100), 2.0 * width(400), max_relative = 1e-12);
        assert_relative_eq!(width(50), 2.0 * width(200), max_relative = 1e-12);
    }

    fn one_d(a_vals: &[f64], b_vals: &[f64]) -> Dataset {
        let mut vectors = Vec::new();
        let mut labels = Vec::new();
        for &v in a_vals {
            vectors.push(vec![v]);
            labels.push(Stable);
        }
        for &v in b_vals {
            vectors.push(vec![v]);
            labels.push(Extinction);
        }
        Dataset::new(vectors, labels).unwrap()
    }

    #[test]
    fn fisher_identical_distributions_give_zero() {
        let ds = one_d(&[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0]);
        assert_eq!(fisher_criterion(&ds, Stable, Extinction).unwrap(), 0.0);
    }

    #[test]
    fn fisher_hand_arithmetic() {
        // means 0 vs 5, population variances 1 and 1 -> 25/2
        let ds = one_d(&[-1.0, 1.0], &[4.0, 6.0]);
        assert_relative_eq!(
            fisher_criterion(&ds, Stable, Extinction).unwrap(),
            12.5,
            max_relative = 1e-12
        );
        // means 0 vs 4, variances 1 and 1 -> 16/2
        let ds = one_d(&[-1.0, 1.0], &[3.0, 5.0]);
        assert_relative_eq!(
            fisher_criterion(&ds, Stable, Extinction).unwrap(),
            8.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn fisher_constant_classes_error() {
        let ds = one_d(&[2.0, 2.0], &[2.0, 2.0]);
        assert!(fisher_criterion(&ds, Stable, Extinction).is_err());
        // single-sample class
        let ds = one_d(&[1.0], &[2.0, 3.0]);
        assert!(fisher_criterion(&ds, Stable, Extinction).is_err());
    }

    #[test]
    fn fisher_per_feature_matches_univariate() {
        let mut vectors = Vec::new();
        let mut labels = Vec::new();
        for v in [[-1.0, 10.0], [1.0, 12.0]] {
            vectors.push(v.to_vec());
            labels.push(Stable);
        }
        for v in [[4.0, 10.0], [6.0, 12.0]] {
            vectors.push(v.to_vec());
            labels.push(Extinction);
        }
        let ds = Dataset::new(vectors, labels).unwrap();
        let per = fisher_per_feature(&ds, Stable, Extinction).unwrap();
        assert_relative_eq!(per[0], 12.5, max_relative = 1e-12);
        assert_eq!(per[1], 0.0); // identical means
    }
}
