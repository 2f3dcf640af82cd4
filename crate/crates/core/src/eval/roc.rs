//! One-vs-rest ROC and precision-recall curves from real-valued scores.
//!
//! Both curves come from the same threshold sweep over the sorted distinct
//! scores (predict positive at `score >= t`). Equal scores are grouped, so
//! tied blocks appear as single segments and the trapezoid AUC equals the
//! tie-corrected Mann-Whitney statistic.

use serde::{Deserialize, Serialize};

use crate::error::ArcError;
use crate::Result;

/// ROC curve for one class, `points` as `(fpr, tpr)` anchored at (0,0) and
/// (1,1). `auc` is `None` when the class is absent or universal in truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
    pub auc: Option<f64>,
}

/// PR curve for one class, `points` as `(recall, precision)`, anchored at
/// recall 0 with precision 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<(f64, f64)>,
}

fn sorted_desc(scores: &[f64], truth: &[bool]) -> Result<Vec<(f64, bool)>> {
    if scores.len() != truth.len() {
        return Err(ArcError::DimensionMismatch {
            expected: scores.len(),
            got: truth.len(),
        });
    }
    if scores.is_empty() {
        return Err(ArcError::EmptyInput("no scores".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(ArcError::InvalidParam("non-finite score".into()));
    }
    let mut pairs: Vec<(f64, bool)> = scores.iter().copied().zip(truth.iter().copied()).collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    Ok(pairs)
}

/// ROC sweep for one binary problem.
pub fn roc_curve(scores: &[f64], truth: &[bool]) -> Result<RocCurve> {
    let pairs = sorted_desc(scores, truth)?;
    let pos = truth.iter().filter(|&&t| t).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Ok(RocCurve {
            points: vec![(0.0, 0.0), (1.0, 1.0)],
            auc: None,
        });
    }
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < pairs.len() {
        let score = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == score {
            if pairs[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    if *points.last().unwrap() != (1.0, 1.0) {
        points.push((1.0, 1.0));
    }
    let mut auc = 0.0;
    for pair in points.windows(2) {
        let ((x1, y1), (x2, y2)) = (pair[0], pair[1]);
        auc += (x2 - x1) * (y1 + y2) / 2.0;
    }
    Ok(RocCurve {
        points,
        auc: Some(auc),
    })
}

/// PR sweep for one binary problem.
pub fn pr_curve(scores: &[f64], truth: &[bool]) -> Result<PrCurve> {
    let pairs = sorted_desc(scores, truth)?;
    let pos = truth.iter().filter(|&&t| t).count();
    if pos == 0 || pos == truth.len() {
        return Ok(PrCurve {
            points: vec![(0.0, 1.0)],
        });
    }
    let mut points = vec![(0.0, 1.0)];
    let (mut tp, mut predicted) = (0usize, 0usize);
    let mut i = 0;
    while i < pairs.len() {
        let score = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == score {
            if pairs[i].1 {
                tp += 1;
            }
            predicted += 1;
            i += 1;
        }
        points.push((tp as f64 / pos as f64, tp as f64 / predicted as f64));
        // the sweep stops once every positive is recovered; lower
        // thresholds only add dominated points at the same recall
        if tp == pos {
            break;
        }
    }
    Ok(PrCurve { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    /// Pairwise Mann-Whitney estimator with half-credit for ties; the
    /// independent AUC oracle.
    fn mann_whitney_auc(scores: &[f64], truth: &[bool]) -> f64 {
        let pos: Vec<f64> = scores
            .iter()
            .zip(truth)
            .filter(|(_, &t)| t)
            .map(|(&s, _)| s)
            .collect();
        let neg: Vec<f64> = scores
            .iter()
            .zip(truth)
            .filter(|(_, &t)| !t)
            .map(|(&s, _)| s)
            .collect();
        let mut wins = 0.0;
        for &p in &pos {
            for &n in &neg {
                if p > n {
                    wins += 1.0;
                } else if p == n {
                    wins += 0.5;
                }
            }
        }
        wins / (pos.len() as f64 * neg.len() as f64)
    }

    #[test]
    fn perfectly_separated_scores_reach_auc_one() {
        let scores = vec![0.9, 0.8, 0.7, 0.2, 0.1];
        let truth = vec![true, true, true, false, false];
        let roc = roc_curve(&scores, &truth).unwrap();
        assert_eq!(roc.auc, Some(1.0));
        assert_eq!(roc.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(roc.points.last(), Some(&(1.0, 1.0)));
    }

    #[test]
    fn constant_scores_give_half_auc() {
        let scores = vec![0.5; 6];
        let truth = vec![true, false, true, false, true, false];
        let roc = roc_curve(&scores, &truth).unwrap();
        assert_relative_eq!(roc.auc.unwrap(), 0.5, max_relative = 1e-12);
        // degenerate sweep: one tied block spans (0,0) to (1,1)
        assert_eq!(roc.points, vec![(0.0, 0.0), (1.0, 1.0)]);
    }

    #[test]
    fn single_class_truth_yields_null_auc() {
        let scores = vec![0.1, 0.2, 0.3];
        assert_eq!(roc_curve(&scores, &[true, true, true]).unwrap().auc, None);
        assert_eq!(
            roc_curve(&scores, &[false, false, false]).unwrap().auc,
            None
        );
    }

    #[test]
    fn trapezoid_auc_equals_mann_whitney_on_random_scores() {
        let mut rng = crate::seed::rng(77);
        for trial in 0..20 {
            let n = 200;
            let truth: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
            if truth.iter().all(|&t| t) || truth.iter().all(|&t| !t) {
                continue;
            }
            // quantized scores force plenty of ties
            let scores: Vec<f64> = (0..n)
                .map(|_| (rng.gen_range(0.0f64..1.0) * 10.0).round() / 10.0)
                .collect();
            let roc = roc_curve(&scores, &truth).unwrap();
            let mw = mann_whitney_auc(&scores, &truth);
            assert!(
                (roc.auc.unwrap() - mw).abs() <= 1e-9,
                "trial {trial}: {} vs {mw}",
                roc.auc.unwrap()
            );
        }
    }

    #[test]
    fn roc_points_are_monotone() {
        let mut rng = crate::seed::rng(78);
        let truth: Vec<bool> = (0..100).map(|_| rng.gen_bool(0.5)).collect();
        let scores: Vec<f64> = (0..100).map(|_| rng.gen_range(0.0..1.0)).collect();
        let roc = roc_curve(&scores, &truth).unwrap();
        for pair in roc.points.windows(2) {
            assert!(pair[1].0 >= pair[0].0);
            assert!(pair[1].1 >= pair[0].1);
        }
    }

    #[test]
    fn pr_perfect_scores_hold_precision_one() {
        let scores = vec![0.9, 0.8, 0.7, 0.2, 0.1];
        let truth = vec![true, true, true, false, false];
        let pr = pr_curve(&scores, &truth).unwrap();
        for &(recall, precision) in &pr.points {
            if recall > 0.0 {
                assert_eq!(precision, 1.0);
            }
        }
        assert_eq!(pr.points[0], (0.0, 1.0));
        assert_eq!(pr.points.last(), Some(&(1.0, 1.0)));
    }

    #[test]
    fn pr_inverted_scores_end_at_prevalence() {
        // all positives scored lowest: at recall 1 the precision equals the
        // base rate
        let scores = vec![0.1, 0.2, 0.9, 0.8, 0.7];
        let truth = vec![true, true, false, false, false];
        let pr = pr_curve(&scores, &truth).unwrap();
        let last = pr.points.last().unwrap();
        assert_eq!(last.0, 1.0);
        assert_relative_eq!(last.1, 2.0 / 5.0, max_relative = 1e-12);
    }

    #[test]
    fn pr_points_match_per_threshold_confusion_counts() {
        let mut rng = crate::seed::rng(79);
        let n = 150;
        let truth: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
        let scores: Vec<f64> = (0..n)
            .map(|_| (rng.gen_range(0.0f64..1.0) * 20.0).round() / 20.0)
            .collect();
        let pr = pr_curve(&scores, &truth).unwrap();
        let pos = truth.iter().filter(|&&t| t).count() as f64;
        // oracle: recompute precision/recall by direct confusion counting at
        // each distinct threshold the sweep visited
        let mut thresholds: Vec<f64> = scores.clone();
        thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
        thresholds.dedup();
        for (&t, &point) in thresholds.iter().zip(pr.points.iter().skip(1)) {
            let tp = scores
                .iter()
                .zip(&truth)
                .filter(|(&s, &tr)| s >= t && tr)
                .count() as f64;
            let pp = scores.iter().filter(|&&s| s >= t).count() as f64;
            assert_relative_eq!(point.0, tp / pos, max_relative = 1e-12);
            assert_relative_eq!(point.1, tp / pp, max_relative = 1e-12);
        }
    }
}
