//! Validation protocols and statistics: hold-out and cross-validation
//! splits, confusion/rate metrics, ROC/PR curves with AUC, the binomial
//! confidence interval, Fisher separability, permutation importance, and
//! report assembly.

pub mod importance;
pub mod metrics;
pub mod roc;

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classify::{train, Dataset, Hyperparams, ModelKind, TrainedModel};
use crate::error::ArcError;
use crate::seed;
use crate::signal::RegimeLabel;
use crate::Result;

pub use importance::{permutation_importance, permutation_importance_with, FeatureImportance};
pub use metrics::{
    binomial_ci, confusion_and_metrics, fisher_criterion, fisher_per_feature, ClassMetrics,
    ConfusionMetrics,
};
pub use roc::{pr_curve, roc_curve, PrCurve, RocCurve};

/// Deterministic in-place Fisher-Yates shuffle.
fn shuffle<T>(items: &mut [T], rng: &mut impl Rng) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}

/// Split a dataset into train/test.
///
/// Stratified mode samples `round(test_fraction * class_count)` test rows
/// per class with the seeded PRNG; unstratified samples from the pooled
/// indices. Errors if any class would end up empty on either side (or, in
/// unstratified mode, if either side is empty).
pub fn split_holdout(
    ds: &Dataset,
    test_fraction: f64,
    seed_value: u64,
    stratified: bool,
) -> Result<(Dataset, Dataset)> {
    if test_fraction.is_nan() || test_fraction <= 0.0 || test_fraction >= 1.0 {
        return Err(ArcError::InvalidParam(format!(
            "test_fraction {test_fraction} outside (0, 1)"
        )));
    }
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    if stratified {
        for (stream, (class, mut idx)) in ds.indices_by_class().into_iter().enumerate() {
            let mut rng = seed::rng(seed::derive(seed_value, stream as u64));
            shuffle(&mut idx, &mut rng);
            let n_test = (test_fraction * idx.len() as f64).round() as usize;
            if n_test == 0 || n_test == idx.len() {
                return Err(ArcError::InvalidParam(format!(
                    "fraction {test_fraction} leaves class {class} empty in one split"
                )));
            }
            test_idx.extend_from_slice(&idx[..n_test]);
            train_idx.extend_from_slice(&idx[n_test..]);
        }
    } else {
        let mut idx: Vec<usize> = (0..ds.len()).collect();
        let mut rng = seed::rng(seed_value);
        shuffle(&mut idx, &mut rng);
        let n_test = (test_fraction * idx.len() as f64).round() as usize;
        if n_test == 0 || n_test == idx.len() {
            return Err(ArcError::InvalidParam(
                "fraction leaves one side of the split empty".into(),
            ));
        }
        test_idx.extend_from_slice(&idx[..n_test]);
        train_idx.extend_from_slice(&idx[n_test..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((ds.subset(&train_idx), ds.subset(&test_idx)))
}

/// Cross-validation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CvScheme {
    /// Stratified k-fold.
    KFold(usize),
    /// Leave-one-out: n folds of size 1.
    Loo,
}

/// Per-fold accuracies with their mean and population standard deviation
/// (the "mean +/- std" convention).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub fold_accuracies: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl CvSummary {
    pub fn from_accuracies(fold_accuracies: Vec<f64>) -> Self {
        let n = fold_accuracies.len() as f64;
        let mean = fold_accuracies.iter().sum::<f64>() / n;
        let var = fold_accuracies
            .iter()
            .map(|a| (a - mean) * (a - mean))
            .sum::<f64>()
            / n;
        Self {
            fold_accuracies,
            mean,
            std: var.sqrt(),
        }
    }
}

/// Stratified k-fold test-index partition: per class, shuffle with the
/// seeded PRNG and deal round-robin, so folds are disjoint, covering, and
/// balanced to within one sample per class.
pub fn stratified_kfold_indices(
    ds: &Dataset,
    k: usize,
    seed_value: u64,
) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(ArcError::InvalidParam(format!("k must be >= 2, got {k}")));
    }
    let by_class = ds.indices_by_class();
    let min_class = by_class.iter().map(|(_, idx)| idx.len()).min().unwrap_or(0);
    if k > min_class {
        return Err(ArcError::InvalidParam(format!(
            "k {k} exceeds smallest class count {min_class}"
        )));
    }
    let mut folds = vec![Vec::new(); k];
    // rotate each class's dealing start so remainder samples spread over
    // different folds instead of stacking the deficit on the last one
    let mut start = 0usize;
    for (stream, (_, mut idx)) in by_class.into_iter().enumerate() {
        let mut rng = seed::rng(seed::derive(seed_value, 1000 + stream as u64));
        shuffle(&mut idx, &mut rng);
        let count = idx.len();
        for (pos, i) in idx.into_iter().enumerate() {
            folds[(start + pos) % k].push(i);
        }
        start = (start + count) % k;
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

/// Run cross-validation, training one model per fold; per-fold training
/// seeds derive from `(seed, fold index)`.
pub fn cross_validate(
    ds: &Dataset,
    scheme: CvScheme,
    kind: ModelKind,
    hp: &Hyperparams,
    seed_value: u64,
) -> Result<CvSummary> {
    let folds: Vec<Vec<usize>> = match scheme {
        CvScheme::KFold(k) => stratified_kfold_indices(ds, k, seed_value)?,
        CvScheme::Loo => (0..ds.len()).map(|i| vec![i]).collect(),
    };
    let mut accuracies = Vec::with_capacity(folds.len());
    for (f, test_idx) in folds.iter().enumerate() {
        let train_idx: Vec<usize> = (0..ds.len()).filter(|i| !test_idx.contains(i)).collect();
        let model = train(
            &ds.subset(&train_idx),
            kind,
            hp,
            seed::derive(seed_value, f as u64),
        )?;
        let test = ds.subset(test_idx);
        accuracies.push(model.accuracy(&test)?);
    }
    Ok(CvSummary::from_accuracies(accuracies))
}

/// Pick SVM `(C, gamma)` from a grid by inner stratified k-fold accuracy;
/// grid order breaks ties, so selection is deterministic.
pub fn grid_search_svm(
    ds: &Dataset,
    cs: &[f64],
    gammas: &[f64],
    folds: usize,
    seed_value: u64,
) -> Result<Hyperparams> {
    let mut best: Option<(f64, Hyperparams)> = None;
    for &c in cs {
        for &gamma in gammas {
            let mut hp = Hyperparams::default();
            hp.svm.c = c;
            hp.svm.gamma = Some(gamma);
            let summary = cross_validate(
                ds,
                CvScheme::KFold(folds),
                ModelKind::SvmRbf,
                &hp,
                seed_value,
            )?;
            if best.as_ref().is_none_or(|(acc, _)| summary.mean > *acc) {
                best = Some((summary.mean, hp));
            }
        }
    }
    best.map(|(_, hp)| hp)
        .ok_or_else(|| ArcError::InvalidParam("empty hyperparameter grid".into()))
}

/// One class's ROC or PR curve in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCurve {
    pub class: RegimeLabel,
    pub points: Vec<(f64, f64)>,
    pub auc: Option<f64>,
}

/// Fisher criterion for one class pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherPair {
    pub class_a: RegimeLabel,
    pub class_b: RegimeLabel,
    pub j: f64,
}

/// Dataset shape echoed into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_windows: usize,
    pub n_features: usize,
    pub per_class: BTreeMap<String, usize>,
}

impl DatasetSummary {
    pub fn of(ds: &Dataset) -> Self {
        let mut per_class = BTreeMap::new();
        for label in &ds.labels {
            *per_class.entry(label.to_string()).or_insert(0) += 1;
        }
        Self {
            n_windows: ds.len(),
            n_features: ds.dim(),
            per_class,
        }
    }
}

/// Wall-clock timings, kept in their own object so determinism checks can
/// strip them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub train_seconds: f64,
    pub per_sample_inference_seconds: f64,
}

/// Confidence-interval section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiSummary {
    pub accuracy: f64,
    pub n: usize,
    pub level: f64,
    pub low: f64,
    pub high: f64,
}

/// Cross-validation section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSection {
    pub kfold_k: usize,
    pub kfold: CvSummary,
    pub loo: Option<CvSummary>,
}

/// Everything one evaluation run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_kind: ModelKind,
    pub dataset: DatasetSummary,
    pub holdout: ConfusionMetrics,
    pub roc: Vec<ClassCurve>,
    pub pr: Vec<ClassCurve>,
    pub ci: CiSummary,
    pub cv: CvSection,
    pub fisher: Vec<FisherPair>,
    pub importance: Vec<FeatureImportance>,
    pub seed: u64,
    pub timing: Timing,
}

/// Evaluation options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalOptions {
    pub test_fraction: f64,
    pub kfold_k: usize,
    pub run_loo: bool,
    pub ci_level: f64,
    pub importance_repeats: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            test_fraction: 0.25,
            kfold_k: 10,
            run_loo: true,
            ci_level: 0.95,
            importance_repeats: 5,
        }
    }
}

/// Full evaluation: stratified hold-out metrics and curves, k-fold and
/// LOO cross-validation, CI on the hold-out accuracy, Fisher pairs,
/// permutation importance, and timings.
pub fn evaluate(
    ds: &Dataset,
    kind: ModelKind,
    hp: &Hyperparams,
    opts: &EvalOptions,
    seed_value: u64,
) -> Result<EvalReport> {
    let (train_ds, test_ds) = split_holdout(ds, opts.test_fraction, seed_value, true)?;

    let t0 = Instant::now();
    let model = train(&train_ds, kind, hp, seed::derive(seed_value, 0xF17))?;
    let train_seconds = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let mut pred = Vec::with_capacity(test_ds.len());
    let mut scores = Vec::with_capacity(test_ds.len());
    for v in &test_ds.vectors {
        let (label, s) = model.predict(v)?;
        pred.push(label);
        scores.push(s);
    }
    let per_sample = t1.elapsed().as_secs_f64() / test_ds.len().max(1) as f64;

    let holdout = confusion_and_metrics(&test_ds.labels, &pred)?;
    let (roc_curves, pr_curves) = one_vs_rest_curves(&model, &test_ds.labels, &scores)?;

    let ci = {
        let (low, high) = binomial_ci(holdout.accuracy, test_ds.len(), opts.ci_level)?;
        CiSummary {
            accuracy: holdout.accuracy,
            n: test_ds.len(),
            level: opts.ci_level,
            low,
            high,
        }
    };

    let kfold = cross_validate(ds, CvScheme::KFold(opts.kfold_k), kind, hp, seed_value)?;
    let loo = if opts.run_loo {
        Some(cross_validate(ds, CvScheme::Loo, kind, hp, seed_value)?)
    } else {
        None
    };

    let classes = ds.classes();
    let mut fisher = Vec::new();
    for i in 0..classes.len() {
        for j in i + 1..classes.len() {
            fisher.push(FisherPair {
                class_a: classes[i],
                class_b: classes[j],
                j: fisher_criterion(ds, classes[i], classes[j])?,
            });
        }
    }

    let importance = permutation_importance(
        &model,
        &test_ds,
        opts.importance_repeats,
        seed::derive(seed_value, 0x1297),
    )?;

    Ok(EvalReport {
        model_kind: kind,
        dataset: DatasetSummary::of(ds),
        holdout,
        roc: roc_curves,
        pr: pr_curves,
        ci,
        cv: CvSection {
            kfold_k: opts.kfold_k,
            kfold,
            loo,
        },
        fisher,
        importance,
        seed: seed_value,
        timing: Timing {
            train_seconds,
            per_sample_inference_seconds: per_sample,
        },
    })
}

/// Build per-class one-vs-rest ROC and PR curves from prediction scores.
pub fn one_vs_rest_curves(
    model: &TrainedModel,
    truth: &[RegimeLabel],
    scores: &[Vec<f64>],
) -> Result<(Vec<ClassCurve>, Vec<ClassCurve>)> {
    let mut rocs = Vec::new();
    let mut prs = Vec::new();
    for (c, &class) in model.classes.iter().enumerate() {
        let class_scores: Vec<f64> = scores.iter().map(|s| s[c]).collect();
        let binary: Vec<bool> = truth.iter().map(|&t| t == class).collect();
        let roc = roc_curve(&class_scores, &binary)?;
        rocs.push(ClassCurve {
            class,
            points: roc.points,
            auc: roc.auc,
        });
        let pr = pr_curve(&class_scores, &binary)?;
        prs.push(ClassCurve {
            class,
            points: pr.points,
            auc: None,
        });
    }
    Ok((rocs, prs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use RegimeLabel::{Extinction, Stable, Transient};

    fn balanced_dataset(seed_value: u64, n_per: usize) -> Dataset {
        let mut rng = seed::rng(seed_value);
        let mut vectors = Vec::new();
        let mut labels = Vec::new();
        let centers = [
            (Transient, [5.0, 0.0]),
            (Stable, [-5.0, 5.0]),
            (Extinction, [-5.0, -5.0]),
        ];
        for (label, c) in centers {
            for _ in 0..n_per {
                vectors.push(vec![
                    c[0] + rng.gen_range(-1.5..1.5),
                    c[1] + rng.gen_range(-1.5..1.5),
                ]);
                labels.push(label);
            }
        }
        Dataset::new(vectors, labels).unwrap()
    }

    #[test]
    fn holdout_147_at_quarter_gives_36_test() {
        let ds = balanced_dataset(1, 49);
        let (train_ds, test_ds) = split_holdout(&ds, 0.25, 42, true).unwrap();
        assert_eq!(test_ds.len(), 36); // round(0.25 * 49) = 12 per class
        assert_eq!(train_ds.len(), 111);
        for class in RegimeLabel::ALL {
            let count = test_ds.labels.iter().filter(|&&l| l == class).count();
            assert_eq!(count, 12);
        }
    }

    #[test]
    fn holdout_is_seed_deterministic_and_partitioning() {
        let ds = balanced_dataset(2, 20);
        let (tr1, te1) = split_holdout(&ds, 0.25, 7, true).unwrap();
        let (tr2, te2) = split_holdout(&ds, 0.25, 7, true).unwrap();
        assert_eq!(tr1, tr2);
        assert_eq!(te1, te2);
        assert_eq!(tr1.len() + te1.len(), ds.len());
        let (_, te3) = split_holdout(&ds, 0.25, 8, true).unwrap();
        assert_ne!(te1, te3);
    }

    #[test]
    fn holdout_rejects_emptying_fractions() {
        // 2-sample single-class dataset: fraction 0.5 -> 1/1 split works
        let ds = Dataset::new(vec![vec![0.0], vec![1.0]], vec![Stable, Stable]).unwrap();
        let (tr, te) = split_holdout(&ds, 0.5, 1, true).unwrap();
        assert_eq!((tr.len(), te.len()), (1, 1));
        // but 0.1 would round the test side to zero
        assert!(split_holdout(&ds, 0.1, 1, true).is_err());
        assert!(split_holdout(&ds, 0.0, 1, true).is_err());
    }

    #[test]
    fn kfold_partition_is_disjoint_and_covering() {
        let ds = balanced_dataset(3, 49); // 147 rows
        let folds = stratified_kfold_indices(&ds, 10, 5).unwrap();
        assert_eq!(folds.len(), 10);
        let sizes: Vec<usize> = folds.iter().map(|f| f.len()).collect();
        for &s in &sizes {
            assert!(s == 14 || s == 15, "fold size {s}");
        }
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        let expect: Vec<usize> = (0..147).collect();
        assert_eq!(all, expect);
    }

    #[test]
    fn kfold_preconditions() {
        let ds = balanced_dataset(4, 5);
        assert!(stratified_kfold_indices(&ds, 1, 0).is_err());
        assert!(stratified_kfold_indices(&ds, 6, 0).is_err()); // k > min class count
        assert!(stratified_kfold_indices(&ds, 5, 0).is_ok());
    }

    #[test]
    fn loo_makes_n_folds_and_perfect_classifier_scores_one() {
        let ds = balanced_dataset(5, 4);
        let summary = cross_validate(
            &ds,
            CvScheme::Loo,
            ModelKind::Knn,
            &Hyperparams::default(),
            3,
        )
        .unwrap();
        assert_eq!(summary.fold_accuracies.len(), 12);
        // clean clusters: every fold classifies its one sample correctly
        assert_eq!(summary.mean, 1.0);
        assert_eq!(summary.std, 0.0);
    }

    #[test]
    fn cv_summary_mean_std_convention() {
        let s = CvSummary::from_accuracies(vec![1.0, 0.5]);
        assert_relative_eq!(s.mean, 0.75);
        assert_relative_eq!(s.std, 0.25); // population std
    }

    #[test]
    fn grid_search_prefers_separating_hyperparams() {
        let ds = balanced_dataset(6, 10);
        let hp = grid_search_svm(&ds, &[1.0, 10.0], &[0.1, 0.5], 5, 3).unwrap();
        assert!(hp.svm.gamma.is_some());
        // the chosen combo actually achieves top CV accuracy
        let chosen = cross_validate(&ds, CvScheme::KFold(5), ModelKind::SvmRbf, &hp, 3).unwrap();
        assert!(chosen.mean >= 0.9, "grid pick scored {}", chosen.mean);
    }

    #[test]
    fn evaluate_produces_coherent_report() {
        let ds = balanced_dataset(7, 16);
        let opts = EvalOptions {
            kfold_k: 4,
            run_loo: false,
            importance_repeats: 2,
            ..EvalOptions::default()
        };
        let report = evaluate(&ds, ModelKind::SvmRbf, &Hyperparams::default(), &opts, 9).unwrap();
        assert_eq!(report.dataset.n_windows, 48);
        assert_eq!(report.holdout.confusion.len(), 3);
        assert!(report.holdout.accuracy >= 0.9);
        assert_eq!(report.roc.len(), 3);
        assert_eq!(report.pr.len(), 3);
        for curve in &report.roc {
            assert!(curve.auc.unwrap() >= 0.9, "{:?}", curve.class);
        }
        assert!(report.ci.low <= report.ci.accuracy && report.ci.accuracy <= report.ci.high);
        assert_eq!(report.fisher.len(), 3);
        assert_eq!(report.cv.kfold.fold_accuracies.len(), 4);
        assert!(report.timing.train_seconds >= 0.0);

        // deterministic modulo timing
        let again = evaluate(&ds, ModelKind::SvmRbf, &Hyperparams::default(), &opts, 9).unwrap();
        let strip = |mut r: EvalReport| {
            r.timing = Timing {
                train_seconds: 0.0,
                per_sample_inference_seconds: 0.0,
            };
            r
        };
        assert_eq!(strip(report), strip(again));
    }
}
