//! Classifier suite behind a common strategy trait.
//!
//! Each algorithm (SVM-RBF, KNN, decision tree, bagged trees) implements
//! [`ClassifierStrategy`]; strategies are registered by name and selected at
//! runtime from config or the command line. Training always goes through the
//! same path: fit a [`Standardizer`] on the training rows, fit the selected
//! strategy on the standardized rows, and wrap both in a [`TrainedModel`]
//! whose JSON round-trip reproduces predictions bitwise.

pub mod knn;
pub mod standardize;
pub mod svm;
pub mod tree;

use serde::{Deserialize, Serialize};

use crate::error::ArcError;
use crate::features::{FeatureRow, FEATURE_NAMES};
use crate::signal::RegimeLabel;
use crate::Result;

pub use knn::KnnModel;
pub use standardize::Standardizer;
pub use svm::{BinarySvm, OneVsRestSvm, SmoConfig, SvmDiagnostics};
pub use tree::{BaggedParams, BaggedTrees, DecisionTree, TreeParams};

/// Model file format version.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Labelled feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Feature rows, all of equal dimension.
    pub vectors: Vec<Vec<f64>>,
    /// One label per row.
    pub labels: Vec<RegimeLabel>,
    /// Column names; defaults to the ten-feature header.
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(vectors: Vec<Vec<f64>>, labels: Vec<RegimeLabel>) -> Result<Self> {
        let names = if vectors.first().map(|v| v.len()) == Some(FEATURE_NAMES.len()) {
            FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
        } else {
            (0..vectors.first().map(|v| v.len()).unwrap_or(0))
                .map(|i| format!("f{i}"))
                .collect()
        };
        let ds = Self {
            vectors,
            labels,
            feature_names: names,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Build from extracted feature rows; every row must carry a label.
    pub fn from_rows(rows: &[FeatureRow]) -> Result<Self> {
        let mut vectors = Vec::with_capacity(rows.len());
        let mut labels = Vec::with_capacity(rows.len());
        for row in rows {
            let label = row.label.ok_or_else(|| {
                ArcError::Model(format!("feature row {} has no label", row.frame))
            })?;
            vectors.push(row.features.as_array().to_vec());
            labels.push(label);
        }
        Dataset::new(vectors, labels)
    }

    fn validate(&self) -> Result<()> {
        if self.vectors.len() != self.labels.len() {
            return Err(ArcError::Model(format!(
                "{} vectors vs {} labels",
                self.vectors.len(),
                self.labels.len()
            )));
        }
        if let Some(first) = self.vectors.first() {
            let d = first.len();
            for (i, v) in self.vectors.iter().enumerate() {
                if v.len() != d {
                    return Err(ArcError::DimensionMismatch {
                        expected: d,
                        got: v.len(),
                    });
                }
                if let Some(j) = v.iter().position(|x| !x.is_finite()) {
                    return Err(ArcError::Model(format!(
                        "non-finite feature at row {i}, column {j}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map(|v| v.len()).unwrap_or(0)
    }

    /// Classes present, in the fixed canonical order.
    pub fn classes(&self) -> Vec<RegimeLabel> {
        RegimeLabel::ALL
            .into_iter()
            .filter(|c| self.labels.contains(c))
            .collect()
    }

    /// Row indices per class, classes in canonical order.
    pub fn indices_by_class(&self) -> Vec<(RegimeLabel, Vec<usize>)> {
        self.classes()
            .into_iter()
            .map(|c| {
                let idx = self
                    .labels
                    .iter()
                    .enumerate()
                    .filter(|(_, &l)| l == c)
                    .map(|(i, _)| i)
                    .collect();
                (c, idx)
            })
            .collect()
    }

    /// Subset by row indices.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            vectors: idx.iter().map(|&i| self.vectors[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }
}

/// Classifier family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    SvmRbf,
    Knn,
    Tree,
    Bagged,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::SvmRbf,
        ModelKind::Knn,
        ModelKind::Tree,
        ModelKind::Bagged,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::SvmRbf => "svm-rbf",
            ModelKind::Knn => "knn",
            ModelKind::Tree => "tree",
            ModelKind::Bagged => "bagged",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = ArcError;

    fn from_str(s: &str) -> Result<Self> {
        strategy_by_name(s).map(|st| st.kind())
    }
}

/// Hyperparameters for every strategy; only the selected strategy reads its
/// section.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hyperparams {
    pub svm: SvmHyper,
    pub knn: KnnHyper,
    pub tree: TreeParams,
    pub bagged: BaggedParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmHyper {
    pub c: f64,
    /// RBF width; `None` means `1/d` on the standardized features.
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_passes: usize,
}

impl Default for SvmHyper {
    fn default() -> Self {
        Self {
            c: 10.0,
            gamma: None,
            tol: 1e-3,
            max_passes: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KnnHyper {
    pub k: usize,
}

impl Default for KnnHyper {
    fn default() -> Self {
        Self { k: 3 }
    }
}

impl Hyperparams {
    fn validate(&self) -> Result<()> {
        if self.svm.c.is_nan() || self.svm.c <= 0.0 {
            return Err(ArcError::InvalidParam("svm.c must be > 0".into()));
        }
        if let Some(g) = self.svm.gamma {
            if g.is_nan() || g <= 0.0 {
                return Err(ArcError::InvalidParam("svm.gamma must be > 0".into()));
            }
        }
        if self.knn.k == 0 || self.knn.k.is_multiple_of(2) {
            return Err(ArcError::InvalidParam("knn.k must be odd and >= 1".into()));
        }
        Ok(())
    }
}

/// Serializable parameters of a fitted strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelParams {
    SvmRbf(OneVsRestSvm),
    Knn(KnnModel),
    Tree(DecisionTree),
    Bagged(BaggedTrees),
}

impl ModelParams {
    fn kind(&self) -> ModelKind {
        match self {
            ModelParams::SvmRbf(_) => ModelKind::SvmRbf,
            ModelParams::Knn(_) => ModelKind::Knn,
            ModelParams::Tree(_) => ModelKind::Tree,
            ModelParams::Bagged(_) => ModelKind::Bagged,
        }
    }

    fn scores(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ModelParams::SvmRbf(m) => m.scores(x),
            ModelParams::Knn(m) => m.scores(x),
            ModelParams::Tree(m) => m.scores(x),
            ModelParams::Bagged(m) => m.scores(x),
        }
    }
}

/// One interchangeable training algorithm.
pub trait ClassifierStrategy: Sync {
    /// Registry name, also the CLI spelling.
    fn name(&self) -> &'static str;

    fn kind(&self) -> ModelKind;

    /// Fit on standardized rows with class indices `0..n_classes`.
    fn fit(
        &self,
        x: &[Vec<f64>],
        y: &[usize],
        n_classes: usize,
        hp: &Hyperparams,
        seed: u64,
    ) -> Result<ModelParams>;
}

struct SvmRbfStrategy;
struct KnnStrategy;
struct TreeStrategy;
struct BaggedStrategy;

impl ClassifierStrategy for SvmRbfStrategy {
    fn name(&self) -> &'static str {
        "svm-rbf"
    }

    fn kind(&self) -> ModelKind {
        ModelKind::SvmRbf
    }

    fn fit(
        &self,
        x: &[Vec<f64>],
        y: &[usize],
        n_classes: usize,
        hp: &Hyperparams,
        _seed: u64,
    ) -> Result<ModelParams> {
        let d = x.first().map(|v| v.len()).unwrap_or(1).max(1);
        let cfg = SmoConfig {
            c: hp.svm.c,
            gamma: hp.svm.gamma.unwrap_or(1.0 / d as f64),
            tol: hp.svm.tol,
            max_passes: hp.svm.max_passes,
        };
        Ok(ModelParams::SvmRbf(OneVsRestSvm::fit(
            x, y, n_classes, &cfg,
        )?))
    }
}

impl ClassifierStrategy for KnnStrategy {
    fn name(&self) -> &'static str {
        "knn"
    }

    fn kind(&self) -> ModelKind {
        ModelKind::Knn
    }

    fn fit(
        &self,
        x: &[Vec<f64>],
        y: &[usize],
        n_classes: usize,
        hp: &Hyperparams,
        _seed: u64,
    ) -> Result<ModelParams> {
        Ok(ModelParams::Knn(KnnModel::fit(x, y, n_classes, hp.knn.k)?))
    }
}

impl ClassifierStrategy for TreeStrategy {
    fn name(&self) -> &'static str {
        "tree"
    }

    fn kind(&self) -> ModelKind {
        ModelKind::Tree
    }

    fn fit(
        &self,
        x: &[Vec<f64>],
        y: &[usize],
        n_classes: usize,
        hp: &Hyperparams,
        _seed: u64,
    ) -> Result<ModelParams> {
        Ok(ModelParams::Tree(DecisionTree::fit(
            x, y, n_classes, &hp.tree,
        )?))
    }
}

impl ClassifierStrategy for BaggedStrategy {
    fn name(&self) -> &'static str {
        "bagged"
    }

    fn kind(&self) -> ModelKind {
        ModelKind::Bagged
    }

    fn fit(
        &self,
        x: &[Vec<f64>],
        y: &[usize],
        n_classes: usize,
        hp: &Hyperparams,
        seed: u64,
    ) -> Result<ModelParams> {
        Ok(ModelParams::Bagged(BaggedTrees::fit(
            x, y, n_classes, &hp.tree, &hp.bagged, seed,
        )?))
    }
}

static STRATEGIES: [&dyn ClassifierStrategy; 4] = [
    &SvmRbfStrategy,
    &KnnStrategy,
    &TreeStrategy,
    &BaggedStrategy,
];

/// All registered strategies.
pub fn strategies() -> &'static [&'static dyn ClassifierStrategy] {
    &STRATEGIES
}

/// Look up a strategy by its registry name.
pub fn strategy_by_name(name: &str) -> Result<&'static dyn ClassifierStrategy> {
    STRATEGIES
        .iter()
        .copied()
        .find(|s| s.name() == name)
        .ok_or_else(|| {
            let known: Vec<&str> = STRATEGIES.iter().map(|s| s.name()).collect();
            ArcError::InvalidParam(format!(
                "unknown classifier {name:?}; known: {}",
                known.join(", ")
            ))
        })
}

/// A fitted classifier plus the standardization it was trained with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub version: u32,
    pub kind: ModelKind,
    /// Classes in fixed canonical order (prediction score order).
    pub classes: Vec<RegimeLabel>,
    pub standardizer: Standardizer,
    pub params: ModelParams,
    /// ASI early-warning threshold calibrated on the training set
    /// (99th percentile of stable-class ASI), when stable rows were present.
    pub asi_threshold: Option<f64>,
}

/// Train a model of the given kind.
pub fn train(ds: &Dataset, kind: ModelKind, hp: &Hyperparams, seed: u64) -> Result<TrainedModel> {
    ds.validate()?;
    hp.validate()?;
    let classes = ds.classes();
    if classes.len() < 2 {
        return Err(ArcError::Model(format!(
            "training needs >= 2 classes, got {}",
            classes.len()
        )));
    }
    let standardizer = Standardizer::fit(&ds.vectors)?;
    let x = standardizer.apply_all(&ds.vectors)?;
    let y: Vec<usize> = ds
        .labels
        .iter()
        .map(|l| classes.iter().position(|c| c == l).unwrap())
        .collect();
    let strategy = strategy_by_name(kind.as_str())?;
    let params = strategy.fit(&x, &y, classes.len(), hp, seed)?;
    let asi_threshold = calibrate_asi_threshold(ds);
    Ok(TrainedModel {
        version: MODEL_FORMAT_VERSION,
        kind,
        classes,
        standardizer,
        params,
        asi_threshold,
    })
}

/// 99th percentile of the stable-class ASI column, when present.
///
/// This is the default monitor threshold: stable operation should sit below
/// it, so exceeding it is evidence of sideband growth.
pub fn calibrate_asi_threshold(ds: &Dataset) -> Option<f64> {
    let asi_col = ds.feature_names.iter().position(|n| n == "asi")?;
    let mut stable_asi: Vec<f64> = ds
        .vectors
        .iter()
        .zip(&ds.labels)
        .filter(|(_, &l)| l == RegimeLabel::Stable)
        .map(|(v, _)| v[asi_col])
        .collect();
    if stable_asi.is_empty() {
        return None;
    }
    stable_asi.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((stable_asi.len() as f64 * 0.99).ceil() as usize).clamp(1, stable_asi.len());
    Some(stable_asi[rank - 1])
}

impl TrainedModel {
    /// Predict a label and per-class scores for one raw feature vector.
    ///
    /// Scores follow `self.classes` order; ties break toward the earlier
    /// class in the fixed canonical order.
    pub fn predict(&self, v: &[f64]) -> Result<(RegimeLabel, Vec<f64>)> {
        let x = self.standardizer.apply(v)?;
        let scores = self.params.scores(&x);
        let mut best = 0usize;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = i;
            }
        }
        Ok((self.classes[best], scores))
    }

    /// Batch accuracy against known labels.
    pub fn accuracy(&self, ds: &Dataset) -> Result<f64> {
        let mut hits = 0usize;
        for (v, &label) in ds.vectors.iter().zip(&ds.labels) {
            if self.predict(v)?.0 == label {
                hits += 1;
            }
        }
        Ok(hits as f64 / ds.len().max(1) as f64)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let model: TrainedModel = serde_json::from_str(json)?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(ArcError::Format(format!(
                "unsupported model format version {}",
                model.version
            )));
        }
        if model.params.kind() != model.kind {
            return Err(ArcError::Format(
                "model kind tag does not match parameters".into(),
            ));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn gaussian_dataset(seed: u64, n_per: usize) -> Dataset {
        let mut rng = crate::seed::rng(seed);
        let mut vectors = Vec::new();
        let mut labels = Vec::new();
        let centers = [
            (RegimeLabel::Transient, [4.0, 0.0]),
            (RegimeLabel::Stable, [-4.0, 4.0]),
            (RegimeLabel::Extinction, [-4.0, -4.0]),
        ];
        for (label, c) in centers {
            for _ in 0..n_per {
                vectors.push(vec![
                    c[0] + rng.gen_range(-1.0..1.0),
                    c[1] + rng.gen_range(-1.0..1.0),
                ]);
                labels.push(label);
            }
        }
        Dataset::new(vectors, labels).unwrap()
    }

    #[test]
    fn registry_knows_all_strategies() {
        assert_eq!(strategies().len(), 4);
        for kind in ModelKind::ALL {
            let s = strategy_by_name(kind.as_str()).unwrap();
            assert_eq!(s.kind(), kind);
        }
        assert!(strategy_by_name("cnn").is_err());
        assert_eq!("svm-rbf".parse::<ModelKind>().unwrap(), ModelKind::SvmRbf);
    }

    #[test]
    fn every_strategy_fits_separable_blobs() {
        let ds = gaussian_dataset(1, 20);
        for kind in ModelKind::ALL {
            let model = train(&ds, kind, &Hyperparams::default(), 7).unwrap();
            let acc = model.accuracy(&ds).unwrap();
            assert!(acc == 1.0, "{kind}: {acc}");
        }
    }

    #[test]
    fn single_class_dataset_rejected() {
        let ds = Dataset::new(
            vec![vec![0.0], vec![1.0]],
            vec![RegimeLabel::Stable, RegimeLabel::Stable],
        )
        .unwrap();
        assert!(train(&ds, ModelKind::Knn, &Hyperparams::default(), 0).is_err());
    }

    #[test]
    fn non_finite_features_rejected() {
        let ds = Dataset {
            vectors: vec![vec![0.0], vec![f64::NAN]],
            labels: vec![RegimeLabel::Stable, RegimeLabel::Transient],
            feature_names: vec!["f0".into()],
        };
        assert!(train(&ds, ModelKind::Knn, &Hyperparams::default(), 0).is_err());
    }

    #[test]
    fn json_round_trip_reproduces_predictions_bitwise() {
        let ds = gaussian_dataset(3, 12);
        let mut rng = crate::seed::rng(99);
        for kind in ModelKind::ALL {
            let model = train(&ds, kind, &Hyperparams::default(), 11).unwrap();
            let json = model.to_json().unwrap();
            let back = TrainedModel::from_json(&json).unwrap();
            assert_eq!(back, model);
            for _ in 0..25 {
                let q = vec![rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)];
                let (la, sa) = model.predict(&q).unwrap();
                let (lb, sb) = back.predict(&q).unwrap();
                assert_eq!(la, lb);
                assert_eq!(sa, sb, "{kind} scores drifted through JSON");
            }
        }
    }

    #[test]
    fn svm_scores_match_kernel_sum_oracle() {
        let ds = gaussian_dataset(5, 15);
        let model = train(&ds, ModelKind::SvmRbf, &Hyperparams::default(), 0).unwrap();
        let ModelParams::SvmRbf(ovr) = &model.params else {
            panic!("wrong params")
        };
        let mut rng = crate::seed::rng(17);
        for _ in 0..50 {
            let q = vec![rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)];
            let (label, scores) = model.predict(&q).unwrap();
            let z = model.standardizer.apply(&q).unwrap();
            let oracle: Vec<f64> = ovr
                .machines
                .iter()
                .map(|m| {
                    m.support_vectors
                        .iter()
                        .zip(&m.dual_coef)
                        .map(|(sv, a)| {
                            let d2: f64 = sv.iter().zip(&z).map(|(p, q)| (p - q) * (p - q)).sum();
                            a * (-m.gamma * d2).exp()
                        })
                        .sum::<f64>()
                        + m.bias
                })
                .collect();
            let mut best = 0;
            for (i, &s) in oracle.iter().enumerate() {
                if s > oracle[best] {
                    best = i;
                }
            }
            assert_eq!(label, model.classes[best]);
            for (a, b) in scores.iter().zip(&oracle) {
                assert!((a - b).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn training_vector_deep_in_class_predicts_that_class() {
        let ds = gaussian_dataset(21, 15);
        let model = train(&ds, ModelKind::SvmRbf, &Hyperparams::default(), 0).unwrap();
        // class centroid is deep inside the class region
        let stable_rows: Vec<&Vec<f64>> = ds
            .vectors
            .iter()
            .zip(&ds.labels)
            .filter(|(_, &l)| l == RegimeLabel::Stable)
            .map(|(v, _)| v)
            .collect();
        let centroid = vec![
            stable_rows.iter().map(|v| v[0]).sum::<f64>() / stable_rows.len() as f64,
            stable_rows.iter().map(|v| v[1]).sum::<f64>() / stable_rows.len() as f64,
        ];
        assert_eq!(model.predict(&centroid).unwrap().0, RegimeLabel::Stable);
    }

    #[test]
    fn knn_unanimous_vote_scores_one() {
        let ds = gaussian_dataset(31, 10);
        let model = train(&ds, ModelKind::Knn, &Hyperparams::default(), 0).unwrap();
        let (label, scores) = model.predict(&[4.0, 0.0]).unwrap();
        assert_eq!(label, RegimeLabel::Transient);
        assert_eq!(scores[0], 1.0);
    }

    #[test]
    fn standardization_absorbs_column_scaling() {
        let ds = gaussian_dataset(41, 15);
        let mut scaled = ds.clone();
        for v in &mut scaled.vectors {
            v[0] *= 1000.0;
        }
        for kind in ModelKind::ALL {
            let a = train(&ds, kind, &Hyperparams::default(), 3).unwrap();
            let b = train(&scaled, kind, &Hyperparams::default(), 3).unwrap();
            let mut rng = crate::seed::rng(51);
            for _ in 0..30 {
                let q = vec![rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)];
                let mut qs = q.clone();
                qs[0] *= 1000.0;
                assert_eq!(
                    a.predict(&q).unwrap().0,
                    b.predict(&qs).unwrap().0,
                    "{kind}"
                );
            }
        }
    }

    #[test]
    fn permuting_training_order_preserves_knn_and_tree_predictions() {
        let ds = gaussian_dataset(61, 12);
        let mut perm: Vec<usize> = (0..ds.len()).collect();
        // deterministic shuffle
        let mut rng = crate::seed::rng(5);
        for i in (1..perm.len()).rev() {
            let j = rng.gen_range(0..=i);
            perm.swap(i, j);
        }
        let shuffled = ds.subset(&perm);
        for kind in [ModelKind::Knn, ModelKind::Tree] {
            let a = train(&ds, kind, &Hyperparams::default(), 3).unwrap();
            let b = train(&shuffled, kind, &Hyperparams::default(), 3).unwrap();
            let mut rng = crate::seed::rng(71);
            for _ in 0..40 {
                let q = vec![rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)];
                assert_eq!(a.predict(&q).unwrap().0, b.predict(&q).unwrap().0, "{kind}");
            }
        }
        // SVM: labels must agree, scores may drift within 1e-6
        let a = train(&ds, ModelKind::SvmRbf, &Hyperparams::default(), 3).unwrap();
        let b = train(&shuffled, ModelKind::SvmRbf, &Hyperparams::default(), 3).unwrap();
        let mut rng = crate::seed::rng(81);
        for _ in 0..40 {
            let q = vec![rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)];
            let (la, sa) = a.predict(&q).unwrap();
            let (lb, sb) = b.predict(&q).unwrap();
            assert_eq!(la, lb);
            for (x, y) in sa.iter().zip(&sb) {
                assert!((x - y).abs() <= 1e-6, "svm score drift {x} vs {y}");
            }
        }
    }

    #[test]
    fn dimension_mismatch_on_predict() {
        let ds = gaussian_dataset(91, 10);
        let model = train(&ds, ModelKind::Knn, &Hyperparams::default(), 0).unwrap();
        assert!(model.predict(&[1.0]).is_err());
    }

    #[test]
    fn asi_threshold_comes_from_stable_quantile() {
        // feature_names defaults to f0/f1 for 2-D data: no "asi" column
        let ds = gaussian_dataset(1, 5);
        assert!(calibrate_asi_threshold(&ds).is_none());

        let mut vectors = Vec::new();
        let mut labels = Vec::new();
        for i in 0..100 {
            let mut v = vec![0.0; 10];
            v[0] = 2.0 + i as f64 * 0.01; // asi column
            vectors.push(v);
            labels.push(RegimeLabel::Stable);
        }
        vectors.push(vec![9.0; 10]);
        labels.push(RegimeLabel::Extinction);
        let ds = Dataset::new(vectors, labels).unwrap();
        let thr = calibrate_asi_threshold(&ds).unwrap();
        // 99th percentile of 2.00..2.99
        assert!((2.97..=2.99).contains(&thr), "{thr}");
    }
}
