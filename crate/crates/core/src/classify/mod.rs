//! The five supervised models behind one train/predict interface.
//!
//! Every argmax in this module resolves ties to the numerically smallest
//! label: class sets are kept sorted and the first maximum wins.

mod gaussian_nb;
mod mlp;
mod multinomial_nb;
mod persist;
mod svm;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::CodecError;
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

pub use gaussian_nb::{train_gaussian_nb, GaussianNb};
pub use mlp::{train_mlp, train_mlp_with_history, Mlp, MlpConfig, TrainingHistory};
pub use multinomial_nb::{train_multinomial_nb, MultinomialNb};
pub use persist::{load_model, model_file_name, save_model};
pub use svm::{train_linear_svm, LinearSvm, SvmConfig};
pub use tree::{train_decision_tree, DecisionTree, Node, TreeConfig};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("training labels contain a single class")]
    DegenerateLabels,
    #[error("multinomial naive Bayes needs nonnegative integer count features, got {0}")]
    NegativeOrNonCountFeatures(String),
    #[error("feature row has length {found}, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{features} feature rows but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("need at least {needed} examples, got {found}")]
    TooFewExamples { needed: usize, found: usize },
    #[error("feature matrix contains a non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training diverged at step {step} (non-finite loss)")]
    Diverged { step: usize },
    #[error(transparent)]
    Codec(#[from] CodecError),
}

impl ClassifyError {
    /// Short stable name, used in report cells.
    pub fn kind_name(&self) -> &'static str {
        match self {
            ClassifyError::DegenerateLabels => "DegenerateLabels",
            ClassifyError::NegativeOrNonCountFeatures(_) => "NegativeOrNonCountFeatures",
            ClassifyError::DimensionMismatch { .. } => "DimensionMismatch",
            ClassifyError::LengthMismatch { .. } => "LengthMismatch",
            ClassifyError::TooFewExamples { .. } => "TooFewExamples",
            ClassifyError::NonFinite { .. } => "NonFinite",
            ClassifyError::InvalidConfig(_) => "InvalidConfig",
            ClassifyError::Diverged { .. } => "Diverged",
            ClassifyError::Codec(CodecError::VersionMismatch { .. }) => "VersionMismatch",
            ClassifyError::Codec(_) => "IoError",
        }
    }
}

/// What the columns of a feature matrix mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Counts,
    Latent,
    Tfidf,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Counts => "counts",
            FeatureKind::Latent => "latent",
            FeatureKind::Tfidf => "tfidf",
        })
    }
}

impl FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "counts" => Ok(FeatureKind::Counts),
            "latent" => Ok(FeatureKind::Latent),
            "tfidf" => Ok(FeatureKind::Tfidf),
            other => Err(format!(
                "unknown feature kind {other:?} (expected counts, latent or tfidf)"
            )),
        }
    }
}

/// N × F matrix of finite reals, tagged with its [`FeatureKind`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    values: DenseMatrix<T>,
    kind: FeatureKind,
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn new(values: DenseMatrix<T>, kind: FeatureKind) -> Result<Self, ClassifyError> {
        for i in 0..values.rows() {
            if let Some(j) = values.row(i).iter().position(|v| !v.is_finite()) {
                return Err(ClassifyError::NonFinite { row: i, col: j });
            }
        }
        Ok(FeatureMatrix { values, kind })
    }

    pub fn from_rows(rows: &[Vec<T>], kind: FeatureKind) -> Result<Self, ClassifyError> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != cols) {
            return Err(ClassifyError::DimensionMismatch {
                expected: cols,
                found: r.len(),
            });
        }
        Self::new(DenseMatrix::from_rows(rows), kind)
    }

    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.cols()
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.values.row(i)
    }

    pub fn values(&self) -> &DenseMatrix<T> {
        &self.values
    }

    /// The rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.n_cols());
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            values: DenseMatrix::from_vec(indices.len(), self.n_cols(), data),
            kind: self.kind,
        }
    }
}

/// Category labels with their sorted distinct class set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<u32>,
    class_set: Vec<u32>,
}

impl LabelVector {
    pub fn new(labels: Vec<u32>) -> Self {
        let mut class_set = labels.clone();
        class_set.sort_unstable();
        class_set.dedup();
        LabelVector { labels, class_set }
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn class_set(&self) -> &[u32] {
        &self.class_set
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Label positions within `class_set`.
    pub fn class_indices(&self) -> Vec<usize> {
        self.labels
            .iter()
            .map(|l| self.class_set.binary_search(l).unwrap())
            .collect()
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        LabelVector::new(indices.iter().map(|&i| self.labels[i]).collect())
    }
}

/// Checks shared by every trainer; returns the class index of each row.
pub(crate) fn validate_training<T: Scalar>(
    x: &FeatureMatrix<T>,
    y: &LabelVector,
    need_two_classes: bool,
) -> Result<Vec<usize>, ClassifyError> {
    if x.n_rows() != y.len() {
        return Err(ClassifyError::LengthMismatch {
            features: x.n_rows(),
            labels: y.len(),
        });
    }
    if y.len() < 2 {
        return Err(ClassifyError::TooFewExamples {
            needed: 2,
            found: y.len(),
        });
    }
    if need_two_classes && y.class_set().len() < 2 {
        return Err(ClassifyError::DegenerateLabels);
    }
    Ok(y.class_indices())
}

/// Index of the first maximum. NaN scores never win.
pub(crate) fn argmax<T: Scalar>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] || scores[best].is_nan() {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    GaussianNb,
    MultinomialNb,
    LinearSvm,
    DecisionTree,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::GaussianNb,
        ModelKind::MultinomialNb,
        ModelKind::LinearSvm,
        ModelKind::DecisionTree,
        ModelKind::Mlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::GaussianNb => "gaussian_nb",
            ModelKind::MultinomialNb => "multinomial_nb",
            ModelKind::LinearSvm => "linear_svm",
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::Mlp => "mlp",
        }
    }

    fn tag(self) -> u8 {
        self as u8
    }

    fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let alias = match s {
            "gnb" => "gaussian_nb",
            "mnb" => "multinomial_nb",
            "svm" => "linear_svm",
            "dt" | "tree" => "decision_tree",
            "nn" => "mlp",
            other => other,
        };
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == alias)
            .ok_or_else(|| {
                let names: Vec<_> = ModelKind::ALL.iter().map(|k| k.name()).collect();
                format!("unknown algorithm {s:?}; valid names: {}", names.join(", "))
            })
    }
}

/// A fitted classifier of any of the five kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel<T> {
    GaussianNb(GaussianNb<T>),
    MultinomialNb(MultinomialNb<T>),
    LinearSvm(LinearSvm<T>),
    DecisionTree(DecisionTree<T>),
    Mlp(Mlp<T>),
}

impl<T: Scalar> TrainedModel<T> {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::GaussianNb(_) => ModelKind::GaussianNb,
            TrainedModel::MultinomialNb(_) => ModelKind::MultinomialNb,
            TrainedModel::LinearSvm(_) => ModelKind::LinearSvm,
            TrainedModel::DecisionTree(_) => ModelKind::DecisionTree,
            TrainedModel::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn class_set(&self) -> &[u32] {
        match self {
            TrainedModel::GaussianNb(m) => &m.class_set,
            TrainedModel::MultinomialNb(m) => &m.class_set,
            TrainedModel::LinearSvm(m) => &m.class_set,
            TrainedModel::DecisionTree(m) => &m.class_set,
            TrainedModel::Mlp(m) => &m.class_set,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::GaussianNb(m) => m.n_features(),
            TrainedModel::MultinomialNb(m) => m.n_features(),
            TrainedModel::LinearSvm(m) => m.n_features(),
            TrainedModel::DecisionTree(m) => m.n_features,
            TrainedModel::Mlp(m) => m.n_features(),
        }
    }

    /// Predicted category id; always a member of [`Self::class_set`].
    pub fn predict(&self, x: &[T]) -> Result<u32, ClassifyError> {
        if x.len() != self.n_features() {
            return Err(ClassifyError::DimensionMismatch {
                expected: self.n_features(),
                found: x.len(),
            });
        }
        let idx = match self {
            TrainedModel::GaussianNb(m) => m.predict_index(x),
            TrainedModel::MultinomialNb(m) => m.predict_index(x),
            TrainedModel::LinearSvm(m) => m.predict_index(x),
            TrainedModel::DecisionTree(m) => m.predict_index(x),
            TrainedModel::Mlp(m) => m.predict_index(x),
        };
        Ok(self.class_set()[idx])
    }

    pub fn predict_all(&self, x: &FeatureMatrix<T>) -> Result<Vec<u32>, ClassifyError> {
        (0..x.n_rows()).map(|i| self.predict(x.row(i))).collect()
    }
}

/// Hyperparameters for every kind, so callers can train by [`ModelKind`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<T> {
    pub svm: SvmConfig<T>,
    pub tree: TreeConfig,
    pub mlp: MlpConfig<T>,
}

impl<T: Scalar> TrainConfig<T> {
    pub fn with_seed(seed: u64) -> Self {
        TrainConfig {
            svm: SvmConfig {
                seed,
                ..SvmConfig::default()
            },
            tree: TreeConfig::default(),
            mlp: MlpConfig {
                seed,
                ..MlpConfig::default()
            },
        }
    }
}

pub fn train<T: Scalar>(
    kind: ModelKind,
    x: &FeatureMatrix<T>,
    y: &LabelVector,
    config: &TrainConfig<T>,
) -> Result<TrainedModel<T>, ClassifyError> {
    Ok(match kind {
        ModelKind::GaussianNb => TrainedModel::GaussianNb(train_gaussian_nb(x, y)?),
        ModelKind::MultinomialNb => TrainedModel::MultinomialNb(train_multinomial_nb(x, y)?),
        ModelKind::LinearSvm => TrainedModel::LinearSvm(train_linear_svm(x, y, &config.svm)?),
        ModelKind::DecisionTree => {
            TrainedModel::DecisionTree(train_decision_tree(x, y, &config.tree)?)
        }
        ModelKind::Mlp => TrainedModel::Mlp(train_mlp(x, y, &config.mlp)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_first_maximum() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[f64::NAN, 0.0]), 1);
        assert_eq!(argmax(&[2.0]), 0);
    }

    #[test]
    fn label_vector_sorts_classes() {
        let y = LabelVector::new(vec![7, 3, 7, 5]);
        assert_eq!(y.class_set(), &[3, 5, 7]);
        assert_eq!(y.class_indices(), vec![2, 0, 2, 1]);
    }

    #[test]
    fn feature_matrix_rejects_non_finite() {
        let err =
            FeatureMatrix::from_rows(&[vec![1.0, f64::NAN]], FeatureKind::Latent).unwrap_err();
        assert!(matches!(err, ClassifyError::NonFinite { row: 0, col: 1 }));
    }

    #[test]
    fn model_kind_names_parse() {
        for k in ModelKind::ALL {
            assert_eq!(k.name().parse::<ModelKind>().unwrap(), k);
        }
        assert_eq!("svm".parse::<ModelKind>().unwrap(), ModelKind::LinearSvm);
        let err = "knn".parse::<ModelKind>().unwrap_err();
        assert!(err.contains("gaussian_nb") && err.contains("mlp"));
    }

    #[test]
    fn predictions_stay_in_class_set() {
        let x = FeatureMatrix::from_rows(
            &[
                vec![0.0, 1.0],
                vec![0.2, 0.9],
                vec![5.0, 5.0],
                vec![5.2, 4.8],
            ],
            FeatureKind::Latent,
        )
        .unwrap();
        let y = LabelVector::new(vec![3, 3, 7, 7]);
        let cfg = TrainConfig::with_seed(1);
        for kind in [
            ModelKind::GaussianNb,
            ModelKind::LinearSvm,
            ModelKind::DecisionTree,
            ModelKind::Mlp,
        ] {
            let m = train(kind, &x, &y, &cfg).unwrap();
            for probe in [[-10.0, 3.0], [2.5, 2.5], [100.0, -100.0]] {
                let p = m.predict(&probe).unwrap();
                assert!(p == 3 || p == 7, "{kind} predicted {p}");
                assert_eq!(p, m.predict(&probe).unwrap());
            }
            assert!(matches!(
                m.predict(&[1.0]),
                Err(ClassifyError::DimensionMismatch {
                    expected: 2,
                    found: 1
                })
            ));
        }
    }
}
