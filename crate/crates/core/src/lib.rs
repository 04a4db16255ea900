//! Predict CWE weakness categories from software requirements.
//!
//! The pipeline joins a CWE catalog and a requirements file in one
//! bag-of-words term–document matrix, factors it with a truncated SVD (latent
//! semantic analysis), labels every requirement with the category of its most
//! cosine-similar weakness, and then compares supervised classifiers trained
//! on that labeled set over several train/test splits.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the bottom of this file pin the common `f64` instantiations.

pub mod classify;
pub mod codec;
pub mod corpus;
pub mod eval;
pub mod linalg;
pub mod lsa;
pub mod mapper;
pub mod scalar;
pub mod synthetic;
pub mod text;

pub use classify::{ClassifyError, FeatureKind, LabelVector, ModelKind};
pub use corpus::{
    load_cwe_catalog, load_requirements, ColumnMap, CorpusError, CweCatalog, CweCategory,
    CweWeakness, Requirement,
};
pub use eval::{
    accuracy, run_experiment, split, EvalError, EvalReport, FeatureText, FittedPreprocess,
    Preprocess, SplitSpec,
};
pub use lsa::{cosine, fit_lsa, fit_lsa_with, LsaError, LsaParams, SvdMethod};
pub use mapper::{
    build_training_set, LabeledDataset, LabeledExample, MapError, Provenance, SpaceParams,
};
pub use scalar::Scalar;
pub use text::{build_matrix, tokenize, vectorize, Stopwords, TextError, Vocabulary, Weighting};

use sha2::{Digest, Sha256};

/// Lowercase hex SHA-256.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub type LatentModel = lsa::LatentModel<f64>;
pub type LatentModel32 = lsa::LatentModel<f32>;
pub type LatentVector = lsa::LatentVector<f64>;
pub type SparseVector = text::SparseVector<f64>;
pub type TermDocMatrix = text::TermDocMatrix<f64>;
pub type DenseMatrix = linalg::DenseMatrix<f64>;
pub type FeatureMatrix = classify::FeatureMatrix<f64>;
pub type TrainedModel = classify::TrainedModel<f64>;
pub type TrainConfig = classify::TrainConfig<f64>;
pub type MlpConfig = classify::MlpConfig<f64>;
pub type Featurizer = mapper::Featurizer<f64>;
pub type JointSpace = mapper::JointSpace<f64>;
pub type ExperimentConfig = eval::ExperimentConfig<f64>;
