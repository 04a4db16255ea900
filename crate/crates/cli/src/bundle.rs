//! Prediction bundles: everything `predict` needs to label new requirements.
//!
//! A bundle directory holds the trained classifier, the featurizer it was
//! trained against (vocabulary, stopwords and LSA model), the fitted feature
//! preprocessing, the weakness descriptions requirements get paired with, the
//! category names, and a manifest of hashes tying the files together.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use weakmap::classify::{FeatureKind, TrainedModel};
use weakmap::eval::{feature_text, nearest_description, FittedPreprocess};
use weakmap::lsa::{LatentModel, LatentVector};
use weakmap::mapper::Featurizer;
use weakmap::{sha256_hex, FeatureText, ModelKind, Preprocess, Stopwords, Vocabulary, Weighting};

use crate::error::CliError;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const VOCABULARY_FILE: &str = "vocabulary.txt";
pub const STOPWORDS_FILE: &str = "stopwords.txt";
pub const LSA_FILE: &str = "lsa.model";
pub const PREPROCESS_FILE: &str = "preprocess.bin";
pub const DESCRIPTIONS_FILE: &str = "descriptions.csv";
pub const CATEGORIES_FILE: &str = "categories.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub algorithm: ModelKind,
    pub seed: u64,
    pub model_file: String,
    pub class_set: Vec<u32>,
    pub features: FeatureKind,
    pub feature_text: FeatureText,
    pub preprocess: Preprocess,
    pub weighting: Weighting,
    pub k: usize,
    pub vocab_hash: String,
    pub stopword_hash: String,
    pub lsa_hash: String,
    pub preprocess_hash: String,
    pub model_hash: String,
    pub dataset_hash: String,
    pub config: BTreeMap<String, serde_json::Value>,
}

/// An in-memory bundle, ready to write or to predict with.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub manifest: Manifest,
    pub featurizer: Featurizer<f64>,
    pub stopword_text: String,
    pub preprocess: FittedPreprocess<f64>,
    pub model: TrainedModel<f64>,
    /// `(cwe_id, description)`, ascending by id.
    pub descriptions: Vec<(u32, String)>,
    pub category_names: BTreeMap<u32, String>,
}

fn mismatch(msg: impl Into<String>) -> CliError {
    CliError::user("VersionMismatch", msg)
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::user("MalformedRow", format!("{}: {e}", path.display()))
}

impl Bundle {
    pub fn write(&self, dir: &Path, force: bool) -> Result<PathBuf, CliError> {
        let manifest_path = dir.join(MANIFEST_FILE);
        if !force && manifest_path.exists() {
            return Err(CliError::user(
                "RefuseOverwrite",
                format!(
                    "{} already exists; refusing to overwrite without force",
                    manifest_path.display()
                ),
            ));
        }
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        write(
            &dir.join(VOCABULARY_FILE),
            self.featurizer.vocabulary().to_text().as_bytes(),
        )?;
        write(&dir.join(STOPWORDS_FILE), self.stopword_text.as_bytes())?;
        write(&dir.join(LSA_FILE), &self.featurizer.model().to_bytes())?;
        write(&dir.join(PREPROCESS_FILE), &self.preprocess.to_bytes())?;
        write(&dir.join(&self.manifest.model_file), &self.model.to_bytes())?;

        let path = dir.join(DESCRIPTIONS_FILE);
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
        w.write_record(["cwe_id", "description"])
            .map_err(|e| csv_error(&path, e))?;
        for (id, d) in &self.descriptions {
            w.write_record([id.to_string().as_str(), d])
                .map_err(|e| csv_error(&path, e))?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;

        let path = dir.join(CATEGORIES_FILE);
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
        w.write_record(["category_id", "category_name"])
            .map_err(|e| csv_error(&path, e))?;
        for (id, name) in &self.category_names {
            w.write_record([id.to_string().as_str(), name])
                .map_err(|e| csv_error(&path, e))?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;

        let mut json = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        json.push('\n');
        write(&manifest_path, json.as_bytes())?;
        Ok(manifest_path)
    }

    /// Loads and cross-checks a bundle. `vocabulary` replaces the bundled
    /// vocabulary file; either way its hash must match the manifest.
    pub fn load(dir: &Path, vocabulary: Option<&Path>) -> Result<Self, CliError> {
        let manifest = read_manifest(dir)?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(mismatch(format!(
                "bundle format version {} is not supported (expected {FORMAT_VERSION})",
                manifest.format_version
            )));
        }
        let vocab_path = vocabulary.map_or_else(|| dir.join(VOCABULARY_FILE), Path::to_path_buf);
        let vocab_bytes = read(&vocab_path)?;
        let vocab_text = String::from_utf8(vocab_bytes).map_err(|_| {
            CliError::user(
                "MalformedVocabulary",
                format!("{}: invalid UTF-8", vocab_path.display()),
            )
        })?;
        let vocab = Vocabulary::from_text(&vocab_text)?;
        if vocab.content_hash() != manifest.vocab_hash {
            return Err(mismatch(format!(
                "vocabulary {} has hash {} but the bundle was trained with {}",
                vocab_path.display(),
                vocab.content_hash(),
                manifest.vocab_hash
            )));
        }

        let checked = |name: &str, expected: &str| -> Result<Vec<u8>, CliError> {
            let path = dir.join(name);
            let bytes = read(&path)?;
            if sha256_hex(&bytes) != expected {
                return Err(mismatch(format!(
                    "{} does not match the bundle manifest",
                    path.display()
                )));
            }
            Ok(bytes)
        };
        let lsa = LatentModel::<f64>::from_bytes(&checked(LSA_FILE, &manifest.lsa_hash)?)?;
        let preprocess = FittedPreprocess::<f64>::from_bytes(&checked(
            PREPROCESS_FILE,
            &manifest.preprocess_hash,
        )?)?;
        let model =
            TrainedModel::<f64>::from_bytes(&checked(&manifest.model_file, &manifest.model_hash)?)?;

        let stop_path = dir.join(STOPWORDS_FILE);
        let stopword_text =
            fs::read_to_string(&stop_path).map_err(|e| CliError::io(&stop_path, e))?;
        let stopwords = Stopwords::parse(&stopword_text);
        if stopwords.content_hash() != manifest.stopword_hash {
            return Err(mismatch(format!(
                "{} does not match the bundle manifest",
                stop_path.display()
            )));
        }
        if lsa.n_terms() != vocab.len() || lsa.k() != manifest.k {
            return Err(mismatch(format!(
                "LSA model has {} terms and rank {}, vocabulary has {} terms and the manifest rank {}",
                lsa.n_terms(),
                lsa.k(),
                vocab.len(),
                manifest.k
            )));
        }
        if model.kind() != manifest.algorithm || model.class_set() != manifest.class_set.as_slice()
        {
            return Err(mismatch("classifier does not match the bundle manifest"));
        }
        let featurizer = Featurizer::from_parts(stopwords, vocab, manifest.weighting, lsa)?;
        let width = match manifest.features {
            FeatureKind::Latent => featurizer.k(),
            FeatureKind::Counts | FeatureKind::Tfidf => featurizer.vocabulary().len(),
        };
        if model.n_features() != width {
            return Err(mismatch(format!(
                "classifier expects {} features, featurizer yields {width}",
                model.n_features()
            )));
        }

        let descriptions = read_pairs(&dir.join(DESCRIPTIONS_FILE))?;
        let category_names = read_pairs(&dir.join(CATEGORIES_FILE))?
            .into_iter()
            .collect();
        Ok(Bundle {
            manifest,
            featurizer,
            stopword_text,
            preprocess,
            model,
            descriptions,
            category_names,
        })
    }

    /// Predicted category for each requirement text, in order.
    pub fn predict(&self, requirements: &[String]) -> Result<Vec<u32>, CliError> {
        let text = self.manifest.feature_text;
        let desc_vectors: Vec<LatentVector<f64>> = match text {
            FeatureText::Row => self
                .descriptions
                .iter()
                .map(|(_, d)| self.featurizer.project(d))
                .collect(),
            FeatureText::Requirement => Vec::new(),
        };
        if text == FeatureText::Row && desc_vectors.is_empty() {
            return Err(CliError::user(
                "CorruptArtifact",
                "bundle has no weakness descriptions",
            ));
        }
        let texts: Vec<String> = requirements
            .iter()
            .map(|r| match text {
                FeatureText::Row => {
                    let i = nearest_description(&self.featurizer, &desc_vectors, r)
                        .expect("descriptions are nonempty");
                    feature_text(r, &self.descriptions[i].1, text)
                }
                FeatureText::Requirement => r.clone(),
            })
            .collect();
        let x = self
            .preprocess
            .apply(&self.featurizer.features(&texts, self.manifest.features));
        Ok(self.model.predict_all(&x)?)
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, CliError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| mismatch(format!("{}: {e}", path.display())))
}

fn read_pairs(path: &Path) -> Result<Vec<(u32, String)>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::NotFound => {
            CliError::user("MissingFile", format!("missing file: {}", path.display()))
        }
        _ => csv_error(path, e),
    })?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let id = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| {
            CliError::user(
                "MalformedRow",
                format!("{}: bad id in row {}", path.display(), out.len() + 1),
            )
        })?;
        out.push((id, rec.get(1).unwrap_or("").to_string()));
    }
    Ok(out)
}
