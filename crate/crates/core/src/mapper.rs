//! Labels requirements with CWE categories through a shared latent space.
//!
//! Weakness descriptions and requirement texts are tokenized together into a
//! single vocabulary and one LSA model (weaknesses first, ascending CWE id,
//! then requirements in row order). Each requirement takes the weakness with
//! the highest cosine similarity, ties going to the smaller CWE id, and is
//! labeled with that weakness's category. Every requirement gets a label;
//! those below [`LOW_SIMILARITY`] are listed in a side report.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{FeatureKind, FeatureMatrix};
use crate::corpus::{CorpusError, CweCatalog, Requirement};
use crate::linalg::DenseMatrix;
use crate::lsa::{cosine, effective_k, fit_lsa, LatentModel, LatentVector, LsaError, DEFAULT_K};
use crate::scalar::Scalar;
use crate::text::{
    build_matrix, tokenize, vectorize, weight, SparseVector, Stopwords, TextError, Vocabulary,
    Weighting,
};

/// Similarity below which a label is reported as dubious.
pub const LOW_SIMILARITY: f64 = 0.1;

pub const TRAINING_SET_FILE: &str = "training_set.csv";
pub const PROVENANCE_FILE: &str = "training_set.provenance.json";
pub const LOW_SIMILARITY_FILE: &str = "low_similarity.csv";

pub const TRAINING_SET_COLUMNS: [&str; 5] = [
    "requirement_text",
    "cwe_description",
    "cwe_id",
    "category_id",
    "similarity",
];

#[derive(Debug, Error)]
pub enum MapError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Lsa(#[from] LsaError),
    #[error("the catalog has no weaknesses")]
    EmptyCatalog,
    #[error("no requirements to map")]
    NoRequirements,
    #[error("{} already exists; refusing to overwrite without force", .0.display())]
    RefuseOverwrite(PathBuf),
    #[error("{}: schema mismatch: {reason}", path.display())]
    SchemaMismatch { path: PathBuf, reason: String },
    #[error("{}: row {row}: {reason}", path.display())]
    MalformedRow {
        path: PathBuf,
        row: usize,
        reason: String,
    },
    #[error("i/o error on {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> MapError + '_ {
    move |source| MapError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> MapError + '_ {
    move |e| MapError::Io {
        path: path.to_path_buf(),
        source: io::Error::other(e),
    }
}

/// Text-to-vector parameters shared by mapping and feature extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    /// Requested latent rank, capped at `min(D, V) − 1` when fitting.
    pub k: usize,
    pub seed: u64,
    pub weighting: Weighting,
    pub min_df: usize,
}

impl Default for SpaceParams {
    fn default() -> Self {
        SpaceParams {
            k: DEFAULT_K,
            seed: 0,
            weighting: Weighting::RawCounts,
            min_df: 1,
        }
    }
}

/// A fitted text → latent-vector transform.
#[derive(Debug, Clone)]
pub struct Featurizer<T> {
    stopwords: Stopwords,
    vocab: Vocabulary,
    weighting: Weighting,
    model: LatentModel<T>,
}

impl<T: Scalar> Featurizer<T> {
    /// Fits vocabulary and LSA on `texts`, in order.
    pub fn fit<S: AsRef<str>>(
        texts: &[S],
        stopwords: &Stopwords,
        params: &SpaceParams,
    ) -> Result<Self, MapError> {
        let docs: Vec<Vec<String>> = texts
            .iter()
            .map(|t| tokenize(t.as_ref(), stopwords))
            .collect();
        let vocab = Vocabulary::build(&docs, params.min_df)?;
        let matrix = build_matrix::<T, String>(&docs, &vocab, params.weighting)?;
        let k = effective_k(params.k, matrix.n_rows(), matrix.n_cols());
        let model = fit_lsa(&matrix, k, params.seed)?;
        Ok(Featurizer {
            stopwords: stopwords.clone(),
            vocab,
            weighting: params.weighting,
            model,
        })
    }

    pub fn from_parts(
        stopwords: Stopwords,
        vocab: Vocabulary,
        weighting: Weighting,
        model: LatentModel<T>,
    ) -> Result<Self, MapError> {
        if model.n_terms() != vocab.len() {
            return Err(MapError::Lsa(LsaError::DimensionMismatch {
                expected: vocab.len(),
                found: model.n_terms(),
            }));
        }
        Ok(Featurizer {
            stopwords,
            vocab,
            weighting,
            model,
        })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn model(&self) -> &LatentModel<T> {
        &self.model
    }

    pub fn stopwords(&self) -> &Stopwords {
        &self.stopwords
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    pub fn k(&self) -> usize {
        self.model.k()
    }

    /// Raw bag-of-words counts.
    pub fn counts(&self, text: &str) -> SparseVector<T> {
        vectorize(&tokenize(text, &self.stopwords), &self.vocab)
    }

    /// Counts with the fitted weighting applied: the vector LSA sees.
    pub fn weighted(&self, text: &str) -> SparseVector<T> {
        weight(self.counts(text), &self.vocab, self.weighting)
    }

    pub fn project(&self, text: &str) -> LatentVector<T> {
        self.model
            .project(&self.weighted(text))
            .expect("vectors share the fitted vocabulary")
    }

    /// One feature row per text.
    pub fn features<S: AsRef<str>>(&self, texts: &[S], kind: FeatureKind) -> FeatureMatrix<T> {
        let cols = match kind {
            FeatureKind::Latent => self.k(),
            FeatureKind::Counts | FeatureKind::Tfidf => self.vocab.len(),
        };
        let mut data = Vec::with_capacity(texts.len() * cols);
        for t in texts {
            match kind {
                FeatureKind::Latent => data.extend(self.project(t.as_ref()).0),
                FeatureKind::Counts => data.extend(self.counts(t.as_ref()).to_dense()),
                FeatureKind::Tfidf => data.extend(
                    weight(self.counts(t.as_ref()), &self.vocab, Weighting::Tfidf).to_dense(),
                ),
            }
        }
        FeatureMatrix::new(DenseMatrix::from_vec(texts.len(), cols, data), kind)
            .expect("projections of finite counts are finite")
    }
}

/// The fitted joint space and both projected collections.
#[derive(Debug, Clone)]
pub struct JointSpace<T> {
    pub featurizer: Featurizer<T>,
    /// Aligned with the catalog's ascending-id iteration order.
    pub weakness_vectors: Vec<LatentVector<T>>,
    /// Aligned with requirement row order.
    pub requirement_vectors: Vec<LatentVector<T>>,
}

pub fn build_joint_space<T: Scalar>(
    catalog: &CweCatalog,
    reqs: &[Requirement],
    stopwords: &Stopwords,
    params: &SpaceParams,
) -> Result<JointSpace<T>, MapError> {
    if catalog.is_empty() {
        return Err(MapError::EmptyCatalog);
    }
    if reqs.is_empty() {
        return Err(MapError::NoRequirements);
    }
    let texts: Vec<&str> = catalog
        .weaknesses()
        .map(|w| w.description.as_str())
        .chain(reqs.iter().map(|r| r.text.as_str()))
        .collect();
    let featurizer = Featurizer::fit(&texts, stopwords, params)?;
    let w = catalog.len();
    let model = featurizer.model();
    let weakness_vectors = (0..w).map(|i| model.doc_vector(i)).collect();
    let requirement_vectors = (0..reqs.len()).map(|i| model.doc_vector(w + i)).collect();
    Ok(JointSpace {
        featurizer,
        weakness_vectors,
        requirement_vectors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub cwe_id: u32,
    pub category_id: u32,
    pub similarity: f64,
}

/// Best-matching weakness by cosine; `weakness_vectors` must follow the
/// catalog's ascending-id order. Ties and zero-norm requirements fall to
/// the smallest CWE id.
pub fn map_requirement<T: Scalar>(
    req: &LatentVector<T>,
    weakness_vectors: &[LatentVector<T>],
    catalog: &CweCatalog,
) -> Result<Match, MapError> {
    if weakness_vectors.is_empty() || weakness_vectors.len() != catalog.len() {
        return Err(MapError::EmptyCatalog);
    }
    let mut best: Option<(T, u32)> = None;
    for (w, vec) in catalog.weaknesses().zip(weakness_vectors) {
        let s = cosine(req, vec)?;
        if best.is_none_or(|(b, _)| s > b) {
            best = Some((s, w.id));
        }
    }
    let (similarity, cwe_id) = best.expect("nonempty catalog");
    Ok(Match {
        cwe_id,
        category_id: catalog.resolve_category(cwe_id)?,
        similarity: similarity.as_f64(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub requirement_text: String,
    pub matched_cwe_id: u32,
    pub matched_description: String,
    pub category_id: u32,
    pub similarity: f64,
}

/// Everything needed to tell two training sets apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub vocab_hash: String,
    pub stopword_hash: String,
    pub catalog_hash: String,
    pub requirements_hash: String,
    pub k: usize,
    pub k_requested: usize,
    pub seed: u64,
    pub weighting: Weighting,
    pub min_df: usize,
    pub n_weaknesses: usize,
    pub n_requirements: usize,
    pub n_terms: usize,
    /// Effective run configuration, when the caller supplies one.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub config: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub examples: Vec<LabeledExample>,
    pub provenance: Option<Provenance>,
}

impl LabeledDataset {
    /// Rows whose similarity is below [`LOW_SIMILARITY`], as `(row_index, similarity)`.
    pub fn low_similarity_rows(&self) -> Vec<(usize, f64)> {
        self.examples
            .iter()
            .enumerate()
            .filter(|(_, e)| e.similarity < LOW_SIMILARITY)
            .map(|(i, e)| (i, e.similarity))
            .collect()
    }

    pub fn labels(&self) -> Vec<u32> {
        self.examples.iter().map(|e| e.category_id).collect()
    }

    /// SHA-256 of the exported CSV bytes.
    pub fn content_hash(&self) -> String {
        let mut buf = Vec::new();
        write_training_csv(&self.examples, &mut buf).expect("in-memory write");
        crate::sha256_hex(&buf)
    }
}

pub fn requirements_hash(reqs: &[Requirement]) -> String {
    let mut bytes = Vec::new();
    for r in reqs {
        bytes.extend_from_slice(r.text.as_bytes());
        bytes.push(0);
    }
    crate::sha256_hex(&bytes)
}

pub fn build_training_set<T: Scalar>(
    catalog: &CweCatalog,
    reqs: &[Requirement],
    stopwords: &Stopwords,
    params: &SpaceParams,
) -> Result<LabeledDataset, MapError> {
    let space = build_joint_space::<T>(catalog, reqs, stopwords, params)?;
    let examples = reqs
        .iter()
        .zip(&space.requirement_vectors)
        .map(|(req, vec)| {
            let m = map_requirement(vec, &space.weakness_vectors, catalog)?;
            let w = catalog
                .weakness(m.cwe_id)
                .expect("matched id comes from the catalog");
            Ok(LabeledExample {
                requirement_text: req.text.clone(),
                matched_cwe_id: m.cwe_id,
                matched_description: w.description.clone(),
                category_id: m.category_id,
                similarity: m.similarity,
            })
        })
        .collect::<Result<Vec<_>, MapError>>()?;
    let vocab = space.featurizer.vocabulary();
    let provenance = Provenance {
        vocab_hash: vocab.content_hash(),
        stopword_hash: stopwords.content_hash().to_string(),
        catalog_hash: catalog.content_hash(),
        requirements_hash: requirements_hash(reqs),
        k: space.featurizer.k(),
        k_requested: params.k,
        seed: params.seed,
        weighting: params.weighting,
        min_df: params.min_df,
        n_weaknesses: catalog.len(),
        n_requirements: reqs.len(),
        n_terms: vocab.len(),
        config: BTreeMap::new(),
    };
    Ok(LabeledDataset {
        examples,
        provenance: Some(provenance),
    })
}

fn write_training_csv<W: io::Write>(examples: &[LabeledExample], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAINING_SET_COLUMNS)?;
    for e in examples {
        w.write_record([
            e.requirement_text.as_str(),
            &e.matched_description,
            &e.matched_cwe_id.to_string(),
            &e.category_id.to_string(),
            &e.similarity.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `dir/name.csv` → `dir/name.provenance.json`.
pub fn provenance_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv_path.with_file_name(format!("{stem}.provenance.json"))
}

/// Writes the CSV and, when the dataset carries provenance, its JSON sidecar.
pub fn export_training_set(ds: &LabeledDataset, path: &Path) -> Result<(), MapError> {
    let file = File::create(path).map_err(io_err(path))?;
    write_training_csv(&ds.examples, file).map_err(csv_err(path))?;
    if let Some(p) = &ds.provenance {
        write_provenance(p, &provenance_path(path))?;
    }
    Ok(())
}

pub fn write_provenance(p: &Provenance, path: &Path) -> Result<(), MapError> {
    let mut json = serde_json::to_string_pretty(p).expect("provenance serializes");
    json.push('\n');
    fs::write(path, json).map_err(io_err(path))
}

pub fn read_provenance(path: &Path) -> Result<Provenance, MapError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| MapError::SchemaMismatch {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

pub fn import_training_set(path: &Path) -> Result<LabeledDataset, MapError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            return Err(MapError::Corpus(CorpusError::MissingFile(
                path.to_path_buf(),
            )))
        }
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers().map_err(csv_err(path))?.clone();
    let mut cols = [0usize; 5];
    for (slot, name) in cols.iter_mut().zip(TRAINING_SET_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| MapError::SchemaMismatch {
                path: path.to_path_buf(),
                reason: format!("missing column {name:?}"),
            })?;
    }
    let mut examples = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| MapError::MalformedRow {
            path: path.to_path_buf(),
            row,
            reason: e.to_string(),
        })?;
        let field = |c: usize| rec.get(cols[c]).unwrap_or("");
        let bad = |what: &str| MapError::MalformedRow {
            path: path.to_path_buf(),
            row,
            reason: format!("bad {what}"),
        };
        examples.push(LabeledExample {
            requirement_text: field(0).to_string(),
            matched_description: field(1).to_string(),
            matched_cwe_id: field(2).parse().map_err(|_| bad("cwe_id"))?,
            category_id: field(3).parse().map_err(|_| bad("category_id"))?,
            similarity: field(4).parse().map_err(|_| bad("similarity"))?,
        });
    }
    let side = provenance_path(path);
    let provenance = if side.exists() {
        Some(read_provenance(&side)?)
    } else {
        None
    };
    Ok(LabeledDataset {
        examples,
        provenance,
    })
}

fn write_low_similarity(ds: &LabeledDataset, path: &Path) -> Result<(), MapError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    let err = csv_err(path);
    w.write_record(["row_index", "similarity"]).map_err(&err)?;
    for (i, s) in ds.low_similarity_rows() {
        w.write_record([i.to_string(), s.to_string()])
            .map_err(&err)?;
    }
    w.flush().map_err(io_err(path))
}

/// Paths of the three files [`write_map_outputs`] produces.
pub fn map_output_paths(dir: &Path) -> [PathBuf; 3] {
    [
        dir.join(TRAINING_SET_FILE),
        dir.join(PROVENANCE_FILE),
        dir.join(LOW_SIMILARITY_FILE),
    ]
}

/// Writes the training set, its provenance and the low-similarity report
/// into `dir`. Fails with [`MapError::RefuseOverwrite`] if any of them
/// already exists, unless `force` is set.
pub fn write_map_outputs(
    dir: &Path,
    ds: &LabeledDataset,
    force: bool,
) -> Result<[PathBuf; 3], MapError> {
    let paths = map_output_paths(dir);
    if !force {
        if let Some(p) = paths.iter().find(|p| p.exists()) {
            return Err(MapError::RefuseOverwrite(p.clone()));
        }
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    export_training_set(ds, &paths[0])?;
    if ds.provenance.is_none() {
        // keep the file set complete even for provenance-free datasets
        fs::write(&paths[1], "{}\n").map_err(io_err(&paths[1]))?;
    }
    write_low_similarity(ds, &paths[2])?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CweWeakness, Membership};
    use std::collections::BTreeSet;
    use tempfile::TempDir;

    fn catalog(entries: &[(u32, &str, u32)]) -> CweCatalog {
        let ws = entries.iter().map(|&(id, d, _)| CweWeakness {
            id,
            name: format!("CWE-{id}"),
            description: d.to_string(),
            category_ids: BTreeSet::new(),
        });
        let ms = entries.iter().map(|&(id, _, c)| Membership {
            category_id: c,
            category_name: format!("cat {c}"),
            member_id: id,
        });
        CweCatalog::from_parts(ws, ms).unwrap()
    }

    fn reqs(texts: &[&str]) -> Vec<Requirement> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| Requirement {
                row_index: i,
                project_id: "1".into(),
                text: t.to_string(),
                original_class: "F".into(),
            })
            .collect()
    }

    fn sample() -> (CweCatalog, Vec<Requirement>) {
        let cat = catalog(&[
            (79, "script injection into generated web page output", 1019),
            (89, "sql query built from unneutralized input", 1019),
            (
                311,
                "sensitive data stored or sent without encryption",
                1013,
            ),
        ]);
        let r = reqs(&[
            "The system shall encrypt sensitive data before it is sent",
            "Queries shall be built only from validated sql input",
            "The web page shall escape script content",
        ]);
        (cat, r)
    }

    fn params(k: usize) -> SpaceParams {
        SpaceParams {
            k,
            seed: 7,
            ..SpaceParams::default()
        }
    }

    #[test]
    fn joint_space_layout() {
        let (cat, r) = sample();
        let space =
            build_joint_space::<f64>(&cat, &r[..3], &Stopwords::default(), &params(2)).unwrap();
        assert_eq!(space.featurizer.model().n_docs(), 6);
        assert_eq!(space.weakness_vectors.len(), 3);
        assert_eq!(space.requirement_vectors.len(), 3);
        assert_eq!(
            space.weakness_vectors[0],
            space.featurizer.model().doc_vector(0)
        );
        assert_eq!(
            space.requirement_vectors[2],
            space.featurizer.model().doc_vector(5)
        );
    }

    #[test]
    fn duplicate_requirements_project_identically() {
        let (cat, _) = sample();
        let r = reqs(&[
            "passwords shall be encrypted",
            "passwords shall be encrypted",
            "web output",
        ]);
        let space = build_joint_space::<f64>(&cat, &r, &Stopwords::default(), &params(3)).unwrap();
        let (a, b) = (&space.requirement_vectors[0], &space.requirement_vectors[1]);
        for (x, y) in a.0.iter().zip(&b.0) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn requirement_equal_to_description_matches_itself() {
        let (cat, _) = sample();
        let r = reqs(&[
            "sql query built from unneutralized input",
            "encrypt everything",
        ]);
        let ds = build_training_set::<f64>(&cat, &r, &Stopwords::default(), &params(100)).unwrap();
        assert_eq!(ds.examples[0].matched_cwe_id, 89);
        assert!((ds.examples[0].similarity - 1.0).abs() < 1e-6);
        assert_eq!(ds.examples[0].category_id, 1019);
    }

    #[test]
    fn hand_built_vectors_and_ties() {
        let cat = catalog(&[(1, "a", 10), (2, "b", 20), (3, "c", 30)]);
        let v = |x: f64, y: f64| LatentVector(vec![x, y]);
        let ws = [v(1.0, 0.0), v(0.0, 1.0), v(0.6, 0.8)];
        let m = map_requirement(&v(0.6, 0.8), &ws, &cat).unwrap();
        assert_eq!((m.cwe_id, m.category_id), (3, 30));
        assert!((m.similarity - 1.0).abs() < 1e-12);

        let tied = [v(1.0, 1.0), v(2.0, 2.0), v(0.0, 1.0)];
        assert_eq!(
            map_requirement(&v(3.0, 3.0), &tied, &cat).unwrap().cwe_id,
            1
        );

        let zero = map_requirement(&v(0.0, 0.0), &ws, &cat).unwrap();
        assert_eq!((zero.cwe_id, zero.similarity), (1, 0.0));
    }

    #[test]
    fn every_label_is_the_resolved_category() {
        let (cat, r) = sample();
        let ds = build_training_set::<f64>(&cat, &r, &Stopwords::default(), &params(2)).unwrap();
        assert_eq!(ds.examples.len(), 3);
        for (e, req) in ds.examples.iter().zip(&r) {
            assert_eq!(e.requirement_text, req.text);
            assert_eq!(
                e.category_id,
                cat.resolve_category(e.matched_cwe_id).unwrap()
            );
        }
        let p = ds.provenance.as_ref().unwrap();
        assert_eq!((p.k, p.n_requirements, p.n_weaknesses), (2, 3, 3));
    }

    #[test]
    fn export_import_round_trip_and_overwrite_guard() {
        let (cat, r) = sample();
        let ds = build_training_set::<f64>(&cat, &r, &Stopwords::default(), &params(2)).unwrap();
        let dir = TempDir::new().unwrap();
        let [csv_path, prov, low] = write_map_outputs(dir.path(), &ds, false).unwrap();
        assert!(prov.exists() && low.exists());
        assert_eq!(import_training_set(&csv_path).unwrap(), ds);
        let first = fs::read(&csv_path).unwrap();

        let again = build_training_set::<f64>(&cat, &r, &Stopwords::default(), &params(2)).unwrap();
        assert!(matches!(
            write_map_outputs(dir.path(), &again, false),
            Err(MapError::RefuseOverwrite(_))
        ));
        write_map_outputs(dir.path(), &again, true).unwrap();
        assert_eq!(fs::read(&csv_path).unwrap(), first);

        let other_k =
            build_training_set::<f64>(&cat, &r, &Stopwords::default(), &params(1)).unwrap();
        assert_ne!(other_k.provenance, ds.provenance);
        assert!(matches!(
            write_map_outputs(dir.path(), &other_k, false),
            Err(MapError::RefuseOverwrite(_))
        ));
    }

    #[test]
    fn single_example_file_has_two_lines() {
        let ds = LabeledDataset {
            examples: vec![LabeledExample {
                requirement_text: "The system shall, always, log".into(),
                matched_cwe_id: 778,
                matched_description: "Insufficient \"logging\"".into(),
                category_id: 1009,
                similarity: 0.123456789,
            }],
            provenance: None,
        };
        let dir = TempDir::new().unwrap();
        let p = dir.path().join("one.csv");
        export_training_set(&ds, &p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(
            text.lines().next().unwrap(),
            "requirement_text,cwe_description,cwe_id,category_id,similarity"
        );
        assert_eq!(import_training_set(&p).unwrap(), ds);
    }

    #[test]
    fn missing_column_is_a_schema_mismatch() {
        let dir = TempDir::new().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(
            &p,
            "requirement_text,cwe_description,category_id,similarity\nx,y,1,0.5\n",
        )
        .unwrap();
        let err = import_training_set(&p).unwrap_err();
        assert!(matches!(err, MapError::SchemaMismatch { .. }));
        assert!(err.to_string().contains("cwe_id"));
    }
}
