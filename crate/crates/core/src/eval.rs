//! Train/test splits, accuracy, and the algorithm × fraction × seed experiment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{
    train, ClassifyError, FeatureKind, FeatureMatrix, LabelVector, ModelKind, TrainConfig,
};
use crate::codec::{CodecError, Decoder, Encoder};
use crate::linalg::DenseMatrix;
use crate::lsa::{cosine, LatentVector};
use crate::mapper::{Featurizer, LabeledDataset, MapError, SpaceParams};
use crate::scalar::Scalar;
use crate::text::Stopwords;

pub const DEFAULT_FRACTIONS: [f64; 3] = [0.8, 0.7, 0.6];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need at least {needed} examples, got {found}")]
    TooFewExamples { needed: usize, found: usize },
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("{predictions} predictions but {truth} true labels")]
    LengthMismatch { predictions: usize, truth: usize },
    #[error("no labels to score")]
    EmptyInput,
    #[error("experiment needs at least one {0}")]
    EmptyGrid(&'static str),
    #[error("{features} feature rows but {labels} labels")]
    ShapeMismatch { features: usize, labels: usize },
    #[error(transparent)]
    Map(#[from] MapError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self, EvalError> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(EvalError::InvalidFraction(train_fraction));
        }
        Ok(SplitSpec {
            train_fraction,
            seed,
            stratified: true,
        })
    }
}

/// Partitions `0..labels.len()` into sorted train and test index lists.
///
/// The train size targets `round(fraction · N)`. Under stratification each
/// class gets its proportional share by largest remainder, clamped so that a
/// class with two or more members keeps at least one example on each side;
/// singleton classes go to train unless that would leave the test side
/// empty. Shuffling is seeded, one class at a time
/// in ascending label order.
pub fn split(labels: &[u32], spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    let n = labels.len();
    if n < 2 {
        return Err(EvalError::TooFewExamples {
            needed: 2,
            found: n,
        });
    }
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(EvalError::InvalidFraction(spec.train_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let target = ((spec.train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut train = Vec::with_capacity(target);
    let mut test = Vec::with_capacity(n - target);

    if !spec.stratified {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        train.extend_from_slice(&idx[..target]);
        test.extend_from_slice(&idx[target..]);
    } else {
        let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, &l) in labels.iter().enumerate() {
            groups.entry(l).or_default().push(i);
        }
        let groups: Vec<Vec<usize>> = groups.into_values().collect();
        let counts = stratified_counts(
            &groups.iter().map(Vec::len).collect::<Vec<_>>(),
            spec.train_fraction,
            target,
        );
        for (mut members, take) in groups.into_iter().zip(counts) {
            members.shuffle(&mut rng);
            train.extend_from_slice(&members[..take]);
            test.extend_from_slice(&members[take..]);
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Per-class train counts summing to `target` where the bounds allow. When
/// they cannot keep both sides nonempty (many singleton classes, say), the
/// per-class bounds are dropped and the counts go straight to `target`.
fn stratified_counts(sizes: &[usize], fraction: f64, target: usize) -> Vec<usize> {
    let quota: Vec<f64> = sizes.iter().map(|&s| fraction * s as f64).collect();
    let lo: Vec<usize> = sizes.iter().map(|_| 1).collect();
    let hi: Vec<usize> = sizes
        .iter()
        .map(|&s| if s >= 2 { s - 1 } else { s })
        .collect();
    let mut take: Vec<usize> = quota
        .iter()
        .zip(lo.iter().zip(&hi))
        .map(|(&q, (&l, &h))| (q.floor() as usize).clamp(l, h))
        .collect();
    adjust_counts(&mut take, &quota, &lo, &hi, target);
    let total: usize = take.iter().sum();
    let n: usize = sizes.iter().sum();
    if total == 0 || total == n {
        adjust_counts(&mut take, &quota, &vec![0; sizes.len()], sizes, target);
    }
    take
}

/// Moves counts one at a time toward `target` by largest remainder.
fn adjust_counts(take: &mut [usize], quota: &[f64], lo: &[usize], hi: &[usize], target: usize) {
    loop {
        let total: usize = take.iter().sum();
        let pick = if total < target {
            (0..take.len())
                .filter(|&c| take[c] < hi[c])
                .fold(None, |best: Option<usize>, c| match best {
                    Some(b) if quota[b] - take[b] as f64 >= quota[c] - take[c] as f64 => Some(b),
                    _ => Some(c),
                })
        } else if total > target {
            (0..take.len())
                .filter(|&c| take[c] > lo[c])
                .fold(None, |best: Option<usize>, c| match best {
                    Some(b) if take[b] as f64 - quota[b] >= take[c] as f64 - quota[c] => Some(b),
                    _ => Some(c),
                })
        } else {
            return;
        };
        match pick {
            Some(c) if total < target => take[c] += 1,
            Some(c) => take[c] -= 1,
            None => return,
        }
    }
}

pub fn accuracy(predictions: &[u32], truth: &[u32]) -> Result<f64, EvalError> {
    if predictions.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            truth: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let hits = predictions
        .iter()
        .zip(truth)
        .filter(|(p, t)| p == t)
        .count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Counts indexed `[true class][predicted class]` over a fixed class set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    class_set: Vec<u32>,
    counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    /// `class_set` must be sorted and contain every label seen.
    pub fn new(class_set: &[u32], predictions: &[u32], truth: &[u32]) -> Result<Self, EvalError> {
        if predictions.len() != truth.len() {
            return Err(EvalError::LengthMismatch {
                predictions: predictions.len(),
                truth: truth.len(),
            });
        }
        let k = class_set.len();
        let mut counts = vec![vec![0; k]; k];
        for (p, t) in predictions.iter().zip(truth) {
            let pi = class_set
                .binary_search(p)
                .expect("prediction outside class set");
            let ti = class_set.binary_search(t).expect("label outside class set");
            counts[ti][pi] += 1;
        }
        Ok(ConfusionMatrix {
            class_set: class_set.to_vec(),
            counts,
        })
    }

    pub fn class_set(&self) -> &[u32] {
        &self.class_set
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }

    /// Macro-averaged precision and recall over classes that occur in either
    /// the truth or the predictions; an empty denominator counts as 0.
    pub fn macro_precision_recall(&self) -> (f64, f64) {
        let k = self.counts.len();
        let (mut p_sum, mut r_sum, mut seen) = (0.0, 0.0, 0usize);
        for c in 0..k {
            let support: usize = self.counts[c].iter().sum();
            let predicted: usize = (0..k).map(|t| self.counts[t][c]).sum();
            if support == 0 && predicted == 0 {
                continue;
            }
            let tp = self.counts[c][c] as f64;
            p_sum += if predicted > 0 {
                tp / predicted as f64
            } else {
                0.0
            };
            r_sum += if support > 0 {
                tp / support as f64
            } else {
                0.0
            };
            seen += 1;
        }
        if seen == 0 {
            (0.0, 0.0)
        } else {
            (p_sum / seen as f64, r_sum / seen as f64)
        }
    }

    /// Rows joined by `;`, counts by spaces.
    pub fn to_compact(&self) -> String {
        let rows: Vec<String> = self
            .counts
            .iter()
            .map(|r| r.iter().map(usize::to_string).collect::<Vec<_>>().join(" "))
            .collect();
        rows.join(";")
    }
}

/// Row transform applied to features before each split is trained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preprocess {
    None,
    /// Scale every row to unit Euclidean length; rows of zeros stay zero.
    L2Normalize,
    /// Zero mean, unit variance per column, with statistics from the train rows.
    Standardize,
    /// Unit rows first, then per-column standardization.
    #[default]
    L2Standardize,
}

impl fmt::Display for Preprocess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preprocess::None => "none",
            Preprocess::L2Normalize => "l2",
            Preprocess::Standardize => "standardize",
            Preprocess::L2Standardize => "l2_standardize",
        })
    }
}

impl FromStr for Preprocess {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Preprocess::None),
            "l2" | "l2_normalize" => Ok(Preprocess::L2Normalize),
            "standardize" => Ok(Preprocess::Standardize),
            "l2_standardize" => Ok(Preprocess::L2Standardize),
            other => Err(format!(
                "unknown preprocessing {other:?}; valid: none, l2, standardize, l2_standardize"
            )),
        }
    }
}

/// A [`Preprocess`] with its column statistics fixed from a training matrix,
/// so the same transform can be replayed on unseen rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedPreprocess<T> {
    pub method: Preprocess,
    /// Per-column mean and scale; empty unless the method standardizes.
    pub mean: Vec<T>,
    pub scale: Vec<T>,
}

const PREPROCESS_MAGIC: &[u8; 8] = b"WMAPPRE\0";
const PREPROCESS_VERSION: u8 = 1;

fn l2_row<T: Scalar>(row: &mut [T]) {
    let norm = row.iter().map(|&v| v * v).sum::<T>().sqrt();
    if norm > T::zero() {
        row.iter_mut().for_each(|v| *v /= norm);
    }
}

impl<T: Scalar> FittedPreprocess<T> {
    pub fn fit(method: Preprocess, train: &FeatureMatrix<T>) -> Self {
        let (mean, scale) = match method {
            Preprocess::None | Preprocess::L2Normalize => (Vec::new(), Vec::new()),
            Preprocess::Standardize | Preprocess::L2Standardize => {
                let mut m = train.values().clone();
                if method == Preprocess::L2Standardize {
                    (0..m.rows()).for_each(|i| l2_row(m.row_mut(i)));
                }
                column_stats(&m)
            }
        };
        FittedPreprocess {
            method,
            mean,
            scale,
        }
    }

    pub fn apply_row(&self, row: &mut [T]) {
        if matches!(
            self.method,
            Preprocess::L2Normalize | Preprocess::L2Standardize
        ) {
            l2_row(row);
        }
        if !self.mean.is_empty() {
            for ((v, &m), &s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
    }

    /// Scaled counts are no longer counts, so anything but `None` relabels
    /// `Counts` input as `Latent`.
    pub fn apply(&self, x: &FeatureMatrix<T>) -> FeatureMatrix<T> {
        let mut m = x.values().clone();
        (0..m.rows()).for_each(|i| self.apply_row(m.row_mut(i)));
        let kind = match (self.method, x.kind()) {
            (Preprocess::None, k) => k,
            (_, FeatureKind::Counts) => FeatureKind::Latent,
            (_, k) => k,
        };
        FeatureMatrix::new(m, kind).expect("scaling keeps values finite")
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::new::<T>(PREPROCESS_MAGIC, PREPROCESS_VERSION);
        e.u8(self.method as u8);
        e.scalars(&self.mean);
        e.scalars(&self.scale);
        e.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut d =
            Decoder::new::<T>(bytes, PREPROCESS_MAGIC, "preprocessing", PREPROCESS_VERSION)?;
        let method = match d.u8()? {
            0 => Preprocess::None,
            1 => Preprocess::L2Normalize,
            2 => Preprocess::Standardize,
            3 => Preprocess::L2Standardize,
            t => {
                return Err(CodecError::Corrupt(format!(
                    "unknown preprocessing tag {t}"
                )))
            }
        };
        let mean = d.scalars()?;
        let scale = d.scalars()?;
        d.finish()?;
        if mean.len() != scale.len() {
            return Err(CodecError::Corrupt("mean and scale lengths differ".into()));
        }
        Ok(FittedPreprocess {
            method,
            mean,
            scale,
        })
    }
}

/// Population mean and standard deviation per column; constant columns get scale 1.
fn column_stats<T: Scalar>(m: &DenseMatrix<T>) -> (Vec<T>, Vec<T>) {
    let (n, f) = (m.rows(), m.cols());
    let nt = T::of_usize(n);
    let mut mean = vec![T::zero(); f];
    let mut scale = vec![T::zero(); f];
    for i in 0..n {
        for (mu, &v) in mean.iter_mut().zip(m.row(i)) {
            *mu += v / nt;
        }
    }
    for i in 0..n {
        for j in 0..f {
            let d = m.row(i)[j] - mean[j];
            scale[j] += d * d / nt;
        }
    }
    for s in &mut scale {
        *s = if *s > T::zero() { s.sqrt() } else { T::one() };
    }
    (mean, scale)
}

/// Grid and hyperparameters for [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig<T> {
    pub algorithms: Vec<ModelKind>,
    pub fractions: Vec<f64>,
    pub seeds: Vec<u64>,
    pub stratified: bool,
    pub preprocess: Preprocess,
    /// Per-kind settings; each cell overrides the SVM and MLP seeds with its own.
    pub train: TrainConfig<T>,
    /// Worker threads; 0 means one per available core.
    pub threads: usize,
}

impl<T: Scalar> Default for ExperimentConfig<T> {
    fn default() -> Self {
        ExperimentConfig {
            algorithms: ModelKind::ALL.to_vec(),
            fractions: DEFAULT_FRACTIONS.to_vec(),
            seeds: vec![0],
            stratified: true,
            preprocess: Preprocess::default(),
            train: TrainConfig::with_seed(0),
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellOutcome {
    Ok {
        accuracy: f64,
        confusion: ConfusionMatrix,
        macro_precision: f64,
        macro_recall: f64,
    },
    /// Training or prediction failed; holds the error kind and message.
    Failed { kind: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub algorithm: ModelKind,
    pub train_fraction: f64,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub outcome: CellOutcome,
    pub wall_time: Duration,
}

impl Cell {
    pub fn accuracy(&self) -> Option<f64> {
        match &self.outcome {
            CellOutcome::Ok { accuracy, .. } => Some(*accuracy),
            CellOutcome::Failed { .. } => None,
        }
    }

    /// `OK` or `FAILED(<kind>)`.
    pub fn status(&self) -> String {
        match &self.outcome {
            CellOutcome::Ok { .. } => "OK".to_string(),
            CellOutcome::Failed { kind, .. } => format!("FAILED({kind})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Ordered by (algorithm, fraction, seed) in configuration order.
    pub cells: Vec<Cell>,
    pub class_set: Vec<u32>,
    pub n_examples: usize,
    /// Key/value provenance echoed into both report formats.
    pub provenance: BTreeMap<String, String>,
}

pub const REPORT_COLUMNS: [&str; 13] = [
    "algorithm",
    "train_fraction",
    "seed",
    "status",
    "accuracy",
    "n_train",
    "n_test",
    "macro_precision",
    "macro_recall",
    "class_set",
    "confusion",
    "error",
    "provenance",
];

impl EvalReport {
    pub fn cell(&self, algorithm: ModelKind, fraction: f64, seed: u64) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.algorithm == algorithm && c.train_fraction == fraction && c.seed == seed)
    }

    pub fn algorithms(&self) -> Vec<ModelKind> {
        let mut seen = Vec::new();
        for c in &self.cells {
            if !seen.contains(&c.algorithm) {
                seen.push(c.algorithm);
            }
        }
        seen
    }

    pub fn fractions(&self) -> Vec<f64> {
        let mut seen: Vec<f64> = Vec::new();
        for c in &self.cells {
            if !seen.contains(&c.train_fraction) {
                seen.push(c.train_fraction);
            }
        }
        seen
    }

    pub fn seeds(&self) -> Vec<u64> {
        let mut seen = Vec::new();
        for c in &self.cells {
            if !seen.contains(&c.seed) {
                seen.push(c.seed);
            }
        }
        seen
    }

    /// Mean over fractions at one seed; `None` if any of those cells failed.
    pub fn mean_accuracy(&self, algorithm: ModelKind, seed: u64) -> Option<f64> {
        mean(
            self.cells
                .iter()
                .filter(|c| c.algorithm == algorithm && c.seed == seed)
                .map(Cell::accuracy),
        )
    }

    /// Mean over every fraction and seed; `None` if any cell failed.
    pub fn overall_mean_accuracy(&self, algorithm: ModelKind) -> Option<f64> {
        mean(
            self.cells
                .iter()
                .filter(|c| c.algorithm == algorithm)
                .map(Cell::accuracy),
        )
    }

    fn provenance_field(&self) -> String {
        self.provenance
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }

    /// Long-format CSV, one row per cell. Wall time is left out so reruns
    /// are byte-identical; see [`EvalReport::timings_csv`].
    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(REPORT_COLUMNS).expect("in-memory write");
        let prov = self.provenance_field();
        let classes = self
            .class_set
            .iter()
            .map(u32::to_string)
            .collect::<Vec<_>>()
            .join(" ");
        for c in &self.cells {
            let (acc, p, r, conf, err) = match &c.outcome {
                CellOutcome::Ok {
                    accuracy,
                    confusion,
                    macro_precision,
                    macro_recall,
                } => (
                    accuracy.to_string(),
                    macro_precision.to_string(),
                    macro_recall.to_string(),
                    confusion.to_compact(),
                    String::new(),
                ),
                CellOutcome::Failed { message, .. } => (
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    message.clone(),
                ),
            };
            w.write_record([
                c.algorithm.name().to_string(),
                c.train_fraction.to_string(),
                c.seed.to_string(),
                c.status(),
                acc,
                c.n_train.to_string(),
                c.n_test.to_string(),
                p,
                r,
                classes.clone(),
                conf,
                err,
                prov.clone(),
            ])
            .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    /// `algorithm,train_fraction,seed,wall_time_ms` per cell.
    pub fn timings_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["algorithm", "train_fraction", "seed", "wall_time_ms"])
            .expect("in-memory write");
        for c in &self.cells {
            w.write_record([
                c.algorithm.name().to_string(),
                c.train_fraction.to_string(),
                c.seed.to_string(),
                format!("{:.3}", c.wall_time.as_secs_f64() * 1e3),
            ])
            .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    /// Table with one row per (algorithm, fraction), one column per seed
    /// plus their mean, and a mean-over-fractions row per algorithm.
    pub fn summary(&self) -> String {
        let seeds = self.seeds();
        let fractions = self.fractions();
        let mut out = String::new();
        for (k, v) in &self.provenance {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let _ = writeln!(
            out,
            "# examples: {}, classes: {}",
            self.n_examples,
            self.class_set.len()
        );
        let _ = write!(out, "{:<16} {:>8}", "algorithm", "split");
        for s in &seeds {
            let _ = write!(out, " {:>12}", format!("seed={s}"));
        }
        let _ = writeln!(out, " {:>12}", "mean");
        let fmt_acc = |a: Option<f64>| a.map_or("FAILED".to_string(), |a| format!("{a:.4}"));
        for alg in self.algorithms() {
            for &f in &fractions {
                let split = format!("{:.0}-{:.0}", f * 100.0, (1.0 - f) * 100.0);
                let _ = write!(out, "{:<16} {:>8}", alg.name(), split);
                let accs: Vec<Option<f64>> = seeds
                    .iter()
                    .map(|&s| self.cell(alg, f, s).and_then(Cell::accuracy))
                    .collect();
                for a in &accs {
                    let _ = write!(out, " {:>12}", fmt_acc(*a));
                }
                let _ = writeln!(out, " {:>12}", fmt_acc(mean(accs.into_iter())));
            }
            let _ = write!(out, "{:<16} {:>8}", alg.name(), "mean");
            for &s in &seeds {
                let _ = write!(out, " {:>12}", fmt_acc(self.mean_accuracy(alg, s)));
            }
            let _ = writeln!(out, " {:>12}", fmt_acc(self.overall_mean_accuracy(alg)));
        }
        let failures: BTreeSet<(String, String)> = self
            .cells
            .iter()
            .filter_map(|c| match &c.outcome {
                CellOutcome::Failed { message, .. } => {
                    Some((c.algorithm.name().to_string(), message.clone()))
                }
                CellOutcome::Ok { .. } => None,
            })
            .collect();
        for (alg, msg) in failures {
            let _ = writeln!(out, "# {alg} failed: {msg}");
        }
        out
    }
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v?;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

fn run_cell<T: Scalar>(
    x: &FeatureMatrix<T>,
    y: &LabelVector,
    class_set: &[u32],
    algorithm: ModelKind,
    spec: SplitSpec,
    config: &ExperimentConfig<T>,
) -> Result<Cell, EvalError> {
    let start = Instant::now();
    let (train_idx, test_idx) = split(y.labels(), &spec)?;
    let fitted = FittedPreprocess::fit(config.preprocess, &x.select(&train_idx));
    let (x_train, x_test) = (
        fitted.apply(&x.select(&train_idx)),
        fitted.apply(&x.select(&test_idx)),
    );
    let y_train = y.select(&train_idx);
    let y_test = y.select(&test_idx);
    let mut train_cfg = config.train.clone();
    train_cfg.svm.seed = spec.seed;
    train_cfg.mlp.seed = spec.seed;
    let outcome = match train(algorithm, &x_train, &y_train, &train_cfg)
        .and_then(|m| m.predict_all(&x_test))
    {
        Ok(pred) => {
            let confusion = ConfusionMatrix::new(class_set, &pred, y_test.labels())?;
            let (macro_precision, macro_recall) = confusion.macro_precision_recall();
            CellOutcome::Ok {
                accuracy: accuracy(&pred, y_test.labels())?,
                confusion,
                macro_precision,
                macro_recall,
            }
        }
        Err(e) => failure(&e),
    };
    Ok(Cell {
        algorithm,
        train_fraction: spec.train_fraction,
        seed: spec.seed,
        n_train: train_idx.len(),
        n_test: test_idx.len(),
        outcome,
        wall_time: start.elapsed(),
    })
}

fn failure(e: &ClassifyError) -> CellOutcome {
    CellOutcome::Failed {
        kind: e.kind_name().to_string(),
        message: e.to_string(),
    }
}

/// Trains and scores every (algorithm, fraction, seed) cell. Classifier
/// errors become `FAILED` cells; only split or shape errors abort.
pub fn run_experiment<T: Scalar>(
    x: &FeatureMatrix<T>,
    y: &LabelVector,
    config: &ExperimentConfig<T>,
    provenance: BTreeMap<String, String>,
) -> Result<EvalReport, EvalError> {
    if x.n_rows() != y.len() {
        return Err(EvalError::ShapeMismatch {
            features: x.n_rows(),
            labels: y.len(),
        });
    }
    if y.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if config.algorithms.is_empty() {
        return Err(EvalError::EmptyGrid("algorithm"));
    }
    if config.fractions.is_empty() {
        return Err(EvalError::EmptyGrid("split fraction"));
    }
    if config.seeds.is_empty() {
        return Err(EvalError::EmptyGrid("seed"));
    }
    let mut jobs = Vec::new();
    for &alg in &config.algorithms {
        for &f in &config.fractions {
            for &seed in &config.seeds {
                let mut spec = SplitSpec::new(f, seed)?;
                spec.stratified = config.stratified;
                jobs.push((alg, spec));
            }
        }
    }
    let threads = match config.threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
    .min(jobs.len());
    let class_set = y.class_set().to_vec();
    let mut results: Vec<Option<Result<Cell, EvalError>>> = (0..jobs.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunk = jobs.len().div_ceil(threads);
        for (job_chunk, out_chunk) in jobs.chunks(chunk).zip(results.chunks_mut(chunk)) {
            let class_set = &class_set;
            scope.spawn(move || {
                for (&(alg, spec), out) in job_chunk.iter().zip(out_chunk) {
                    *out = Some(run_cell(x, y, class_set, alg, spec, config));
                }
            });
        }
    });
    let cells = results
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport {
        cells,
        class_set,
        n_examples: y.len(),
        provenance,
    })
}

/// Which text of a training-set row becomes its feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureText {
    /// The requirement alone.
    Requirement,
    /// The requirement followed by its matched weakness description: the
    /// whole text content of a training-set row.
    #[default]
    Row,
}

impl fmt::Display for FeatureText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureText::Requirement => "requirement",
            FeatureText::Row => "row",
        })
    }
}

impl FromStr for FeatureText {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "requirement" => Ok(FeatureText::Requirement),
            "row" => Ok(FeatureText::Row),
            other => Err(format!(
                "unknown feature text {other:?}; valid: requirement, row"
            )),
        }
    }
}

/// Text fed to the featurizer for one requirement and its paired description.
pub fn feature_text(requirement: &str, description: &str, which: FeatureText) -> String {
    match which {
        FeatureText::Requirement => requirement.to_string(),
        FeatureText::Row => format!("{requirement} {description}"),
    }
}

/// Distinct matched weaknesses of a dataset as `(cwe_id, description)`, ascending by id.
pub fn matched_descriptions(ds: &LabeledDataset) -> Vec<(u32, String)> {
    let map: BTreeMap<u32, &str> = ds
        .examples
        .iter()
        .map(|e| (e.matched_cwe_id, e.matched_description.as_str()))
        .collect();
    map.into_iter().map(|(id, d)| (id, d.to_string())).collect()
}

/// Texts the experiment featurizer is fitted on: each distinct weakness
/// description once, ascending by CWE id, then every requirement in order.
pub fn experiment_corpus(ds: &LabeledDataset) -> Vec<String> {
    matched_descriptions(ds)
        .into_iter()
        .map(|(_, d)| d)
        .chain(ds.examples.iter().map(|e| e.requirement_text.clone()))
        .collect()
}

/// Fits a featurizer on [`experiment_corpus`] and returns one feature row per example.
pub fn experiment_features<T: Scalar>(
    ds: &LabeledDataset,
    stopwords: &Stopwords,
    params: &SpaceParams,
    kind: FeatureKind,
    text: FeatureText,
) -> Result<(Featurizer<T>, FeatureMatrix<T>), EvalError> {
    if ds.examples.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let featurizer = Featurizer::fit(&experiment_corpus(ds), stopwords, params)?;
    let texts: Vec<String> = ds
        .examples
        .iter()
        .map(|e| feature_text(&e.requirement_text, &e.matched_description, text))
        .collect();
    let x = featurizer.features(&texts, kind);
    Ok((featurizer, x))
}

/// Index of the description closest to `requirement` in the featurizer's
/// latent space, ties to the lower index. `None` only when `descriptions` is empty.
pub fn nearest_description<T: Scalar>(
    featurizer: &Featurizer<T>,
    descriptions: &[LatentVector<T>],
    requirement: &str,
) -> Option<usize> {
    let q = featurizer.project(requirement);
    let mut best: Option<(T, usize)> = None;
    for (i, d) in descriptions.iter().enumerate() {
        let s = cosine(&q, d).expect("vectors share the featurizer's rank");
        if best.is_none_or(|(b, _)| s > b) {
            best = Some((s, i));
        }
    }
    best.map(|(_, i)| i)
}
