//! Run configuration: defaults, then an optional TOML file, then flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use weakmap::classify::{FeatureKind, MlpConfig, SvmConfig, TrainConfig, TreeConfig};
use weakmap::eval::{ExperimentConfig, DEFAULT_FRACTIONS};
use weakmap::lsa::DEFAULT_K;
use weakmap::{FeatureText, ModelKind, Preprocess, SpaceParams, Weighting};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub force: bool,
    pub paths: Paths,
    pub text: TextParams,
    pub lsa: LsaSection,
    pub experiment: ExperimentSection,
    pub svm: SvmSection,
    pub tree: TreeSection,
    pub mlp: MlpSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub weaknesses: PathBuf,
    pub categories: PathBuf,
    pub requirements: PathBuf,
    /// Built-in list when unset.
    pub stopwords: Option<PathBuf>,
    /// `<output_dir>/training_set.csv` when unset.
    pub training_set: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextParams {
    pub min_df: usize,
    pub weighting: String,
    pub project_column: String,
    pub text_column: String,
    pub class_column: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LsaSection {
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub algorithms: Vec<String>,
    pub fractions: Vec<f64>,
    /// `[seed]` when unset.
    pub seeds: Option<Vec<u64>>,
    pub stratified: bool,
    pub preprocess: String,
    pub feature_text: String,
    pub features: String,
    pub threads: usize,
    pub timings: bool,
    /// Where to save a prediction bundle; none is written when unset.
    pub bundle_dir: Option<PathBuf>,
    /// Algorithm retrained on the whole dataset for the bundle.
    pub bundle_algorithm: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmSection {
    pub epochs: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeSection {
    pub max_depth: usize,
    pub min_leaf: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpSection {
    pub batch_size: usize,
    pub epochs: usize,
    pub hidden_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub momentum: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            output_dir: PathBuf::from("out"),
            force: false,
            paths: Paths::default(),
            text: TextParams::default(),
            lsa: LsaSection::default(),
            experiment: ExperimentSection::default(),
            svm: SvmSection::default(),
            tree: TreeSection::default(),
            mlp: MlpSection::default(),
        }
    }
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            weaknesses: PathBuf::from("data/cwe_weaknesses.csv"),
            categories: PathBuf::from("data/cwe_categories.csv"),
            requirements: PathBuf::from("data/promise_exp_sample.csv"),
            stopwords: None,
            training_set: None,
        }
    }
}

impl Default for TextParams {
    fn default() -> Self {
        let cols = weakmap::ColumnMap::default();
        TextParams {
            min_df: 1,
            weighting: Weighting::RawCounts.to_string(),
            project_column: cols.project_id,
            text_column: cols.text,
            class_column: cols.class,
        }
    }
}

impl Default for LsaSection {
    fn default() -> Self {
        LsaSection { k: DEFAULT_K }
    }
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            algorithms: ModelKind::ALL
                .iter()
                .map(|k| k.name().to_string())
                .collect(),
            fractions: DEFAULT_FRACTIONS.to_vec(),
            seeds: None,
            stratified: true,
            preprocess: Preprocess::default().to_string(),
            feature_text: FeatureText::default().to_string(),
            features: FeatureKind::Latent.to_string(),
            threads: 0,
            timings: false,
            bundle_dir: None,
            bundle_algorithm: ModelKind::Mlp.name().to_string(),
        }
    }
}

impl Default for SvmSection {
    fn default() -> Self {
        let d = SvmConfig::<f64>::default();
        SvmSection {
            epochs: d.epochs,
            lambda: d.lambda,
        }
    }
}

impl Default for TreeSection {
    fn default() -> Self {
        let d = TreeConfig::default();
        TreeSection {
            max_depth: d.max_depth,
            min_leaf: d.min_leaf,
        }
    }
}

impl Default for MlpSection {
    fn default() -> Self {
        let d = MlpConfig::<f64>::default();
        MlpSection {
            batch_size: d.batch_size,
            epochs: d.epochs,
            hidden_sizes: d.hidden_sizes,
            learning_rate: d.learning_rate,
            momentum: d.momentum,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::user("InvalidConfig", msg)
}

impl RunConfig {
    /// Defaults overlaid with the TOML file at `path`; absent keys keep their defaults.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| invalid(format!("{}: {}", path.display(), e.message())))
    }

    pub fn training_set_path(&self) -> PathBuf {
        self.paths
            .training_set
            .clone()
            .unwrap_or_else(|| self.output_dir.join(weakmap::mapper::TRAINING_SET_FILE))
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.experiment
            .seeds
            .clone()
            .unwrap_or_else(|| vec![self.seed])
    }

    pub fn columns(&self) -> weakmap::ColumnMap {
        weakmap::ColumnMap {
            project_id: self.text.project_column.clone(),
            text: self.text.text_column.clone(),
            class: self.text.class_column.clone(),
        }
    }

    pub fn weighting(&self) -> Result<Weighting, CliError> {
        self.text.weighting.parse().map_err(|e: String| invalid(e))
    }

    pub fn space_params(&self) -> Result<SpaceParams, CliError> {
        if self.lsa.k == 0 {
            return Err(invalid("k must be at least 1"));
        }
        if self.text.min_df == 0 {
            return Err(invalid("min_df must be at least 1"));
        }
        Ok(SpaceParams {
            k: self.lsa.k,
            seed: self.seed,
            weighting: self.weighting()?,
            min_df: self.text.min_df,
        })
    }

    pub fn algorithms(&self) -> Result<Vec<ModelKind>, CliError> {
        if self.experiment.algorithms.is_empty() {
            return Err(invalid("at least one algorithm is required"));
        }
        let mut out: Vec<ModelKind> = Vec::new();
        for name in &self.experiment.algorithms {
            let kind: ModelKind = name
                .trim()
                .parse()
                .map_err(|e: String| CliError::user("UnknownAlgorithm", e))?;
            if !out.contains(&kind) {
                out.push(kind);
            }
        }
        Ok(out)
    }

    pub fn bundle_algorithm(&self) -> Result<ModelKind, CliError> {
        self.experiment
            .bundle_algorithm
            .parse()
            .map_err(|e: String| CliError::user("UnknownAlgorithm", e))
    }

    pub fn feature_text(&self) -> Result<FeatureText, CliError> {
        self.experiment
            .feature_text
            .parse()
            .map_err(|e: String| invalid(e))
    }

    pub fn feature_kind(&self) -> Result<FeatureKind, CliError> {
        self.experiment
            .features
            .parse()
            .map_err(|e: String| invalid(e))
    }

    pub fn mlp_config(&self) -> MlpConfig<f64> {
        let m = &self.mlp;
        MlpConfig {
            batch_size: m.batch_size,
            epochs: m.epochs,
            hidden_sizes: m.hidden_sizes.clone(),
            learning_rate: m.learning_rate,
            momentum: m.momentum,
            seed: self.seed,
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig<f64>, CliError> {
        let mlp = self.mlp_config();
        mlp.validate().map_err(|e| invalid(e.to_string()))?;
        // negated so NaN is rejected too
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if self.svm.epochs == 0 || !(self.svm.lambda > 0.0) {
            return Err(invalid("svm epochs must be at least 1 and lambda positive"));
        }
        Ok(TrainConfig {
            svm: SvmConfig {
                epochs: self.svm.epochs,
                lambda: self.svm.lambda,
                seed: self.seed,
            },
            tree: TreeConfig {
                max_depth: self.tree.max_depth,
                min_leaf: self.tree.min_leaf.max(1),
            },
            mlp,
        })
    }

    pub fn experiment_config(&self) -> Result<ExperimentConfig<f64>, CliError> {
        let e = &self.experiment;
        if e.fractions.is_empty() {
            return Err(invalid("at least one split fraction is required"));
        }
        if let Some(f) = e.fractions.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
            return Err(invalid(format!(
                "train fraction must lie strictly between 0 and 1, got {f}"
            )));
        }
        if self.seeds().is_empty() {
            return Err(invalid("at least one seed is required"));
        }
        Ok(ExperimentConfig {
            algorithms: self.algorithms()?,
            fractions: e.fractions.clone(),
            seeds: self.seeds(),
            stratified: e.stratified,
            preprocess: e.preprocess.parse().map_err(|e: String| invalid(e))?,
            train: self.train_config()?,
            threads: e.threads,
        })
    }

    /// The effective configuration as flat `section.key` → JSON value pairs.
    pub fn flattened(&self) -> BTreeMap<String, serde_json::Value> {
        let mut out = BTreeMap::new();
        flatten(
            "",
            &serde_json::to_value(self).expect("config serializes"),
            &mut out,
        );
        out
    }
}

fn flatten(prefix: &str, v: &serde_json::Value, out: &mut BTreeMap<String, serde_json::Value>) {
    match v {
        serde_json::Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, child, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg: RunConfig = toml::from_str("seed = 4\n[lsa]\nk = 12\n").unwrap();
        assert_eq!((cfg.seed, cfg.lsa.k), (4, 12));
        assert_eq!(cfg.text.min_df, 1);
        assert_eq!(cfg.seeds(), vec![4]);
        assert_eq!(cfg.algorithms().unwrap().len(), 5);
    }

    #[test]
    fn unknown_algorithm_lists_valid_names() {
        let mut cfg = RunConfig::default();
        cfg.experiment.algorithms = vec!["svm".into(), "forest".into()];
        let err = cfg.algorithms().unwrap_err();
        assert_eq!(err.kind, "UnknownAlgorithm");
        assert!(err.message.contains("gaussian_nb") && err.message.contains("mlp"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[lsa]\nrank = 3\n").is_err());
    }

    #[test]
    fn flattened_keys_are_dotted() {
        let flat = RunConfig::default().flattened();
        assert_eq!(flat["lsa.k"], serde_json::json!(100));
        assert_eq!(flat["mlp.batch_size"], serde_json::json!(32));
    }
}
