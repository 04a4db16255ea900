//! Command-line flags and how they overlay a [`RunConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;

/// Map software requirements onto CWE weakness categories and compare classifiers.
#[derive(Debug, Parser)]
#[command(name = "weakmap", version, about, propagate_version = true)]
pub struct Cli {
    /// TOML run configuration; flags override its values, which override defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for the LSA factorization, for the default seed list and for bundle training.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    pub force: bool,
    /// Directory all outputs are written into [default: out].
    #[arg(long, global = true, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Label every requirement with the category of its most similar CWE weakness.
    Map(MapArgs),
    /// Train and score each algorithm over every split fraction and seed.
    Experiment(ExperimentArgs),
    /// Predict weakness categories for new requirements with a saved bundle.
    Predict(PredictArgs),
    /// Print the provenance of an artifact: a training set, report, model, LSA model or bundle.
    Inspect(InspectArgs),
}

/// Text and LSA parameters shared by `map` and `experiment`.
#[derive(Debug, Args, Default)]
pub struct SpaceArgs {
    /// Requested LSA rank; capped at min(documents, terms) - 1 [default: 100].
    #[arg(long)]
    pub k: Option<usize>,
    /// Drop terms that occur in fewer documents than this [default: 1].
    #[arg(long)]
    pub min_df: Option<usize>,
    /// Term weighting before the SVD: raw_counts or tfidf [default: raw_counts].
    #[arg(long)]
    pub weighting: Option<String>,
    /// Stopword file, one word per line [default: built-in list].
    #[arg(long, value_name = "PATH")]
    pub stopwords: Option<PathBuf>,
}

/// Catalog file locations.
#[derive(Debug, Args, Default)]
pub struct CatalogArgs {
    /// CWE weakness CSV with ID, Name and Description columns [default: data/cwe_weaknesses.csv].
    #[arg(long, value_name = "PATH")]
    pub weaknesses: Option<PathBuf>,
    /// CWE category CSV with CategoryID, CategoryName and MemberID columns [default: data/cwe_categories.csv].
    #[arg(long, value_name = "PATH")]
    pub categories: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[command(flatten)]
    pub catalog: CatalogArgs,
    /// Requirements CSV [default: data/promise_exp_sample.csv].
    #[arg(long, value_name = "PATH")]
    pub requirements: Option<PathBuf>,
    /// Header of the requirement text column [default: RequirementText].
    #[arg(long)]
    pub text_column: Option<String>,
    #[command(flatten)]
    pub space: SpaceArgs,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Training-set CSV written by `map` [default: <output-dir>/training_set.csv].
    #[arg(long, value_name = "PATH")]
    pub training_set: Option<PathBuf>,
    #[command(flatten)]
    pub space: SpaceArgs,
    /// Comma-separated algorithms: gaussian_nb, multinomial_nb, linear_svm, decision_tree, mlp [default: all].
    #[arg(long, value_delimiter = ',')]
    pub algorithms: Option<Vec<String>>,
    /// Comma-separated train fractions [default: 0.8,0.7,0.6].
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
    /// Comma-separated split seeds [default: the global seed].
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Keep class proportions in every split: true or false [default: true].
    #[arg(long)]
    pub stratified: Option<bool>,
    /// Feature transform fitted on each train split: none, l2, standardize or l2_standardize [default: l2_standardize].
    #[arg(long)]
    pub preprocess: Option<String>,
    /// Text each row is featurized from: requirement or row (requirement plus matched description) [default: row].
    #[arg(long)]
    pub feature_text: Option<String>,
    /// Feature kind: latent, counts or tfidf [default: latent].
    #[arg(long)]
    pub features: Option<String>,
    /// Worker threads; 0 uses every core [default: 0].
    #[arg(long)]
    pub threads: Option<usize>,
    /// Also write timings.csv with per-cell wall time (not byte-reproducible).
    #[arg(long)]
    pub timings: bool,
    /// SVM passes over the training data [default: 50].
    #[arg(long)]
    pub svm_epochs: Option<usize>,
    /// SVM L2 regularization strength [default: 0.0001].
    #[arg(long)]
    pub svm_lambda: Option<f64>,
    /// Decision tree depth limit [default: 16].
    #[arg(long)]
    pub tree_max_depth: Option<usize>,
    /// Decision tree minimum leaf size [default: 1].
    #[arg(long)]
    pub tree_min_leaf: Option<usize>,
    /// MLP minibatch size [default: 32].
    #[arg(long)]
    pub mlp_batch_size: Option<usize>,
    /// MLP training epochs [default: 10].
    #[arg(long)]
    pub mlp_epochs: Option<usize>,
    /// Comma-separated MLP hidden layer widths [default: 128].
    #[arg(long, value_delimiter = ',')]
    pub mlp_hidden: Option<Vec<usize>>,
    /// MLP SGD learning rate [default: 0.01].
    #[arg(long)]
    pub mlp_learning_rate: Option<f64>,
    /// MLP SGD momentum [default: 0.9].
    #[arg(long)]
    pub mlp_momentum: Option<f64>,
    /// Retrain one algorithm on the whole dataset and save a prediction bundle here.
    #[arg(long, value_name = "DIR")]
    pub bundle_dir: Option<PathBuf>,
    /// Algorithm saved into the bundle [default: mlp].
    #[arg(long)]
    pub bundle_algorithm: Option<String>,
    #[command(flatten)]
    pub catalog: CatalogArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Bundle directory written by `experiment --bundle-dir`.
    #[arg(long, value_name = "DIR")]
    pub bundle: PathBuf,
    /// Requirements: plain text with one per line, or a CSV with the requirement text column.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Prediction CSV [default: <output-dir>/predictions.csv].
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Vocabulary to use in place of the bundled one; its hash must match the bundle.
    #[arg(long, value_name = "PATH")]
    pub vocabulary: Option<PathBuf>,
    /// Header of the requirement text column for CSV input [default: RequirementText].
    #[arg(long)]
    pub text_column: Option<String>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Artifact file or bundle directory.
    pub path: PathBuf,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl SpaceArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.lsa.k, self.k);
        set(&mut cfg.text.min_df, self.min_df);
        set(&mut cfg.text.weighting, self.weighting.clone());
        if self.stopwords.is_some() {
            cfg.paths.stopwords = self.stopwords.clone();
        }
    }
}

impl CatalogArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.paths.weaknesses, self.weaknesses.clone());
        set(&mut cfg.paths.categories, self.categories.clone());
    }
}

impl Cli {
    /// Defaults, then the config file, then every flag that was given.
    pub fn run_config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        set(&mut cfg.seed, self.seed);
        set(&mut cfg.output_dir, self.output_dir.clone());
        cfg.force |= self.force;
        match &self.command {
            Command::Map(a) => {
                a.catalog.apply(&mut cfg);
                set(&mut cfg.paths.requirements, a.requirements.clone());
                set(&mut cfg.text.text_column, a.text_column.clone());
                a.space.apply(&mut cfg);
            }
            Command::Experiment(a) => {
                a.catalog.apply(&mut cfg);
                a.space.apply(&mut cfg);
                if a.training_set.is_some() {
                    cfg.paths.training_set = a.training_set.clone();
                }
                let e = &mut cfg.experiment;
                set(&mut e.algorithms, a.algorithms.clone());
                set(&mut e.fractions, a.fractions.clone());
                if a.seeds.is_some() {
                    e.seeds = a.seeds.clone();
                }
                set(&mut e.stratified, a.stratified);
                set(&mut e.preprocess, a.preprocess.clone());
                set(&mut e.feature_text, a.feature_text.clone());
                set(&mut e.features, a.features.clone());
                set(&mut e.threads, a.threads);
                e.timings |= a.timings;
                if a.bundle_dir.is_some() {
                    e.bundle_dir = a.bundle_dir.clone();
                }
                set(&mut e.bundle_algorithm, a.bundle_algorithm.clone());
                set(&mut cfg.svm.epochs, a.svm_epochs);
                set(&mut cfg.svm.lambda, a.svm_lambda);
                set(&mut cfg.tree.max_depth, a.tree_max_depth);
                set(&mut cfg.tree.min_leaf, a.tree_min_leaf);
                set(&mut cfg.mlp.batch_size, a.mlp_batch_size);
                set(&mut cfg.mlp.epochs, a.mlp_epochs);
                set(&mut cfg.mlp.hidden_sizes, a.mlp_hidden.clone());
                set(&mut cfg.mlp.learning_rate, a.mlp_learning_rate);
                set(&mut cfg.mlp.momentum, a.mlp_momentum);
            }
            Command::Predict(a) => set(&mut cfg.text.text_column, a.text_column.clone()),
            Command::Inspect(_) => {}
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_which_overrides_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 3\n[lsa]\nk = 20\n[mlp]\nepochs = 4\n").unwrap();
        let cli = Cli::parse_from([
            "weakmap",
            "--config",
            path.to_str().unwrap(),
            "experiment",
            "--k",
            "30",
            "--seeds",
            "1,2,3",
        ]);
        let cfg = cli.run_config().unwrap();
        assert_eq!(cfg.lsa.k, 30);
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.mlp.epochs, 4);
        assert_eq!(cfg.mlp.batch_size, 32);
        assert_eq!(cfg.seeds(), vec![1, 2, 3]);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
