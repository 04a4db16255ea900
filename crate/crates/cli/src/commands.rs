//! The four subcommands. Each returns what it wrote; printing is left to the caller.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use weakmap::classify::{model_file_name, train, LabelVector, TrainedModel};
use weakmap::corpus::read_srs_lines;
use weakmap::eval::{experiment_features, matched_descriptions, FittedPreprocess};
use weakmap::lsa::LatentModel;
use weakmap::mapper::{
    import_training_set, provenance_path, write_map_outputs, LabeledDataset, LOW_SIMILARITY,
};
use weakmap::text::DEFAULT_STOPWORDS;
use weakmap::{
    build_training_set, load_cwe_catalog, load_requirements, run_experiment, sha256_hex,
    EvalReport, Stopwords,
};

use crate::bundle::{self, Bundle, Manifest, FORMAT_VERSION};
use crate::config::RunConfig;
use crate::error::CliError;

pub const REPORT_FILE: &str = "report.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const PREDICTION_COLUMNS: [&str; 4] = [
    "line_number",
    "requirement_text",
    "predicted_category_id",
    "category_name",
];

fn load_stopwords(cfg: &RunConfig) -> Result<(Stopwords, String), CliError> {
    match &cfg.paths.stopwords {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            Ok((Stopwords::parse(&text), text))
        }
        None => Ok((Stopwords::default(), DEFAULT_STOPWORDS.to_string())),
    }
}

fn refuse_existing(paths: &[&Path], force: bool) -> Result<(), CliError> {
    if force {
        return Ok(());
    }
    match paths.iter().find(|p| p.exists()) {
        Some(p) => Err(CliError::user(
            "RefuseOverwrite",
            format!(
                "{} already exists; refusing to overwrite without force",
                p.display()
            ),
        )),
        None => Ok(()),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub struct MapOutcome {
    pub dataset: LabeledDataset,
    pub files: Vec<PathBuf>,
}

/// Ingest, tokenize, factor and map; writes the training set, its provenance
/// and the low-similarity report.
pub fn cmd_map(cfg: &RunConfig) -> Result<MapOutcome, CliError> {
    let params = cfg.space_params()?;
    let (stopwords, _) = load_stopwords(cfg)?;
    let catalog = load_cwe_catalog(&cfg.paths.weaknesses, &cfg.paths.categories)?;
    let reqs = load_requirements(&cfg.paths.requirements, &cfg.columns())?;
    let mut dataset = build_training_set::<f64>(&catalog, &reqs, &stopwords, &params)?;
    if let Some(p) = dataset.provenance.as_mut() {
        p.config = cfg.flattened();
    }
    let files = write_map_outputs(&cfg.output_dir, &dataset, cfg.force)?;
    Ok(MapOutcome {
        dataset,
        files: files.to_vec(),
    })
}

pub struct ExperimentOutcome {
    pub report: EvalReport,
    pub files: Vec<PathBuf>,
}

fn config_value(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Trains and scores every (algorithm, fraction, seed) cell; writes the
/// report CSV and summary, plus timings and a bundle when asked.
pub fn cmd_experiment(cfg: &RunConfig) -> Result<ExperimentOutcome, CliError> {
    let exp = cfg.experiment_config()?;
    let params = cfg.space_params()?;
    let kind = cfg.feature_kind()?;
    let text = cfg.feature_text()?;
    let bundle_kind = match cfg.experiment.bundle_dir {
        Some(_) => Some(cfg.bundle_algorithm()?),
        None => None,
    };
    let out = &cfg.output_dir;
    let (report_path, summary_path, timings_path) = (
        out.join(REPORT_FILE),
        out.join(SUMMARY_FILE),
        out.join(TIMINGS_FILE),
    );
    let mut planned = vec![report_path.as_path(), summary_path.as_path()];
    if cfg.experiment.timings {
        planned.push(&timings_path);
    }
    refuse_existing(&planned, cfg.force)?;
    let (stopwords, stopword_text) = load_stopwords(cfg)?;

    let ds = import_training_set(&cfg.training_set_path())?;
    if ds.examples.is_empty() {
        return Err(CliError::user(
            "EmptyInput",
            format!("{} has no rows", cfg.training_set_path().display()),
        ));
    }
    let (featurizer, x) = experiment_features::<f64>(&ds, &stopwords, &params, kind, text)?;
    let y = LabelVector::new(ds.labels());

    let dataset_hash = ds.content_hash();
    let mut provenance = BTreeMap::new();
    provenance.insert("dataset_hash".to_string(), dataset_hash.clone());
    if let Some(p) = &ds.provenance {
        provenance.insert("map.vocab_hash".into(), p.vocab_hash.clone());
        provenance.insert("map.catalog_hash".into(), p.catalog_hash.clone());
        provenance.insert("map.requirements_hash".into(), p.requirements_hash.clone());
        provenance.insert("map.k".into(), p.k.to_string());
    }
    provenance.insert(
        "features.vocab_hash".into(),
        featurizer.vocabulary().content_hash(),
    );
    provenance.insert("features.k".into(), featurizer.k().to_string());
    for (key, v) in cfg.flattened() {
        provenance.insert(format!("config.{key}"), config_value(&v));
    }

    let report = run_experiment(&x, &y, &exp, provenance)?;
    create_dir(out)?;
    write_file(&report_path, &report.to_csv())?;
    write_file(&summary_path, report.summary().as_bytes())?;
    let mut files = vec![report_path, summary_path];
    if cfg.experiment.timings {
        write_file(&timings_path, &report.timings_csv())?;
        files.push(timings_path);
    }

    if let (Some(dir), Some(alg)) = (&cfg.experiment.bundle_dir, bundle_kind) {
        let train_cfg = cfg.train_config()?;
        let preprocess = FittedPreprocess::fit(exp.preprocess, &x);
        let model = train(alg, &preprocess.apply(&x), &y, &train_cfg)?;
        let catalog = load_cwe_catalog(&cfg.paths.weaknesses, &cfg.paths.categories)?;
        let category_names = model
            .class_set()
            .iter()
            .map(|&id| {
                (
                    id,
                    catalog
                        .category(id)
                        .map(|c| c.name.clone())
                        .unwrap_or_default(),
                )
            })
            .collect();
        let model_file = model_file_name(alg, cfg.seed);
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            algorithm: alg,
            seed: cfg.seed,
            model_file,
            class_set: model.class_set().to_vec(),
            features: kind,
            feature_text: text,
            preprocess: exp.preprocess,
            weighting: featurizer.weighting(),
            k: featurizer.k(),
            vocab_hash: featurizer.vocabulary().content_hash(),
            stopword_hash: stopwords.content_hash().to_string(),
            lsa_hash: sha256_hex(&featurizer.model().to_bytes()),
            preprocess_hash: sha256_hex(&preprocess.to_bytes()),
            model_hash: sha256_hex(&model.to_bytes()),
            dataset_hash,
            config: cfg.flattened(),
        };
        let bundle = Bundle {
            manifest,
            featurizer,
            stopword_text,
            preprocess,
            model,
            descriptions: matched_descriptions(&ds),
            category_names,
        };
        files.push(bundle.write(dir, cfg.force)?);
    }
    Ok(ExperimentOutcome { report, files })
}

/// `(line_number, text)` from a plain-text SRS or from the text column of a CSV.
fn read_inputs(path: &Path, text_column: &str) -> Result<Vec<(u64, String)>, CliError> {
    let raw = fs::read(path).map_err(|e| CliError::io(path, e))?;
    if raw.iter().all(u8::is_ascii_whitespace) {
        return Ok(Vec::new());
    }
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if !is_csv {
        return Ok(read_srs_lines(path)?
            .into_iter()
            .map(|(n, t)| (n as u64, t))
            .collect());
    }
    let bad = |e: csv::Error| CliError::user("MalformedRow", format!("{}: {e}", path.display()));
    let mut r = csv::Reader::from_reader(raw.as_slice());
    let col = r
        .headers()
        .map_err(bad)?
        .iter()
        .position(|h| h == text_column)
        .ok_or_else(|| {
            CliError::user(
                "MissingColumn",
                format!("{}: missing column {text_column:?}", path.display()),
            )
        })?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(bad)?;
        let line = rec.position().map_or(0, |p| p.line());
        let text = rec.get(col).unwrap_or("").trim();
        if !text.is_empty() {
            out.push((line, text.to_string()));
        }
    }
    Ok(out)
}

pub struct PredictOutcome {
    pub rows: usize,
    pub output: PathBuf,
}

pub fn cmd_predict(
    cfg: &RunConfig,
    bundle_dir: &Path,
    input: &Path,
    output: Option<&Path>,
    vocabulary: Option<&Path>,
) -> Result<PredictOutcome, CliError> {
    let output = output.map_or_else(|| cfg.output_dir.join(PREDICTIONS_FILE), Path::to_path_buf);
    refuse_existing(&[&output], cfg.force)?;
    let bundle = Bundle::load(bundle_dir, vocabulary)?;
    let inputs = read_inputs(input, &cfg.text.text_column)?;
    let texts: Vec<String> = inputs.iter().map(|(_, t)| t.clone()).collect();
    let predicted = if texts.is_empty() {
        Vec::new()
    } else {
        bundle.predict(&texts)?
    };

    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let bad = |e: csv::Error| CliError::user("IoError", format!("{}: {e}", output.display()));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(PREDICTION_COLUMNS).map_err(bad)?;
    for ((line, text), category) in inputs.iter().zip(&predicted) {
        let name = bundle
            .category_names
            .get(category)
            .map_or("", String::as_str);
        w.write_record([line.to_string().as_str(), text, &category.to_string(), name])
            .map_err(bad)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::internal("IoError", e.to_string()))?;
    write_file(&output, &bytes)?;
    Ok(PredictOutcome {
        rows: predicted.len(),
        output,
    })
}

fn not_an_artifact(path: &Path) -> CliError {
    CliError::user(
        "NotAnArtifact",
        format!(
            "{} carries no provenance this tool recognizes",
            path.display()
        ),
    )
}

/// Human-readable provenance of a bundle, training set, report or binary artifact.
pub fn cmd_inspect(path: &Path) -> Result<String, CliError> {
    if path.is_dir() {
        if !path.join(bundle::MANIFEST_FILE).exists() {
            return Err(not_an_artifact(path));
        }
        let manifest = bundle::read_manifest(path)?;
        return Ok(serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n");
    }
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "json" => {
            let v: serde_json::Value = serde_json::from_slice(&bytes)
                .map_err(|e| CliError::user("MalformedRow", format!("{}: {e}", path.display())))?;
            Ok(serde_json::to_string_pretty(&v).expect("json re-serializes") + "\n")
        }
        "csv" => {
            let side = provenance_path(path);
            if side.exists() {
                return cmd_inspect(&side);
            }
            let mut r = csv::Reader::from_reader(bytes.as_slice());
            let bad =
                |e: csv::Error| CliError::user("MalformedRow", format!("{}: {e}", path.display()));
            let col = r
                .headers()
                .map_err(bad)?
                .iter()
                .position(|h| h == "provenance")
                .ok_or_else(|| not_an_artifact(path))?;
            let first = r
                .records()
                .next()
                .ok_or_else(|| not_an_artifact(path))?
                .map_err(bad)?;
            let field = first.get(col).unwrap_or("");
            Ok(field.split(';').map(|kv| format!("{kv}\n")).collect())
        }
        _ => inspect_binary(path, &bytes),
    }
}

fn inspect_binary(path: &Path, bytes: &[u8]) -> Result<String, CliError> {
    let hash = sha256_hex(bytes);
    if let Ok(m) = TrainedModel::<f64>::from_bytes(bytes) {
        let classes: Vec<String> = m.class_set().iter().map(u32::to_string).collect();
        return Ok(format!(
            "artifact=classifier\nalgorithm={}\nclass_set={}\nn_features={}\nsha256={hash}\n",
            m.kind(),
            classes.join(","),
            m.n_features()
        ));
    }
    if let Ok(m) = LatentModel::<f64>::from_bytes(bytes) {
        let sv: Vec<String> = m
            .singular_values()
            .iter()
            .take(5)
            .map(|s| format!("{s:.6}"))
            .collect();
        return Ok(format!(
            "artifact=lsa_model\nk={}\nseed={}\nn_terms={}\nn_docs={}\ntop_singular_values={}\nsha256={hash}\n",
            m.k(),
            m.seed(),
            m.n_terms(),
            m.n_docs(),
            sv.join(",")
        ));
    }
    if let Ok(p) = FittedPreprocess::<f64>::from_bytes(bytes) {
        return Ok(format!(
            "artifact=preprocess\nmethod={}\ncolumns={}\nsha256={hash}\n",
            p.method,
            p.mean.len()
        ));
    }
    Err(not_an_artifact(path))
}

/// One log line describing a finished map run.
pub fn map_log_line(outcome: &MapOutcome) -> String {
    let ds = &outcome.dataset;
    let low = ds.low_similarity_rows().len();
    match &ds.provenance {
        Some(p) => format!(
            "map: {} requirements onto {} weaknesses, {} terms, k={}; {low} below similarity {LOW_SIMILARITY}",
            p.n_requirements, p.n_weaknesses, p.n_terms, p.k
        ),
        None => format!("map: {} requirements; {low} below similarity {LOW_SIMILARITY}", ds.examples.len()),
    }
}
