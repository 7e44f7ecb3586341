//! End-to-end driver: generate or load, split, featurize, standardize on the
//! training side only, fit every enabled algorithm and evaluate on the test side.
//!
//! All artifacts are built in memory first and then written through temporary
//! files, so a failed run leaves no partial outputs behind.

mod config;

pub use config::{load_config, parse_config, PipelineConfig, PreprocessConfig};

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::classifiers::{
    self, forest_fit_with, model_from_text, model_to_text, Algorithm, ForestOptions, Hyperparams,
    TrainedModel,
};
use crate::error::{Error, Result};
use crate::eval::{
    classification_report, confusion_matrix, rank_by_accuracy, render_report, render_report_csv,
    render_summary, ClassReport, ConfusionMatrix, DecimalStyle, RankedEntry,
};
use crate::preprocess::{
    apply_standardizer, extract_grid, featurize, fit_standardizer, median_filter, normalize_raster,
    FeatureVector, Standardizer,
};
use crate::synthgen::{generate_dataset, render_raster, simulate_capture};
use crate::vfdata::{grid_sidecar_path, load_dataset, stratified_split, Dataset, Label};

pub const STANDARDIZER_FILE: &str = "standardizer.txt";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const SUMMARY_FILE: &str = "summary.txt";

pub fn model_file(algorithm: Algorithm) -> String {
    format!("model_{}.txt", algorithm.slug())
}

pub fn report_file(algorithm: Algorithm) -> String {
    format!("report_{}.txt", algorithm.slug())
}

/// A file to be written under the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            bytes: text.into().into_bytes(),
        }
    }
}

/// Writes every artifact to a temporary sibling and renames them into place
/// once all writes succeeded. On failure the temporaries are removed.
pub fn write_artifacts(out_dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::with_capacity(artifacts.len());
    let cleanup = |staged: &[(PathBuf, PathBuf)]| {
        for (tmp, _) in staged {
            let _ = fs::remove_file(tmp);
        }
    };
    for a in artifacts {
        let dest = out_dir.join(&a.name);
        let tmp = out_dir.join(format!(".{}.partial", a.name));
        if let Err(e) = fs::write(&tmp, &a.bytes) {
            let _ = fs::remove_file(&tmp);
            cleanup(&staged);
            return Err(Error::io(tmp, e));
        }
        staged.push((tmp, dest));
    }
    let mut done = Vec::with_capacity(staged.len());
    for (i, (tmp, dest)) in staged.iter().enumerate() {
        if let Err(e) = fs::rename(tmp, dest) {
            cleanup(&staged[i..]);
            for d in &done {
                let _ = fs::remove_file(d);
            }
            return Err(Error::io(dest.clone(), e));
        }
        done.push(dest.clone());
    }
    Ok(done)
}

/// Features of every record in dataset order. With preprocessing on, each
/// record is rendered, passed through the simulated capture (seeded with
/// `seed ^ index`) and read back before featurization.
pub fn dataset_features(dataset: &Dataset, config: &PipelineConfig) -> Result<Vec<FeatureVector>> {
    let grid = dataset.grid();
    let (peak, slope) = (config.base_peak_db, config.base_slope_db_per_deg);
    dataset
        .records()
        .par_iter()
        .enumerate()
        .map(|(i, rec)| {
            let values = match &config.preprocess {
                None => rec.sensitivities.clone(),
                Some(p) => {
                    let raster = render_raster(rec, grid, p.raster_size, p.raster_size)?;
                    let captured = simulate_capture(&raster, &p.capture, p.seed ^ i as u64)?;
                    let cleaned = normalize_raster(&median_filter(&captured)?)?;
                    extract_grid(&cleaned, grid, rec.eye)?
                }
            };
            featurize(&values, grid, config.feature_mode, |r| peak - slope * r)
        })
        .collect()
}

/// Everything up to, but not including, model fitting.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub dataset: Dataset,
    /// Whether the dataset was generated by this run (and must be written out).
    pub generated: bool,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub standardizer: Standardizer,
    pub x_train: Vec<Vec<f64>>,
    pub y_train: Vec<Label>,
    pub x_test: Vec<Vec<f64>>,
    pub y_test: Vec<Label>,
}

fn obtain_dataset(config: &PipelineConfig, allow_generate: bool) -> Result<(Dataset, bool)> {
    match &config.generate {
        Some((gen, seed)) if allow_generate => Ok((
            generate_dataset(gen, *seed).map_err(|e| e.in_stage("generate"))?,
            true,
        )),
        _ => Ok((
            load_dataset(&config.effective_dataset_path()).map_err(|e| e.in_stage("load"))?,
            false,
        )),
    }
}

fn split_indices(dataset: &Dataset, config: &PipelineConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    let (train, test) = stratified_split(dataset, config.test_fraction, config.split_seed)?;
    let position: HashMap<&str, usize> = dataset
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| (r.record_id.as_str(), i))
        .collect();
    let ids = |d: &Dataset| -> Vec<usize> {
        d.records()
            .iter()
            .map(|r| position[r.record_id.as_str()])
            .collect()
    };
    Ok((ids(&train), ids(&test)))
}

fn prepare_with(
    config: &PipelineConfig,
    allow_generate: bool,
    standardizer: Option<Standardizer>,
) -> Result<Prepared> {
    let (dataset, generated) = obtain_dataset(config, allow_generate)?;
    let (train_indices, test_indices) =
        split_indices(&dataset, config).map_err(|e| e.in_stage("split"))?;
    let features = dataset_features(&dataset, config).map_err(|e| e.in_stage("preprocess"))?;
    let pick = |idx: &[usize]| -> Vec<FeatureVector> {
        idx.iter().map(|&i| features[i].clone()).collect()
    };
    let (f_train, f_test) = (pick(&train_indices), pick(&test_indices));
    let standardizer = match standardizer {
        Some(s) => s,
        None => fit_standardizer(&f_train).map_err(|e| e.in_stage("standardize"))?,
    };
    let standardize = |fs: &[FeatureVector]| -> Result<Vec<Vec<f64>>> {
        fs.iter()
            .map(|f| apply_standardizer(&standardizer, f).map(FeatureVector::into_values))
            .collect()
    };
    let x_train = standardize(&f_train).map_err(|e| e.in_stage("standardize"))?;
    let x_test = standardize(&f_test).map_err(|e| e.in_stage("standardize"))?;
    let labels = dataset.labels();
    let y_train = train_indices.iter().map(|&i| labels[i]).collect();
    let y_test = test_indices.iter().map(|&i| labels[i]).collect();
    Ok(Prepared {
        dataset,
        generated,
        train_indices,
        test_indices,
        standardizer,
        x_train,
        y_train,
        x_test,
        y_test,
    })
}

/// Generates or loads the dataset, splits it and fits the standardizer on the
/// training side.
pub fn prepare(config: &PipelineConfig) -> Result<Prepared> {
    prepare_with(config, true, None)
}

pub fn fit_algorithm(
    prepared: &Prepared,
    hyper: &Hyperparams,
    parallel: bool,
) -> Result<TrainedModel> {
    let (x, y) = (&prepared.x_train, &prepared.y_train);
    let model = if hyper.algorithm == Algorithm::RandomForest {
        hyper.validate()?;
        let options = ForestOptions {
            parallel,
            ..ForestOptions::default()
        };
        TrainedModel::RandomForest(forest_fit_with(x, y, hyper, options)?)
    } else {
        classifiers::fit(x, y, hyper)?
    };
    Ok(model)
}

/// Test-set outcome of one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmResult {
    pub algorithm: Algorithm,
    pub matrix: ConfusionMatrix,
    pub report: ClassReport,
}

pub fn evaluate_model(
    model: &TrainedModel,
    x: &[Vec<f64>],
    y: &[Label],
) -> Result<AlgorithmResult> {
    let predicted = x
        .iter()
        .map(|f| classifiers::predict(model, f))
        .collect::<Result<Vec<_>>>()?;
    let matrix = confusion_matrix(y, &predicted)?;
    Ok(AlgorithmResult {
        algorithm: model.algorithm(),
        matrix,
        report: classification_report(&matrix),
    })
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// In the configured algorithm order; empty for `train`.
    pub results: Vec<AlgorithmResult>,
    pub ranked: Vec<RankedEntry>,
    pub written: Vec<PathBuf>,
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

fn run_header(config: &PipelineConfig, prepared: &Prepared) -> Vec<(String, String)> {
    let dataset_name = config
        .effective_dataset_path()
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    vec![
        (
            "preprocess".into(),
            on_off(config.preprocess.is_some()).into(),
        ),
        ("feature_mode".into(), config.feature_mode.to_string()),
        ("dataset".into(), dataset_name),
        ("test_fraction".into(), config.test_fraction.to_string()),
        ("split_seed".into(), config.split_seed.to_string()),
        ("train_n".into(), prepared.train_indices.len().to_string()),
        ("test_n".into(), prepared.test_indices.len().to_string()),
    ]
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Split sizes and the standardizer statistics, which must come from the
/// training records alone.
fn manifest(config: &PipelineConfig, prepared: &Prepared) -> String {
    let labels = prepared.dataset.labels();
    let count = |idx: &[usize], l: Label| idx.iter().filter(|&&i| labels[i] == l).count();
    let mut out = String::from("vfclassify run manifest v1\n");
    for (k, v) in run_header(config, prepared) {
        let _ = writeln!(out, "{k}={v}");
    }
    if let Some(p) = &config.preprocess {
        let _ = writeln!(out, "raster_size={}", p.raster_size);
        let _ = writeln!(out, "capture_seed={}", p.seed);
    }
    if let Some((_, seed)) = &config.generate {
        let _ = writeln!(out, "generator_seed={seed}");
    }
    let [o, g] = prepared.dataset.label_counts();
    let _ = writeln!(
        out,
        "records={} other={o} glaucoma={g}",
        prepared.dataset.len()
    );
    for (name, idx) in [
        ("train", &prepared.train_indices),
        ("test", &prepared.test_indices),
    ] {
        let _ = writeln!(
            out,
            "{name}={} other={} glaucoma={}",
            idx.len(),
            count(idx, Label::Other),
            count(idx, Label::Glaucoma)
        );
    }
    let _ = writeln!(out, "standardizer_fit_on=train");
    let _ = writeln!(
        out,
        "standardizer_means={}",
        join(prepared.standardizer.means())
    );
    let _ = writeln!(
        out,
        "standardizer_sds={}",
        join(prepared.standardizer.sds())
    );
    out
}

fn dataset_artifacts(dataset: &Dataset, csv_name: &str) -> [Artifact; 2] {
    let sidecar = grid_sidecar_path(Path::new(csv_name));
    [
        Artifact::new(csv_name, dataset.to_csv()),
        Artifact::new(sidecar.to_string_lossy(), dataset.grid().to_sidecar()),
    ]
}

fn report_artifacts(
    config: &PipelineConfig,
    prepared: &Prepared,
    results: &[AlgorithmResult],
) -> (Vec<Artifact>, Vec<RankedEntry>) {
    let mut artifacts = Vec::new();
    let header = run_header(config, prepared);
    for r in results {
        let mut h = vec![("algorithm".to_string(), r.algorithm.tag().to_string())];
        h.extend(header.iter().cloned());
        let hyper = config
            .hyperparams_for(r.algorithm)
            .map(|h| h.echo().into_iter().skip(1).collect::<Vec<_>>())
            .unwrap_or_default();
        let slug = r.algorithm.slug();
        artifacts.push(Artifact::new(
            report_file(r.algorithm),
            render_report(&r.report, &h, &hyper, DecimalStyle::Point),
        ));
        artifacts.push(Artifact::new(
            format!("report_{slug}.csv"),
            render_report_csv(&r.report),
        ));
        if config.comma_decimal {
            artifacts.push(Artifact::new(
                format!("report_{slug}_comma.txt"),
                render_report(&r.report, &h, &hyper, DecimalStyle::Comma),
            ));
        }
    }
    let entries: Vec<(Algorithm, ConfusionMatrix)> =
        results.iter().map(|r| (r.algorithm, r.matrix)).collect();
    let ranked = rank_by_accuracy(&entries);
    artifacts.push(Artifact::new(
        SUMMARY_FILE,
        render_summary(&ranked, &header),
    ));
    (artifacts, ranked)
}

fn train_all(config: &PipelineConfig, prepared: &Prepared) -> Result<Vec<TrainedModel>> {
    config
        .hyperparams
        .iter()
        .map(|h| {
            log::info!("fitting {}", h.algorithm.tag());
            fit_algorithm(prepared, h, config.forest_parallel).map_err(|e| e.in_stage("train"))
        })
        .collect()
}

fn training_artifacts(
    config: &PipelineConfig,
    prepared: &Prepared,
    models: &[TrainedModel],
) -> Result<Vec<Artifact>> {
    let mut artifacts = Vec::new();
    if prepared.generated {
        artifacts.extend(dataset_artifacts(&prepared.dataset, "dataset.csv"));
    }
    for m in models {
        artifacts.push(Artifact::new(model_file(m.algorithm()), model_to_text(m)));
    }
    artifacts.push(Artifact::new(
        STANDARDIZER_FILE,
        prepared.standardizer.to_text(),
    ));
    artifacts.push(Artifact::new(MANIFEST_FILE, manifest(config, prepared)));
    Ok(artifacts)
}

/// `gen`: writes the synthetic dataset and its grid sidecar.
pub fn run_generate(config: &PipelineConfig) -> Result<PathBuf> {
    let Some((gen, seed)) = &config.generate else {
        return Err(Error::invalid(
            "config",
            "`gen` needs `generate = true` in [data]",
        ));
    };
    let dataset = generate_dataset(gen, *seed).map_err(|e| e.in_stage("generate"))?;
    let artifacts = dataset_artifacts(&dataset, "dataset.csv");
    write_artifacts(&config.out_dir, &artifacts).map_err(|e| e.in_stage("write"))?;
    Ok(config.out_dir.join("dataset.csv"))
}

/// `train`: fits every enabled algorithm and writes models, the standardizer
/// and the manifest.
pub fn run_train(config: &PipelineConfig) -> Result<RunOutcome> {
    let prepared = prepare(config)?;
    let models = train_all(config, &prepared)?;
    let artifacts = training_artifacts(config, &prepared, &models)?;
    let written = write_artifacts(&config.out_dir, &artifacts).map_err(|e| e.in_stage("write"))?;
    Ok(RunOutcome {
        results: Vec::new(),
        ranked: Vec::new(),
        written,
    })
}

/// `eval`: reloads the standardizer and models written by `train` and
/// evaluates them on the test side of the same split.
pub fn run_eval(config: &PipelineConfig) -> Result<RunOutcome> {
    let read = |name: &str| -> Result<String> {
        let p = config.out_dir.join(name);
        fs::read_to_string(&p).map_err(|e| Error::io(p, e))
    };
    let standardizer =
        Standardizer::from_text(&read(STANDARDIZER_FILE).map_err(|e| e.in_stage("load"))?)
            .map_err(|e| e.in_stage("load"))?;
    let models = config
        .algorithms()
        .into_iter()
        .map(|a| {
            let m = model_from_text(&read(&model_file(a))?)?;
            if m.algorithm() != a {
                return Err(Error::ModelFormat(format!(
                    "{} holds a {} model",
                    model_file(a),
                    m.algorithm().tag()
                )));
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("load"))?;
    let prepared = prepare_with(config, false, Some(standardizer))?;
    let results = models
        .iter()
        .map(|m| evaluate_model(m, &prepared.x_test, &prepared.y_test))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("evaluate"))?;
    let (artifacts, ranked) = report_artifacts(config, &prepared, &results);
    let written = write_artifacts(&config.out_dir, &artifacts).map_err(|e| e.in_stage("write"))?;
    Ok(RunOutcome {
        results,
        ranked,
        written,
    })
}

/// Builds every artifact of a full run in memory without touching the disk.
pub fn pipeline_artifacts(
    config: &PipelineConfig,
) -> Result<(Vec<Artifact>, Vec<AlgorithmResult>, Vec<RankedEntry>)> {
    let prepared = prepare(config)?;
    let models = train_all(config, &prepared)?;
    let results = models
        .iter()
        .map(|m| evaluate_model(m, &prepared.x_test, &prepared.y_test))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("evaluate"))?;
    let mut artifacts = training_artifacts(config, &prepared, &models)?;
    let (reports, ranked) = report_artifacts(config, &prepared, &results);
    artifacts.extend(reports);
    Ok((artifacts, results, ranked))
}

/// `pipeline`: the full run, written only once every stage succeeded.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunOutcome> {
    let (artifacts, results, ranked) = pipeline_artifacts(config)?;
    let written = write_artifacts(&config.out_dir, &artifacts).map_err(|e| e.in_stage("write"))?;
    Ok(RunOutcome {
        results,
        ranked,
        written,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn artifacts_land_atomically() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let arts = vec![Artifact::new("a.txt", "1"), Artifact::new("b.txt", "2")];
        let written = write_artifacts(&out, &arts).unwrap();
        assert_eq!(written.len(), 2);
        assert_eq!(fs::read_to_string(out.join("b.txt")).unwrap(), "2");
        let leftovers: Vec<_> = fs::read_dir(&out)
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().ends_with(".partial"))
            .collect();
        assert!(leftovers.is_empty());
    }

    #[test]
    fn failed_write_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        // The second artifact names a missing subdirectory, so its write fails.
        let arts = vec![
            Artifact::new("a.txt", "1"),
            Artifact::new("missing/b.txt", "2"),
        ];
        assert!(write_artifacts(&out, &arts).is_err());
        assert_eq!(fs::read_dir(&out).unwrap().count(), 0);
    }
}
