//! Flat `key = value` config with `[section]` headers.
//!
//! ```text
//! # comments start with '#'
//! [data]
//! generate = true
//!
//! [gen]
//! seed = 42
//!
//! [split]
//! test_fraction = 0.2
//! seed = 42
//! ```
//!
//! Every seed that a run consumes must be written out; nothing is seeded from
//! entropy. Unknown sections and keys are rejected.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::classifiers::{Algorithm, Hyperparams};
use crate::error::{Error, Result};
use crate::preprocess::FeatureMode;
use crate::synthgen::{CaptureConfig, GenConfig};
use crate::vfdata::GridSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    pub raster_size: usize,
    pub capture: CaptureConfig,
    /// Seeds the simulated capture noise; record `i` uses `seed ^ i`.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Dataset to load when `generate` is `None`.
    pub dataset_path: Option<PathBuf>,
    /// Generator settings and seed; the generated dataset is written to the output directory.
    pub generate: Option<(GenConfig, u64)>,
    pub test_fraction: f64,
    pub split_seed: u64,
    /// `None` feeds the dataset sensitivities straight to featurization.
    pub preprocess: Option<PreprocessConfig>,
    pub feature_mode: FeatureMode,
    /// Hill-of-vision parameters used by the summary feature mode.
    pub base_peak_db: f64,
    pub base_slope_db_per_deg: f64,
    pub hyperparams: Vec<Hyperparams>,
    pub forest_parallel: bool,
    pub out_dir: PathBuf,
    pub comma_decimal: bool,
}

impl PipelineConfig {
    pub fn algorithms(&self) -> Vec<Algorithm> {
        self.hyperparams.iter().map(|h| h.algorithm).collect()
    }

    pub fn hyperparams_for(&self, algorithm: Algorithm) -> Option<&Hyperparams> {
        self.hyperparams.iter().find(|h| h.algorithm == algorithm)
    }

    /// Path of the dataset the run reads: the configured one, or the
    /// generated copy inside the output directory.
    pub fn effective_dataset_path(&self) -> PathBuf {
        match (&self.generate, &self.dataset_path) {
            (None, Some(p)) => p.clone(),
            _ => self.out_dir.join("dataset.csv"),
        }
    }

    /// Replaces every seed with `seed`.
    pub fn override_seed(&mut self, seed: u64) {
        if let Some((_, s)) = &mut self.generate {
            *s = seed;
        }
        self.split_seed = seed;
        if let Some(p) = &mut self.preprocess {
            p.seed = seed;
        }
        for h in &mut self.hyperparams {
            h.rng_seed = seed;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hyperparams.is_empty() {
            return Err(Error::invalid("config", "no algorithms enabled"));
        }
        for h in &self.hyperparams {
            h.validate()?;
        }
        if let Some((g, _)) = &self.generate {
            g.validate()?;
        } else if self.dataset_path.is_none() {
            return Err(Error::invalid(
                "config",
                "[data] needs `dataset` unless `generate = true`",
            ));
        }
        if let Some(p) = &self.preprocess {
            p.capture.validate()?;
            if p.raster_size < 64 {
                return Err(Error::invalid("config", "raster_size must be >= 64"));
            }
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::invalid("config", "test_fraction must be in (0, 1)"));
        }
        if let (Some(d), None) = (&self.dataset_path, &self.generate) {
            if d.parent().is_some_and(|p| p == self.out_dir)
                && d.file_name().is_some_and(|n| {
                    n.to_str()
                        .is_some_and(|n| n.starts_with("model_") || n.starts_with("report_"))
                })
            {
                return Err(Error::invalid(
                    "config",
                    "dataset path collides with an output file",
                ));
            }
            if *d == self.out_dir {
                return Err(Error::invalid(
                    "config",
                    "dataset path equals the output directory",
                ));
            }
        }
        Ok(())
    }
}

type Section = BTreeMap<String, (usize, String)>;

struct RawConfig {
    path: PathBuf,
    sections: BTreeMap<String, Section>,
}

const KNOWN: &[(&str, &[&str])] = &[
    ("data", &["dataset", "generate"]),
    (
        "gen",
        &[
            "seed",
            "n_glaucoma",
            "n_other",
            "noise_sd_db",
            "depth_min_db",
            "depth_max_db",
            "weight_diffuse",
            "weight_central",
            "weight_hemifield",
            "base_peak_db",
            "base_slope_db_per_deg",
            "eccentricities",
            "meridians",
        ],
    ),
    ("split", &["test_fraction", "seed"]),
    (
        "preprocess",
        &[
            "enabled",
            "raster_size",
            "feature_mode",
            "seed",
            "contrast",
            "offset",
            "salt_fraction",
            "fiducial_px",
        ],
    ),
    ("models", &["algorithms"]),
    (
        "logreg",
        &["learning_rate", "l2_lambda", "max_epochs", "tol"],
    ),
    ("naive_bayes", &["var_smoothing"]),
    (
        "random_forest",
        &[
            "n_trees",
            "max_depth",
            "min_samples_split",
            "seed",
            "parallel",
        ],
    ),
    ("sgd_svm", &["l2_lambda", "max_epochs", "seed"]),
    ("output", &["dir", "comma_decimal"]),
];

impl RawConfig {
    fn parse(path: &Path, text: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut sections: BTreeMap<String, Section> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !KNOWN.iter().any(|(s, _)| *s == name) {
                    return Err(err(line_no, format!("unknown section [{name}]")));
                }
                sections.entry(name.to_string()).or_default();
                current = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(
                    line_no,
                    format!("expected `key = value`, got {line:?}"),
                ));
            };
            let Some(section) = &current else {
                return Err(err(line_no, "key outside of any [section]".into()));
            };
            let key = key.trim();
            let allowed = KNOWN
                .iter()
                .find(|(s, _)| s == section)
                .map(|(_, keys)| *keys)
                .unwrap_or(&[]);
            if !allowed.contains(&key) {
                return Err(err(line_no, format!("unknown key `{key}` in [{section}]")));
            }
            let entries = sections.get_mut(section).expect("section exists");
            if entries
                .insert(key.to_string(), (line_no, value.trim().to_string()))
                .is_some()
            {
                return Err(err(
                    line_no,
                    format!("duplicate key `{key}` in [{section}]"),
                ));
            }
        }
        Ok(Self {
            path: path.to_path_buf(),
            sections,
        })
    }

    fn raw(&self, section: &str, key: &str) -> Option<&(usize, String)> {
        self.sections.get(section).and_then(|s| s.get(key))
    }

    fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| Error::Parse {
                path: self.path.clone(),
                line: *line,
                msg: format!("[{section}] {key}: cannot parse {v:?}"),
            }),
        }
    }

    fn get_or<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T> {
        Ok(self.get(section, key)?.unwrap_or(default))
    }

    fn require<T: FromStr>(&self, section: &str, key: &str) -> Result<T> {
        self.get(section, key)?
            .ok_or_else(|| Error::invalid("config", format!("[{section}] `{key}` is required")))
    }

    fn list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        let Some((line, v)) = self.raw(section, key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|t| {
                t.trim().parse::<f64>().map_err(|_| Error::Parse {
                    path: self.path.clone(),
                    line: *line,
                    msg: format!("[{section}] {key}: bad number {t:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn bool_or(&self, section: &str, key: &str, default: bool) -> Result<bool> {
        match self.raw(section, key) {
            None => Ok(default),
            Some((_, v)) if v == "true" || v == "on" => Ok(true),
            Some((_, v)) if v == "false" || v == "off" => Ok(false),
            Some((line, v)) => Err(Error::Parse {
                path: self.path.clone(),
                line: *line,
                msg: format!("[{section}] {key}: expected true/false, got {v:?}"),
            }),
        }
    }

    /// Resolves a relative path against the config file's directory.
    fn path(&self, section: &str, key: &str) -> Option<PathBuf> {
        self.raw(section, key).map(|(_, v)| {
            let p = PathBuf::from(v);
            if p.is_relative() {
                self.path.parent().unwrap_or(Path::new(".")).join(p)
            } else {
                p
            }
        })
    }
}

pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(path, &text)
}

/// Parses config text; `path` is used for error messages and to resolve
/// relative paths.
pub fn parse_config(path: &Path, text: &str) -> Result<PipelineConfig> {
    let raw = RawConfig::parse(path, text)?;

    let generate_flag = raw.bool_or("data", "generate", false)?;
    let base = GenConfig::default();
    let base_peak_db = raw.get_or("gen", "base_peak_db", base.base_peak_db)?;
    let base_slope_db_per_deg =
        raw.get_or("gen", "base_slope_db_per_deg", base.base_slope_db_per_deg)?;
    let generate = if generate_flag {
        let grid = match (
            raw.list("gen", "eccentricities")?,
            raw.list("gen", "meridians")?,
        ) {
            (None, None) => GridSpec::standard(),
            (e, m) => GridSpec::new(
                e.unwrap_or_else(|| GridSpec::standard().eccentricities().to_vec()),
                m.unwrap_or_else(|| GridSpec::standard().meridians().to_vec()),
            )?,
        };
        let cfg = GenConfig {
            n_glaucoma: raw.get_or("gen", "n_glaucoma", base.n_glaucoma)?,
            n_other: raw.get_or("gen", "n_other", base.n_other)?,
            grid,
            noise_sd_db: raw.get_or("gen", "noise_sd_db", base.noise_sd_db)?,
            glaucoma_depth_range_db: (
                raw.get_or("gen", "depth_min_db", base.glaucoma_depth_range_db.0)?,
                raw.get_or("gen", "depth_max_db", base.glaucoma_depth_range_db.1)?,
            ),
            other_pattern_weights: [
                raw.get_or("gen", "weight_diffuse", base.other_pattern_weights[0])?,
                raw.get_or("gen", "weight_central", base.other_pattern_weights[1])?,
                raw.get_or("gen", "weight_hemifield", base.other_pattern_weights[2])?,
            ],
            base_peak_db,
            base_slope_db_per_deg,
        };
        Some((cfg, raw.require("gen", "seed")?))
    } else {
        None
    };

    let preprocess_on = raw.bool_or("preprocess", "enabled", true)?;
    let preprocess = if preprocess_on {
        let d = CaptureConfig::default();
        Some(PreprocessConfig {
            raster_size: raw.get_or("preprocess", "raster_size", 256)?,
            capture: CaptureConfig {
                contrast: raw.get_or("preprocess", "contrast", d.contrast)?,
                offset: raw.get_or("preprocess", "offset", d.offset)?,
                salt_fraction: raw.get_or("preprocess", "salt_fraction", d.salt_fraction)?,
                fiducial_px: raw.get_or("preprocess", "fiducial_px", d.fiducial_px)?,
            },
            seed: raw.require("preprocess", "seed")?,
        })
    } else {
        None
    };
    let feature_mode = match raw.raw("preprocess", "feature_mode") {
        None => FeatureMode::Raw,
        Some((line, v)) => v.parse().map_err(|msg| Error::Parse {
            path: path.to_path_buf(),
            line: *line,
            msg,
        })?,
    };

    let split_seed: u64 = raw.require("split", "seed")?;
    let algorithms: Vec<Algorithm> = match raw.raw("models", "algorithms") {
        None => Algorithm::ALL.to_vec(),
        Some((_, v)) => {
            let mut algs = v
                .split(',')
                .map(|s| s.trim().parse())
                .collect::<Result<Vec<Algorithm>>>()?;
            algs.sort();
            algs.dedup();
            algs
        }
    };
    let mut hyperparams = Vec::new();
    for &a in &algorithms {
        let section = a.slug();
        // Only the forest and the SVM consume randomness.
        let seed = match a {
            Algorithm::RandomForest | Algorithm::SgdSvm => raw.require(section, "seed")?,
            _ => split_seed,
        };
        let mut h = Hyperparams::defaults(a, seed);
        match a {
            Algorithm::LogReg => {
                h.learning_rate = raw.get_or(section, "learning_rate", h.learning_rate)?;
                h.l2_lambda = raw.get_or(section, "l2_lambda", h.l2_lambda)?;
                h.max_epochs = raw.get_or(section, "max_epochs", h.max_epochs)?;
                h.tol = raw.get_or(section, "tol", h.tol)?;
            }
            Algorithm::NaiveBayes => {
                h.var_smoothing = raw.get_or(section, "var_smoothing", h.var_smoothing)?;
            }
            Algorithm::RandomForest => {
                h.n_trees = raw.get_or(section, "n_trees", h.n_trees)?;
                h.max_depth = match raw.raw(section, "max_depth") {
                    None => None,
                    Some((_, v)) if v == "unlimited" => None,
                    Some(_) => Some(raw.require(section, "max_depth")?),
                };
                h.min_samples_split =
                    raw.get_or(section, "min_samples_split", h.min_samples_split)?;
            }
            Algorithm::SgdSvm => {
                h.l2_lambda = raw.get_or(section, "l2_lambda", h.l2_lambda)?;
                h.max_epochs = raw.get_or(section, "max_epochs", h.max_epochs)?;
            }
        }
        hyperparams.push(h);
    }
    for a in Algorithm::ALL {
        if !algorithms.contains(&a) && raw.has_section(a.slug()) {
            log::warn!(
                "[{}] is configured but the algorithm is not enabled",
                a.slug()
            );
        }
    }

    let config = PipelineConfig {
        dataset_path: raw.path("data", "dataset"),
        generate,
        test_fraction: raw.require("split", "test_fraction")?,
        split_seed,
        preprocess,
        feature_mode,
        base_peak_db,
        base_slope_db_per_deg,
        hyperparams,
        forest_parallel: raw.bool_or("random_forest", "parallel", true)?,
        out_dir: raw
            .path("output", "dir")
            .unwrap_or_else(|| path.parent().unwrap_or(Path::new(".")).join("out")),
        comma_decimal: raw.bool_or("output", "comma_decimal", false)?,
    };
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = "\
# synthetic benchmark
[data]
generate = true

[gen]
seed = 42
n_glaucoma = 80
n_other = 65

[split]
test_fraction = 0.2
seed = 42

[preprocess]
enabled = true
seed = 7
raster_size = 256

[random_forest]
seed = 1
n_trees = 11
max_depth = unlimited

[sgd_svm]
seed = 2

[output]
dir = /tmp/vf-out
";

    #[test]
    fn parses_full_config() {
        let c = parse_config(Path::new("/etc/vf/run.conf"), FULL).unwrap();
        assert_eq!(c.generate.as_ref().unwrap().1, 42);
        assert_eq!(c.algorithms(), Algorithm::ALL.to_vec());
        assert_eq!(
            c.hyperparams_for(Algorithm::RandomForest).unwrap().n_trees,
            11
        );
        assert_eq!(
            c.hyperparams_for(Algorithm::RandomForest).unwrap().rng_seed,
            1
        );
        assert_eq!(
            c.hyperparams_for(Algorithm::SgdSvm).unwrap().l2_lambda,
            0.01
        );
        assert_eq!(c.preprocess.as_ref().unwrap().seed, 7);
        assert_eq!(c.out_dir, PathBuf::from("/tmp/vf-out"));
        assert_eq!(
            c.effective_dataset_path(),
            PathBuf::from("/tmp/vf-out/dataset.csv")
        );
    }

    #[test]
    fn seeds_are_mandatory() {
        for key in [
            "[gen]\nseed = 42",
            "[split]\ntest_fraction = 0.2\nseed = 42",
            "[sgd_svm]\nseed = 2",
        ] {
            let section_start = FULL.find(key).unwrap();
            let trimmed = FULL.replace(key, &key.replace("seed = ", "# seed = "));
            assert!(section_start > 0);
            let err = parse_config(Path::new("c.conf"), &trimmed).unwrap_err();
            assert!(err.to_string().contains("seed"), "{err}");
        }
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        let e = parse_config(
            Path::new("c"),
            &format!("{FULL}\n[logreg]\nlearning_rte = 0.1\n"),
        )
        .unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
        let e = parse_config(Path::new("c"), &format!("{FULL}\n[xgboost]\n")).unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
        let e = parse_config(Path::new("c"), "seed = 1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn preprocess_off_needs_no_seed() {
        let text = FULL.replace("enabled = true\nseed = 7\n", "enabled = false\n");
        let c = parse_config(Path::new("c"), &text).unwrap();
        assert!(c.preprocess.is_none());
    }

    #[test]
    fn algorithm_subset_and_override() {
        let text = format!("{FULL}\n[models]\nalgorithms = sgd_svm, logreg\n");
        let mut c = parse_config(Path::new("c"), &text).unwrap();
        assert_eq!(c.algorithms(), vec![Algorithm::LogReg, Algorithm::SgdSvm]);
        c.override_seed(9);
        assert!(c.hyperparams.iter().all(|h| h.rng_seed == 9));
        assert_eq!((c.split_seed, c.generate.unwrap().1), (9, 9));
    }

    #[test]
    fn loading_requires_dataset_path() {
        let text = FULL.replace("generate = true", "generate = false");
        assert!(parse_config(Path::new("c"), &text).is_err());
        let text = FULL.replace("generate = true", "generate = false\ndataset = data/d.csv");
        let c = parse_config(Path::new("/cfg/c.conf"), &text).unwrap();
        assert_eq!(c.effective_dataset_path(), PathBuf::from("/cfg/data/d.csv"));
    }
}
