//! Raster cleanup, grid value extraction and feature standardization.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::synthgen::{db_for_intensity, raster_layout, Raster};
use crate::vfdata::{Eye, GridSpec};

/// Lower bound applied to every fitted standard deviation.
pub const SD_FLOOR: f64 = 1e-6;

/// Summary mode counts points more than this far below the clean hill of vision.
pub const SUMMARY_DEFECT_DB: f64 = 5.0;

/// Min–max contrast stretch to [0, 1]. Constant rasters map to 0.5.
pub fn normalize_raster(raster: &Raster) -> Result<Raster> {
    let px = raster.pixels();
    if px.is_empty() {
        return Err(Error::invalid("raster", "empty raster"));
    }
    let lo = px.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = px.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let out = if hi > lo {
        let span = hi - lo;
        px.iter()
            .map(|p| ((p - lo) / span).clamp(0.0, 1.0))
            .collect()
    } else {
        vec![0.5; px.len()]
    };
    Raster::new(raster.width(), raster.height(), out)
}

/// 3x3 median with edge replication.
pub fn median_filter(raster: &Raster) -> Result<Raster> {
    let (w, h) = (raster.width(), raster.height());
    if w < 3 || h < 3 {
        return Err(Error::invalid(
            "raster",
            format!("{w}x{h} is smaller than the 3x3 median window"),
        ));
    }
    let mut out = Vec::with_capacity(w * h);
    let mut window = [0.0f64; 9];
    for y in 0..h {
        let rows = [y.saturating_sub(1), y, (y + 1).min(h - 1)];
        for x in 0..w {
            let cols = [x.saturating_sub(1), x, (x + 1).min(w - 1)];
            let mut k = 0;
            for &yy in &rows {
                for &xx in &cols {
                    window[k] = raster.get(xx, yy);
                    k += 1;
                }
            }
            let (_, median, _) = window.select_nth_unstable_by(4, f64::total_cmp);
            out.push(*median);
        }
    }
    Raster::new(w, h, out)
}

/// Samples each grid point's disk-center pixel and inverts the render map.
///
/// `eye` selects the mirrored layout used for left eyes.
pub fn extract_grid(raster: &Raster, grid: &GridSpec, eye: Eye) -> Result<Vec<f64>> {
    let layout = raster_layout(grid, eye, raster.width(), raster.height())?;
    (0..grid.point_count())
        .map(|p| {
            let (x, y) = layout.center_pixel(p);
            if x < 0 || y < 0 || x as usize >= raster.width() || y as usize >= raster.height() {
                return Err(Error::invalid(
                    "raster",
                    format!("grid point {p} maps outside the raster at ({x}, {y})"),
                ));
            }
            Ok(db_for_intensity(raster.get(x as usize, y as usize)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "feature vector",
                format!("value {j} is not finite"),
            ));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureMode {
    /// The grid vector itself, one feature per test point.
    Raw,
    /// Mean, sd, minimum and fraction of points > 5 dB below the hill of vision.
    Summary,
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureMode::Raw => "raw",
            FeatureMode::Summary => "summary",
        })
    }
}

impl FromStr for FeatureMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "raw" => Ok(FeatureMode::Raw),
            "summary" => Ok(FeatureMode::Summary),
            other => Err(format!(
                "feature mode must be raw or summary, got {other:?}"
            )),
        }
    }
}

/// Turns one eye's sensitivities into features. `base_db` gives the clean hill of
/// vision at an eccentricity and is only used in summary mode.
pub fn featurize(
    sensitivities: &[f64],
    grid: &GridSpec,
    mode: FeatureMode,
    base_db: impl Fn(f64) -> f64,
) -> Result<FeatureVector> {
    match mode {
        FeatureMode::Raw => FeatureVector::new(sensitivities.to_vec()),
        FeatureMode::Summary => {
            let n = sensitivities.len() as f64;
            let mean = sensitivities.iter().sum::<f64>() / n;
            let var = sensitivities
                .iter()
                .map(|s| (s - mean).powi(2))
                .sum::<f64>()
                / n;
            let min = sensitivities.iter().copied().fold(f64::INFINITY, f64::min);
            let defects = sensitivities
                .iter()
                .enumerate()
                .filter(|(p, s)| base_db(grid.point(*p).0) - **s > SUMMARY_DEFECT_DB)
                .count();
            FeatureVector::new(vec![mean, var.sqrt(), min, defects as f64 / n])
        }
    }
}

/// Per-dimension mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    means: Vec<f64>,
    sds: Vec<f64>,
}

impl Standardizer {
    pub fn from_parts(means: Vec<f64>, sds: Vec<f64>) -> Result<Self> {
        if means.len() != sds.len() {
            return Err(Error::Dimension {
                expected: means.len(),
                got: sds.len(),
            });
        }
        if means.iter().any(|m| !m.is_finite())
            || sds.iter().any(|s| !(s.is_finite() && *s >= SD_FLOOR))
        {
            return Err(Error::invalid(
                "standardizer",
                "means must be finite and sds >= the floor",
            ));
        }
        Ok(Self { means, sds })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn sds(&self) -> &[f64] {
        &self.sds
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    /// Recovers the raw vector from a standardized one.
    pub fn invert(&self, z: &FeatureVector) -> Result<FeatureVector> {
        self.check_dim(z)?;
        FeatureVector::new(
            z.values()
                .iter()
                .zip(self.means.iter().zip(&self.sds))
                .map(|(v, (m, s))| v * s + m)
                .collect(),
        )
    }

    fn check_dim(&self, f: &FeatureVector) -> Result<()> {
        if f.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: f.dim(),
            });
        }
        Ok(())
    }

    /// Line-oriented text form: a version line, then `means` and `sds` lines.
    pub fn to_text(&self) -> String {
        let join = |xs: &[f64]| {
            xs.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        format!(
            "vfclassify-standardizer v1\nmeans {}\nsds {}\n",
            join(&self.means),
            join(&self.sds)
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::invalid("standardizer file", msg.to_string());
        let mut lines = text.lines();
        if lines.next() != Some("vfclassify-standardizer v1") {
            return Err(bad("missing or unsupported version line"));
        }
        let mut field = |name: &str| -> Result<Vec<f64>> {
            let line = lines.next().ok_or_else(|| bad("truncated"))?;
            let mut toks = line.split(' ');
            if toks.next() != Some(name) {
                return Err(bad(&format!("expected `{name}` line")));
            }
            toks.map(|t| {
                t.parse::<f64>()
                    .map_err(|_| bad(&format!("bad number {t:?}")))
            })
            .collect()
        };
        let means = field("means")?;
        let sds = field("sds")?;
        Self::from_parts(means, sds)
    }
}

pub fn fit_standardizer(features: &[FeatureVector]) -> Result<Standardizer> {
    if features.len() < 2 {
        return Err(Error::invalid(
            "standardizer",
            format!("needs at least 2 vectors, got {}", features.len()),
        ));
    }
    let d = features[0].dim();
    if let Some(f) = features.iter().find(|f| f.dim() != d) {
        return Err(Error::Dimension {
            expected: d,
            got: f.dim(),
        });
    }
    let n = features.len() as f64;
    let mut means = vec![0.0; d];
    for f in features {
        for (m, v) in means.iter_mut().zip(f.values()) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut vars = vec![0.0; d];
    for f in features {
        for ((acc, v), m) in vars.iter_mut().zip(f.values()).zip(&means) {
            *acc += (v - m) * (v - m);
        }
    }
    let sds = vars
        .into_iter()
        .map(|v| (v / n).sqrt().max(SD_FLOOR))
        .collect();
    Ok(Standardizer { means, sds })
}

pub fn apply_standardizer(std: &Standardizer, f: &FeatureVector) -> Result<FeatureVector> {
    std.check_dim(f)?;
    FeatureVector::new(
        f.values()
            .iter()
            .zip(std.means.iter().zip(&std.sds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect(),
    )
}
