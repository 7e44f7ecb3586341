//! Labeled perimetry records, the dataset container and its CSV format, and
//! stratified train/test splitting.
//!
//! A dataset lives in two files: `<name>.csv` holding one row per eye and the
//! sidecar `<name>.grid` holding the test-point layout (eccentricities on the
//! first line, meridians on the second, both comma-separated degrees).

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::eval::round_metric;
use crate::rng::SplitMix64;

/// Lowest representable sensitivity in dB.
pub const MIN_DB: f64 = 0.0;
/// Highest representable sensitivity in dB.
pub const MAX_DB: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Other = 0,
    Glaucoma = 1,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Other, Label::Glaucoma];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Label::Other),
            1 => Some(Label::Glaucoma),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Eye {
    /// Right eye.
    OD,
    /// Left eye.
    OS,
}

impl fmt::Display for Eye {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Eye::OD => "OD",
            Eye::OS => "OS",
        })
    }
}

impl FromStr for Eye {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "OD" => Ok(Eye::OD),
            "OS" => Ok(Eye::OS),
            other => Err(format!("eye must be OD or OS, got {other:?}")),
        }
    }
}

/// Polar layout of the perimeter's test points.
///
/// Points are indexed ring-major: point `p` lies on ring `p / meridians.len()`
/// and meridian `p % meridians.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    eccentricities_deg: Vec<f64>,
    meridians_deg: Vec<f64>,
}

impl GridSpec {
    pub fn new(eccentricities_deg: Vec<f64>, meridians_deg: Vec<f64>) -> Result<Self> {
        let bad = |msg: String| Err(Error::invalid("grid", msg));
        if eccentricities_deg.is_empty() || meridians_deg.is_empty() {
            return bad("needs at least one eccentricity and one meridian".into());
        }
        if eccentricities_deg
            .iter()
            .any(|r| !r.is_finite() || *r <= 0.0)
        {
            return bad("eccentricities must be finite and > 0".into());
        }
        if eccentricities_deg.windows(2).any(|w| w[0] >= w[1]) {
            return bad("eccentricities must be strictly ascending".into());
        }
        if meridians_deg
            .iter()
            .any(|a| !a.is_finite() || *a < 0.0 || *a >= 360.0)
        {
            return bad("meridians must lie in [0, 360)".into());
        }
        if meridians_deg.windows(2).any(|w| w[0] >= w[1]) {
            return bad("meridians must be strictly ascending and distinct".into());
        }
        let grid = Self {
            eccentricities_deg,
            meridians_deg,
        };
        if grid.point_count() < 4 {
            return bad(format!("point count {} < 4", grid.point_count()));
        }
        Ok(grid)
    }

    /// 6 rings {3, 9, 15, 21, 27, 30} x 12 meridians every 30 degrees.
    pub fn standard() -> Self {
        Self::new(
            vec![3.0, 9.0, 15.0, 21.0, 27.0, 30.0],
            (0..12).map(|i| i as f64 * 30.0).collect(),
        )
        .expect("standard grid is valid")
    }

    pub fn eccentricities(&self) -> &[f64] {
        &self.eccentricities_deg
    }

    pub fn meridians(&self) -> &[f64] {
        &self.meridians_deg
    }

    pub fn point_count(&self) -> usize {
        self.eccentricities_deg.len() * self.meridians_deg.len()
    }

    /// `(eccentricity, meridian)` of point `p`, both in degrees.
    pub fn point(&self, p: usize) -> (f64, f64) {
        let m = self.meridians_deg.len();
        (self.eccentricities_deg[p / m], self.meridians_deg[p % m])
    }

    pub fn max_eccentricity(&self) -> f64 {
        *self.eccentricities_deg.last().expect("nonempty")
    }

    /// Contents of the `.grid` sidecar file.
    pub fn to_sidecar(&self) -> String {
        format!(
            "{}\n{}\n",
            join_floats(&self.eccentricities_deg),
            join_floats(&self.meridians_deg)
        )
    }

    fn from_sidecar(path: &Path, text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mut parse_line = |line_no: usize| -> Result<Vec<f64>> {
            let line = lines.next().ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                msg: "missing line".into(),
            })?;
            line.split(',')
                .map(|tok| {
                    tok.trim().parse::<f64>().map_err(|_| Error::Parse {
                        path: path.to_path_buf(),
                        line: line_no,
                        msg: format!("not a number: {tok:?}"),
                    })
                })
                .collect()
        };
        let ecc = parse_line(1)?;
        let mer = parse_line(2)?;
        GridSpec::new(ecc, mer)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::standard()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisualFieldRecord {
    pub record_id: String,
    pub eye: Eye,
    pub label: Label,
    /// dB per grid point, ring-major.
    pub sensitivities: Vec<f64>,
}

/// Records sharing one grid. Construction enforces the sensitivity range,
/// the point count and unique record ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    grid: GridSpec,
    records: Vec<VisualFieldRecord>,
}

impl Dataset {
    pub fn new(grid: GridSpec, records: Vec<VisualFieldRecord>) -> Result<Self> {
        let p = grid.point_count();
        let mut seen = HashSet::with_capacity(records.len());
        for (i, rec) in records.iter().enumerate() {
            if rec.sensitivities.len() != p {
                return Err(Error::invalid(
                    "dataset",
                    format!(
                        "record {i} ({}) has {} sensitivities, grid has {p} points",
                        rec.record_id,
                        rec.sensitivities.len()
                    ),
                ));
            }
            if let Some(j) = rec
                .sensitivities
                .iter()
                .position(|s| !s.is_finite() || *s < MIN_DB || *s > MAX_DB)
            {
                return Err(Error::invalid(
                    "dataset",
                    format!(
                        "record {} point {j}: sensitivity {} outside [0, 40] dB",
                        rec.record_id, rec.sensitivities[j]
                    ),
                ));
            }
            if rec.record_id.is_empty() || rec.record_id.contains([',', '\n', '\r']) {
                return Err(Error::invalid(
                    "dataset",
                    format!(
                        "record {i}: id {:?} is empty or contains a separator",
                        rec.record_id
                    ),
                ));
            }
            if !seen.insert(rec.record_id.as_str()) {
                return Err(Error::invalid(
                    "dataset",
                    format!("duplicate record_id {:?}", rec.record_id),
                ));
            }
        }
        Ok(Self { grid, records })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn records(&self) -> &[VisualFieldRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Number of records per label, indexed by label code.
    pub fn label_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for r in &self.records {
            counts[r.label.index()] += 1;
        }
        counts
    }

    pub fn labels(&self) -> Vec<Label> {
        self.records.iter().map(|r| r.label).collect()
    }

    /// Renders the CSV body (header plus one row per record).
    pub fn to_csv(&self) -> String {
        let p = self.grid.point_count();
        let mut out = String::from("record_id,eye,label");
        for j in 0..p {
            out.push_str(&format!(",s{j}"));
        }
        out.push('\n');
        for rec in &self.records {
            out.push_str(&format!("{},{},{}", rec.record_id, rec.eye, rec.label));
            for s in &rec.sensitivities {
                out.push(',');
                out.push_str(&s.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Path of the grid sidecar belonging to a dataset CSV.
pub fn grid_sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("grid")
}

/// Writes `<path>` and its `.grid` sidecar.
pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    fs::write(path, dataset.to_csv()).map_err(|e| Error::io(path, e))?;
    let grid_path = grid_sidecar_path(path);
    fs::write(&grid_path, dataset.grid.to_sidecar()).map_err(|e| Error::io(grid_path, e))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let grid_path = grid_sidecar_path(path);
    let grid_text = fs::read_to_string(&grid_path).map_err(|e| Error::io(&grid_path, e))?;
    let grid = GridSpec::from_sidecar(&grid_path, &grid_text)?;
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(path, &text, grid)
}

fn parse_csv(path: &Path, text: &str, grid: GridSpec) -> Result<Dataset> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let p = grid.point_count();
    let expected: Vec<String> = ["record_id", "eye", "label"]
        .iter()
        .map(|s| s.to_string())
        .chain((0..p).map(|j| format!("s{j}")))
        .collect();
    let got: Vec<&str> = header.split(',').collect();
    if got.len() != expected.len() || got.iter().zip(&expected).any(|(g, e)| g != e) {
        return Err(err(
            1,
            format!(
                "malformed header: expected record_id,eye,label,s0..s{} ({} columns), got {} columns",
                p - 1,
                expected.len(),
                got.len()
            ),
        ));
    }

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != expected.len() {
            return Err(err(
                line_no,
                format!("expected {} columns, got {}", expected.len(), cols.len()),
            ));
        }
        let eye: Eye = cols[1].parse().map_err(|m| err(line_no, m))?;
        let label = cols[2]
            .parse::<u8>()
            .ok()
            .and_then(Label::from_code)
            .ok_or_else(|| err(line_no, format!("label must be 0 or 1, got {:?}", cols[2])))?;
        let mut sensitivities = Vec::with_capacity(p);
        for (j, tok) in cols[3..].iter().enumerate() {
            let s: f64 = tok
                .parse()
                .map_err(|_| err(line_no, format!("s{j}: not a number: {tok:?}")))?;
            if !s.is_finite() || !(MIN_DB..=MAX_DB).contains(&s) {
                return Err(err(line_no, format!("s{j}: {s} outside [0, 40] dB")));
            }
            sensitivities.push(s);
        }
        let record_id = cols[0].to_string();
        if record_id.is_empty() {
            return Err(err(line_no, "empty record_id".into()));
        }
        if !seen.insert(record_id.clone()) {
            return Err(err(line_no, format!("duplicate record_id {record_id:?}")));
        }
        records.push(VisualFieldRecord {
            record_id,
            eye,
            label,
            sensitivities,
        });
    }
    Dataset::new(grid, records)
}

/// Splits per label: each label `c` sends `max(1, round(test_fraction * n_c))`
/// records to the test side, chosen by a seeded shuffle. Both halves keep the
/// original relative order.
pub fn stratified_split(
    dataset: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(
            "split",
            format!("test_fraction {test_fraction} not in (0, 1)"),
        ));
    }
    let mut rng = SplitMix64::new(seed);
    let mut in_test = vec![false; dataset.len()];
    for label in Label::ALL {
        let mut members: Vec<usize> = dataset
            .records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.label == label)
            .map(|(i, _)| i)
            .collect();
        let n = members.len();
        if n == 0 {
            return Err(Error::invalid(
                "split",
                format!("label {label} is absent from the dataset"),
            ));
        }
        let k = (round_metric(test_fraction * n as f64, 0) as usize).max(1);
        if k >= n {
            return Err(Error::invalid(
                "split",
                format!(
                    "label {label}: test would take {k} of {n} records, leaving none to train on"
                ),
            ));
        }
        rng.shuffle(&mut members);
        for &i in &members[..k] {
            in_test[i] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (rec, &t) in dataset.records.iter().zip(&in_test) {
        if t {
            test.push(rec.clone());
        } else {
            train.push(rec.clone());
        }
    }
    Ok((
        Dataset {
            grid: dataset.grid.clone(),
            records: train,
        },
        Dataset {
            grid: dataset.grid.clone(),
            records: test,
        },
    ))
}

fn join_floats(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}
