//! Confusion matrices, per-class metrics, rounding, and reconstruction of the
//! integer confusion matrix behind a published, rounded metric table.

mod reconstruct;
mod report;

pub use reconstruct::{
    reconstruct_confusion, verify_paper_tables, verify_table, PaperRow, PaperTable,
    TableVerification, PAPER_TABLES,
};
pub use report::{
    rank_by_accuracy, render_report, render_report_csv, render_summary, DecimalStyle, RankedEntry,
};

use crate::error::{Error, Result};
use crate::vfdata::Label;

/// Values this close to a half are treated as exact halves.
const HALF_SLACK: f64 = 1e-9;

/// Rounds half away from zero at `decimals` places.
///
/// Inputs such as 0.285 are not exactly representable and land a hair below
/// the half after scaling; they are still rounded as the decimal they denote.
pub fn round_metric(x: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    round_units(x, decimals) as f64 / scale
}

/// `x` rounded at `decimals` places, as an integer count of `10^-decimals` units.
pub(crate) fn round_units(x: f64, decimals: u32) -> i64 {
    let scaled = x * 10f64.powi(decimals as i32);
    let floor = scaled.floor();
    let frac = scaled - floor;
    let r = if (frac - 0.5).abs() < HALF_SLACK {
        if scaled >= 0.0 {
            floor + 1.0
        } else {
            floor
        }
    } else {
        scaled.round()
    };
    r as i64
}

/// 2x2 counts indexed `[actual][predicted]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConfusionMatrix {
    m: [[usize; 2]; 2],
}

impl ConfusionMatrix {
    pub fn new(m: [[usize; 2]; 2]) -> Result<Self> {
        if m.iter().flatten().sum::<usize>() == 0 {
            return Err(Error::invalid("confusion matrix", "no samples"));
        }
        Ok(Self { m })
    }

    pub fn counts(&self) -> [[usize; 2]; 2] {
        self.m
    }

    pub fn get(&self, actual: Label, predicted: Label) -> usize {
        self.m[actual.index()][predicted.index()]
    }

    pub fn support(&self, c: usize) -> usize {
        self.m[c][0] + self.m[c][1]
    }

    /// Number of samples predicted as class `c`.
    pub fn predicted(&self, c: usize) -> usize {
        self.m[0][c] + self.m[1][c]
    }

    pub fn correct(&self) -> usize {
        self.m[0][0] + self.m[1][1]
    }

    pub fn n(&self) -> usize {
        self.m.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.n() as f64
    }
}

pub fn confusion_matrix(y_true: &[Label], y_pred: &[Label]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::invalid(
            "confusion matrix",
            format!(
                "{} true labels vs {} predictions",
                y_true.len(),
                y_pred.len()
            ),
        ));
    }
    let mut m = [[0usize; 2]; 2];
    for (a, p) in y_true.iter().zip(y_pred) {
        m[a.index()][p.index()] += 1;
    }
    ConfusionMatrix::new(m)
}

/// Like [`confusion_matrix`] but for raw integer codes, rejecting anything but 0 and 1.
pub fn confusion_matrix_from_codes(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix> {
    let to_labels = |v: &[u8]| -> Result<Vec<Label>> {
        v.iter()
            .map(|&c| {
                Label::from_code(c)
                    .ok_or_else(|| Error::invalid("confusion matrix", format!("invalid label {c}")))
            })
            .collect()
    };
    confusion_matrix(&to_labels(y_true)?, &to_labels(y_pred)?)
}

/// Per-class precision, recall, F1 and support, plus overall accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassReport {
    pub precision: [f64; 2],
    pub recall: [f64; 2],
    pub f1: [f64; 2],
    pub support: [usize; 2],
    pub accuracy: f64,
    pub n: usize,
    /// Set for a class that was never predicted; its precision is reported as 0.
    pub undefined_precision: [bool; 2],
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean; 0 when both inputs are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn classification_report(cm: &ConfusionMatrix) -> ClassReport {
    let mut r = ClassReport {
        precision: [0.0; 2],
        recall: [0.0; 2],
        f1: [0.0; 2],
        support: [cm.support(0), cm.support(1)],
        accuracy: cm.accuracy(),
        n: cm.n(),
        undefined_precision: [false; 2],
    };
    let m = cm.counts();
    #[allow(clippy::needless_range_loop)]
    for c in 0..2 {
        r.undefined_precision[c] = cm.predicted(c) == 0;
        r.precision[c] = ratio(m[c][c], cm.predicted(c));
        r.recall[c] = ratio(m[c][c], cm.support(c));
        r.f1[c] = f1_score(r.precision[c], r.recall[c]);
    }
    r
}
