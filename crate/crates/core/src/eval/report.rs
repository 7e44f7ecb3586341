use std::cmp::Ordering;
use std::fmt::Write as _;

use super::{classification_report, round_metric, ClassReport, ConfusionMatrix};
use crate::classifiers::Algorithm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecimalStyle {
    #[default]
    Point,
    /// Comma decimal separator, as in Russian-language tables.
    Comma,
}

fn fmt2(x: f64, style: DecimalStyle) -> String {
    let s = format!("{:.2}", round_metric(x, 2));
    match style {
        DecimalStyle::Point => s,
        DecimalStyle::Comma => s.replace('.', ","),
    }
}

/// Fixed-width text report: `header` lines, the per-class table, the accuracy
/// line, diagnostics, then the hyperparameter block.
pub fn render_report(
    report: &ClassReport,
    header: &[(String, String)],
    hyperparams: &[(String, String)],
    style: DecimalStyle,
) -> String {
    let mut out = String::new();
    for (k, v) in header {
        let _ = writeln!(out, "{k}={v}");
    }
    if !header.is_empty() {
        out.push('\n');
    }
    let _ = writeln!(
        out,
        "{:<8}{:>10}{:>10}{:>10}{:>10}",
        "class", "precision", "recall", "f1", "support"
    );
    for c in 0..2 {
        let _ = writeln!(
            out,
            "{:<8}{:>10}{:>10}{:>10}{:>10}",
            c,
            fmt2(report.precision[c], style),
            fmt2(report.recall[c], style),
            fmt2(report.f1[c], style),
            report.support[c]
        );
    }
    let _ = writeln!(
        out,
        "accuracy {} (n={})",
        fmt2(report.accuracy, style),
        report.n
    );
    for c in 0..2 {
        if report.undefined_precision[c] {
            let _ = writeln!(
                out,
                "note: class {c} was never predicted; its precision is reported as 0"
            );
        }
    }
    if !hyperparams.is_empty() {
        out.push_str("\n[hyperparameters]\n");
        for (k, v) in hyperparams {
            let _ = writeln!(out, "{k} = {v}");
        }
    }
    out
}

/// Machine-readable variant at full precision.
pub fn render_report_csv(report: &ClassReport) -> String {
    let mut out = String::from("class,precision,recall,f1,support\n");
    for c in 0..2 {
        let _ = writeln!(
            out,
            "{c},{},{},{},{}",
            report.precision[c], report.recall[c], report.f1[c], report.support[c]
        );
    }
    let _ = writeln!(out, "accuracy,{},,,{}", report.accuracy, report.n);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    pub algorithm: Algorithm,
    pub matrix: ConfusionMatrix,
    pub report: ClassReport,
}

/// Orders by exact accuracy (descending); equal accuracies keep the canonical
/// algorithm order.
pub fn rank_by_accuracy(entries: &[(Algorithm, ConfusionMatrix)]) -> Vec<RankedEntry> {
    let mut sorted = entries.to_vec();
    sorted.sort_by(|(a, ma), (b, mb)| {
        // Compare correct_a / n_a against correct_b / n_b without rounding.
        let lhs = ma.correct() as u128 * mb.n() as u128;
        let rhs = mb.correct() as u128 * ma.n() as u128;
        rhs.cmp(&lhs).then(a.cmp(b))
    });
    sorted
        .into_iter()
        .map(|(algorithm, matrix)| RankedEntry {
            algorithm,
            matrix,
            report: classification_report(&matrix),
        })
        .collect()
}

pub fn render_summary(ranked: &[RankedEntry], header: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in header {
        let _ = writeln!(out, "{k}={v}");
    }
    if !header.is_empty() {
        out.push('\n');
    }
    let _ = writeln!(
        out,
        "{:<6}{:<16}{:>10}{:>8}   confusion [[tn, fp], [fn, tp]]",
        "rank", "algorithm", "accuracy", "n"
    );
    let mut rank = 0;
    let mut prev: Option<&RankedEntry> = None;
    for (i, e) in ranked.iter().enumerate() {
        // Equal accuracies share a rank.
        let tied = prev.is_some_and(|p| {
            (p.matrix.correct() as u128 * e.matrix.n() as u128)
                .cmp(&(e.matrix.correct() as u128 * p.matrix.n() as u128))
                == Ordering::Equal
        });
        if !tied {
            rank = i + 1;
        }
        let m = e.matrix.counts();
        let _ = writeln!(
            out,
            "{:<6}{:<16}{:>10}{:>8}   [[{}, {}], [{}, {}]]",
            rank,
            e.algorithm.tag(),
            fmt2(e.report.accuracy, DecimalStyle::Point),
            e.report.n,
            m[0][0],
            m[0][1],
            m[1][0],
            m[1][1]
        );
        prev = Some(e);
    }
    out
}
