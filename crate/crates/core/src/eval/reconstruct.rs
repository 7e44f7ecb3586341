use super::{classification_report, round_units, ClassReport, ConfusionMatrix};

/// One printed row of a published metric table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaperRow {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// A published per-class metric table, values as printed (2 decimals).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaperTable {
    pub table_id: u8,
    pub algorithm: &'static str,
    pub rows: [PaperRow; 2],
    pub accuracy: f64,
    pub n: usize,
}

const fn row(precision: f64, recall: f64, f1: f64, support: usize) -> PaperRow {
    PaperRow {
        precision,
        recall,
        f1,
        support,
    }
}

/// The four test-set tables: logistic regression, naive Bayes, random forest
/// and SGD-trained linear SVM.
pub const PAPER_TABLES: [PaperTable; 4] = [
    PaperTable {
        table_id: 1,
        algorithm: "LOGREG",
        rows: [row(0.69, 0.69, 0.69, 13), row(0.75, 0.75, 0.75, 16)],
        accuracy: 0.72,
        n: 29,
    },
    PaperTable {
        table_id: 2,
        algorithm: "NAIVE_BAYES",
        rows: [row(0.20, 0.08, 0.11, 13), row(0.50, 0.75, 0.60, 16)],
        accuracy: 0.45,
        n: 29,
    },
    PaperTable {
        table_id: 3,
        algorithm: "RANDOM_FOREST",
        rows: [row(0.61, 0.85, 0.71, 13), row(0.82, 0.56, 0.67, 16)],
        accuracy: 0.69,
        n: 29,
    },
    PaperTable {
        table_id: 4,
        algorithm: "SGD_SVM",
        rows: [row(0.67, 0.62, 0.64, 13), row(0.71, 0.75, 0.73, 16)],
        accuracy: 0.69,
        n: 29,
    },
];

/// Every confusion matrix whose precision, recall and accuracy, rounded at
/// `decimals`, equal the given values. `rows[c]` is `(precision, recall, support)`
/// of class `c`. Results are ordered by `(tp0, tp1)`; an empty result means the
/// inputs cannot come from any matrix with these supports.
pub fn reconstruct_confusion(
    rows: [(f64, f64, usize); 2],
    accuracy: f64,
    decimals: u32,
) -> Vec<ConfusionMatrix> {
    let (s0, s1) = (rows[0].2, rows[1].2);
    let target = |x: f64| round_units(x, decimals);
    let want_p = [target(rows[0].0), target(rows[1].0)];
    let want_r = [target(rows[0].1), target(rows[1].1)];
    let want_acc = target(accuracy);
    let mut out = Vec::new();
    for tp0 in 0..=s0 {
        for tp1 in 0..=s1 {
            let Ok(cm) = ConfusionMatrix::new([[tp0, s0 - tp0], [s1 - tp1, tp1]]) else {
                continue;
            };
            let r = classification_report(&cm);
            let ok = (0..2)
                .all(|c| target(r.precision[c]) == want_p[c] && target(r.recall[c]) == want_r[c])
                && target(r.accuracy) == want_acc;
            if ok {
                out.push(cm);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableVerification {
    pub table: PaperTable,
    pub matrices: Vec<ConfusionMatrix>,
    /// Metrics of the matrix when reconstruction is unique.
    pub report: Option<ClassReport>,
    /// Number of printed cells compared against the unique matrix.
    pub cells_checked: usize,
    /// Human-readable description of every disagreement.
    pub mismatches: Vec<String>,
}

impl TableVerification {
    pub fn passed(&self) -> bool {
        self.matrices.len() == 1 && self.mismatches.is_empty()
    }
}

/// Reconstructs the table's matrix and checks every printed cell against it.
pub fn verify_table(table: &PaperTable) -> TableVerification {
    let rows = [
        (
            table.rows[0].precision,
            table.rows[0].recall,
            table.rows[0].support,
        ),
        (
            table.rows[1].precision,
            table.rows[1].recall,
            table.rows[1].support,
        ),
    ];
    let matrices = reconstruct_confusion(rows, table.accuracy, 2);
    let mut mismatches = Vec::new();
    let mut cells_checked = 0;
    let mut report = None;
    match matrices.len() {
        0 => mismatches.push("no confusion matrix reproduces the printed values".to_string()),
        1 => {
            let r = classification_report(&matrices[0]);
            let mut check = |name: String, got: f64, printed: f64| {
                cells_checked += 1;
                if round_units(got, 2) != round_units(printed, 2) {
                    mismatches.push(format!("{name}: recomputed {got:.4}, printed {printed:.2}"));
                }
            };
            for c in 0..2 {
                let printed = &table.rows[c];
                check(format!("precision[{c}]"), r.precision[c], printed.precision);
                check(format!("recall[{c}]"), r.recall[c], printed.recall);
                check(format!("f1[{c}]"), r.f1[c], printed.f1);
                check(
                    format!("support[{c}]"),
                    r.support[c] as f64,
                    printed.support as f64,
                );
            }
            check("accuracy".into(), r.accuracy, table.accuracy);
            check("n".into(), r.n as f64, table.n as f64);
            report = Some(r);
        }
        k => mismatches.push(format!(
            "{k} matrices reproduce the printed values; expected one"
        )),
    }
    TableVerification {
        table: *table,
        matrices,
        report,
        cells_checked,
        mismatches,
    }
}

pub fn verify_paper_tables() -> Vec<TableVerification> {
    PAPER_TABLES.iter().map(verify_table).collect()
}
