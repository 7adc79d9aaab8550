//! Metrics and reports: row-normalized confusion matrices, unweighted
//! accuracy, multi-run averaging, and the feature × pooling × split
//! results table.
//!
//! "Unweighted accuracy" is the mean of the per-class recalls (macro
//! recall), which is what a 25% random baseline over four imbalanced
//! classes corresponds to; plain overall accuracy is reported alongside it
//! for transparency. Classes absent from a test set are excluded from the
//! unweighted mean and flagged rather than counted as zero.

use serde::{Deserialize, Serialize};

use crate::corpus::Dialect;
use crate::dsp::FeatureKind;
use crate::error::{Error, Result};
use crate::pooling::PoolingMode;
use crate::splits::SplitMode;

/// Identifying metadata attached to a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub split_name: String,
    pub seed: u64,
    pub feature_kind: FeatureKind,
    /// Row label in results tables; defaults to the feature kind name but
    /// can distinguish e.g. different embedding models.
    pub feature_label: String,
    pub pooling: PoolingMode,
    pub mode: SplitMode,
}

impl ReportMeta {
    pub fn new(
        split_name: impl Into<String>,
        seed: u64,
        feature_kind: FeatureKind,
        pooling: PoolingMode,
        mode: SplitMode,
    ) -> Self {
        Self {
            split_name: split_name.into(),
            seed,
            feature_kind,
            feature_label: feature_kind.as_str().to_string(),
            pooling,
            mode,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.feature_label = label.into();
        self
    }
}

/// Evaluation result for one run (or an average of runs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_test: usize,
    /// Percent recall per dialect (WF, EF, SS, TS order); None when the
    /// class does not occur in the test set.
    pub per_class_recall: [Option<f64>; 4],
    /// Mean of the defined per-class recalls, percent.
    pub unweighted_accuracy: f64,
    /// Plain accuracy, percent.
    pub overall_accuracy: f64,
    /// Row-normalized percentages, rows = true class, columns = predicted.
    pub confusion: [[f64; 4]; 4],
    /// Classes with no test occurrences (warning flag).
    pub absent_classes: Vec<Dialect>,
    pub split_name: String,
    pub seeds: Vec<u64>,
    pub feature_kind: FeatureKind,
    pub feature_label: String,
    pub pooling: PoolingMode,
    pub mode: SplitMode,
}

/// Build a report from (true, predicted) dialect pairs.
pub fn evaluate(predictions: &[(Dialect, Dialect)], meta: ReportMeta) -> Result<EvalReport> {
    if predictions.is_empty() {
        return Err(Error::EmptyPredictions);
    }
    let mut counts = [[0u64; 4]; 4];
    for &(truth, predicted) in predictions {
        counts[truth.index()][predicted.index()] += 1;
    }
    let mut confusion = [[0.0; 4]; 4];
    let mut per_class_recall = [None; 4];
    let mut absent = Vec::new();
    for (i, row) in counts.iter().enumerate() {
        let row_sum: u64 = row.iter().sum();
        if row_sum == 0 {
            absent.push(Dialect::ALL[i]);
            continue;
        }
        for (j, &c) in row.iter().enumerate() {
            confusion[i][j] = 100.0 * c as f64 / row_sum as f64;
        }
        per_class_recall[i] = Some(confusion[i][i]);
    }
    let present: Vec<f64> = per_class_recall.iter().flatten().copied().collect();
    let unweighted_accuracy = present.iter().sum::<f64>() / present.len() as f64;
    let correct: u64 = (0..4).map(|i| counts[i][i]).sum();
    let overall_accuracy = 100.0 * correct as f64 / predictions.len() as f64;
    Ok(EvalReport {
        n_test: predictions.len(),
        per_class_recall,
        unweighted_accuracy,
        overall_accuracy,
        confusion,
        absent_classes: absent,
        split_name: meta.split_name,
        seeds: vec![meta.seed],
        feature_kind: meta.feature_kind,
        feature_label: meta.feature_label,
        pooling: meta.pooling,
        mode: meta.mode,
    })
}

/// Elementwise arithmetic mean of reports sharing a configuration.
/// Accuracies and confusion cells are averaged, test counts summed, seeds
/// concatenated. Per-class recalls average over the reports where the
/// class was present; classes absent everywhere stay flagged.
pub fn average_reports(reports: &[EvalReport]) -> Result<EvalReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::MixedReports("no reports to average".into()))?;
    for r in reports {
        if r.feature_kind != first.feature_kind
            || r.feature_label != first.feature_label
            || r.pooling != first.pooling
            || r.mode != first.mode
        {
            return Err(Error::MixedReports(format!(
                "{}/{}/{} vs {}/{}/{}",
                r.feature_label, r.pooling, r.mode, first.feature_label, first.pooling, first.mode
            )));
        }
    }
    let n = reports.len() as f64;
    let mut confusion = [[0.0; 4]; 4];
    for r in reports {
        for i in 0..4 {
            for j in 0..4 {
                confusion[i][j] += r.confusion[i][j] / n;
            }
        }
    }
    let mut per_class_recall = [None; 4];
    let mut absent = Vec::new();
    for i in 0..4 {
        let values: Vec<f64> = reports
            .iter()
            .filter_map(|r| r.per_class_recall[i])
            .collect();
        if values.is_empty() {
            absent.push(Dialect::ALL[i]);
        } else {
            per_class_recall[i] = Some(values.iter().sum::<f64>() / values.len() as f64);
        }
    }
    let mut names: Vec<&str> = reports.iter().map(|r| r.split_name.as_str()).collect();
    names.dedup();
    Ok(EvalReport {
        n_test: reports.iter().map(|r| r.n_test).sum(),
        per_class_recall,
        unweighted_accuracy: reports.iter().map(|r| r.unweighted_accuracy).sum::<f64>() / n,
        overall_accuracy: reports.iter().map(|r| r.overall_accuracy).sum::<f64>() / n,
        confusion,
        absent_classes: absent,
        split_name: names.join("+"),
        seeds: reports
            .iter()
            .flat_map(|r| r.seeds.iter().copied())
            .collect(),
        feature_kind: first.feature_kind,
        feature_label: first.feature_label.clone(),
        pooling: first.pooling,
        mode: first.mode,
    })
}

/// Unweighted accuracies arranged feature × (pooling × split mode), with
/// per-row maxima marked separately for the SD and the SI columns.
#[derive(Debug, Clone)]
pub struct ResultsTable {
    /// Row labels in first-appearance order.
    pub rows: Vec<String>,
    /// cells[row][pooling][mode] with mode 0 = SD, 1 = SI.
    pub cells: Vec<[[Option<f64>; 2]; 3]>,
}

fn mode_index(mode: SplitMode) -> usize {
    match mode {
        SplitMode::SD => 0,
        SplitMode::SI => 1,
    }
}

fn pooling_index(pooling: PoolingMode) -> usize {
    match pooling {
        PoolingMode::Mean => 0,
        PoolingMode::Std => 1,
        PoolingMode::MeanStd => 2,
    }
}

/// Arrange reports into a [`ResultsTable`]. Two reports for the same
/// (label, pooling, mode) cell are rejected.
pub fn results_table(reports: &[EvalReport]) -> Result<ResultsTable> {
    let mut rows: Vec<String> = Vec::new();
    let mut cells: Vec<[[Option<f64>; 2]; 3]> = Vec::new();
    for r in reports {
        let row = match rows.iter().position(|l| *l == r.feature_label) {
            Some(i) => i,
            None => {
                rows.push(r.feature_label.clone());
                cells.push([[None; 2]; 3]);
                rows.len() - 1
            }
        };
        let cell = &mut cells[row][pooling_index(r.pooling)][mode_index(r.mode)];
        if cell.is_some() {
            return Err(Error::MixedReports(format!(
                "duplicate table cell {}/{}/{}",
                r.feature_label, r.pooling, r.mode
            )));
        }
        *cell = Some(r.unweighted_accuracy);
    }
    Ok(ResultsTable { rows, cells })
}

impl ResultsTable {
    /// Whether a cell holds the row maximum among its split-mode columns.
    pub fn is_row_best(&self, row: usize, pooling: PoolingMode, mode: SplitMode) -> bool {
        let m = mode_index(mode);
        let Some(value) = self.cells[row][pooling_index(pooling)][m] else {
            return false;
        };
        self.cells[row]
            .iter()
            .filter_map(|by_mode| by_mode[m])
            .all(|other| value >= other)
    }

    /// Aligned text rendering; row-best cells per SD/SI are starred.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:<12}", "feature"));
        for pooling in PoolingMode::ALL {
            for mode in [SplitMode::SD, SplitMode::SI] {
                out.push_str(&format!("{:>13}", format!("{pooling}-{mode}")));
            }
        }
        out.push('\n');
        for (row, label) in self.rows.iter().enumerate() {
            out.push_str(&format!("{:<12}", label));
            for pooling in PoolingMode::ALL {
                for mode in [SplitMode::SD, SplitMode::SI] {
                    let text = match self.cells[row][pooling_index(pooling)][mode_index(mode)] {
                        Some(v) if self.is_row_best(row, pooling, mode) => format!("{v:.1}*"),
                        Some(v) => format!("{v:.1}"),
                        None => "-".to_string(),
                    };
                    out.push_str(&format!("{text:>13}"));
                }
            }
            out.push('\n');
        }
        out
    }

    /// CSV rendering with plain numbers (no markers).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature");
        for pooling in PoolingMode::ALL {
            for mode in [SplitMode::SD, SplitMode::SI] {
                out.push_str(&format!(",{pooling}_{mode}"));
            }
        }
        out.push('\n');
        for (row, label) in self.rows.iter().enumerate() {
            out.push_str(label);
            for pooling in PoolingMode::ALL {
                for mode in [SplitMode::SD, SplitMode::SI] {
                    match self.cells[row][pooling_index(pooling)][mode_index(mode)] {
                        Some(v) => out.push_str(&format!(",{v:.1}")),
                        None => out.push(','),
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}
