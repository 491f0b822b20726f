use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::metrics::{classify_vci3m, compute_metrics, MetricsRecord};
use crate::error::{Error, Result};
use crate::indices::SupervisedDataset;

pub const OVERALL: &str = "OVERALL";

/// One evaluated approach, e.g. `ann-champion` or `stacked` over the
/// `heterogeneous` ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Approach {
    pub kind: String,
    /// Ensemble mode label; empty for champion models.
    pub ensemble: String,
}

impl Approach {
    pub fn new(kind: &str, ensemble: &str) -> Self {
        Self {
            kind: kind.to_string(),
            ensemble: ensemble.to_string(),
        }
    }

    pub fn name(&self) -> String {
        if self.ensemble.is_empty() {
            self.kind.clone()
        } else {
            format!("{}-{}", self.kind, self.ensemble)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproachResult {
    pub approach: Approach,
    /// Out-of-sample predictions aligned with the evaluation rows.
    pub predictions: Vec<f64>,
    /// Per-unit records in unit order, then the pooled OVERALL record.
    pub metrics: Vec<MetricsRecord>,
}

impl ApproachResult {
    pub fn overall(&self) -> &MetricsRecord {
        self.metrics.last().expect("OVERALL record is always present")
    }

    pub fn group(&self, unit: &str) -> Option<&MetricsRecord> {
        self.metrics.iter().find(|m| m.group == unit)
    }
}

/// Per-unit and pooled metrics for each approach on the out-of-sample rows.
pub fn evaluate(holdout: &SupervisedDataset, approaches: Vec<(Approach, Vec<f64>)>) -> Result<Vec<ApproachResult>> {
    let mut by_unit: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, k) in holdout.keys.iter().enumerate() {
        by_unit.entry(k.unit.as_str()).or_default().push(i);
    }
    approaches
        .into_iter()
        .map(|(approach, predictions)| {
            if predictions.len() != holdout.n_rows() {
                return Err(Error::Data(format!(
                    "{}: {} predictions for {} rows",
                    approach.name(),
                    predictions.len(),
                    holdout.n_rows()
                )));
            }
            let mut metrics = Vec::new();
            for (unit, rows) in &by_unit {
                let p: Vec<f64> = rows.iter().map(|&i| predictions[i]).collect();
                let a: Vec<f64> = rows.iter().map(|&i| holdout.targets[i]).collect();
                metrics.push(compute_metrics(unit, &p, &a)?);
            }
            metrics.push(compute_metrics(OVERALL, &predictions, &holdout.targets)?);
            Ok(ApproachResult {
                approach,
                predictions,
                metrics,
            })
        })
        .collect()
}

fn cell(v: Option<f64>, what: &str) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.6}"),
        _ => {
            log::warn!("{what}: value undefined, left blank");
            String::new()
        }
    }
}

fn units(results: &[ApproachResult]) -> Vec<String> {
    results
        .first()
        .map(|r| r.metrics.iter().map(|m| m.group.clone()).collect())
        .unwrap_or_default()
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn table(results: &[ApproachResult], metric: &str, pick: impl Fn(&MetricsRecord) -> Option<f64>) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["approach".to_string(), "ensemble".to_string()];
    header.extend(units(results));
    let rows = results
        .iter()
        .map(|r| {
            let mut row = vec![r.approach.kind.clone(), r.approach.ensemble.clone()];
            row.extend(
                r.metrics
                    .iter()
                    .map(|m| cell(pick(m), &format!("{metric} {} {}", r.approach.name(), m.group))),
            );
            row
        })
        .collect();
    (header, rows)
}

/// Writes the report tables into `dir`; returns the written paths.
pub fn emit_report(dir: &Path, holdout: &SupervisedDataset, results: &[ApproachResult]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    let mut emit = |name: &str, (header, rows): (Vec<String>, Vec<Vec<String>>)| -> Result<()> {
        let path = dir.join(name);
        write_csv(&path, &header, &rows)?;
        written.push(path);
        Ok(())
    };
    emit("regression.csv", table(results, "R2", |m| m.r2))?;
    emit("classification.csv", table(results, "accuracy", |m| Some(m.accuracy)))?;
    emit("auroc.csv", table(results, "AUROC", |m| m.auroc))?;

    let header: Vec<String> = [
        "approach", "ensemble", "group", "n", "r2", "corr_sign", "r2_determination", "rmse", "mae", "mape",
        "mape_skipped", "accuracy", "auroc", "moderate_extreme_recall", "drought_exact_agreement", "drought_months",
    ]
    .map(String::from)
    .to_vec();
    let mut rows = Vec::new();
    for r in results {
        for m in &r.metrics {
            let what = |k: &str| format!("{k} {} {}", r.approach.name(), m.group);
            rows.push(vec![
                r.approach.kind.clone(),
                r.approach.ensemble.clone(),
                m.group.clone(),
                m.n.to_string(),
                cell(m.r2, &what("R2")),
                cell(m.corr_sign, &what("correlation sign")),
                cell(m.r2_determination, &what("R2 (1 - RSS/TSS)")),
                cell(Some(m.rmse), &what("RMSE")),
                cell(Some(m.mae), &what("MAE")),
                cell(m.mape, &what("MAPE")),
                m.mape_skipped.to_string(),
                cell(Some(m.accuracy), &what("accuracy")),
                cell(m.auroc, &what("AUROC")),
                cell(m.moderate_extreme_recall, &what("drought recall")),
                cell(m.drought_exact_agreement, &what("drought exact agreement")),
                m.drought_months.to_string(),
            ]);
        }
    }
    emit("metrics.csv", (header, rows))?;

    let header: Vec<String> = ["approach", "ensemble", "group", "drought_months", "moderate_extreme_recall", "drought_exact_agreement"]
        .map(String::from)
        .to_vec();
    let rows = results
        .iter()
        .flat_map(|r| {
            r.metrics.iter().map(move |m| {
                vec![
                    r.approach.kind.clone(),
                    r.approach.ensemble.clone(),
                    m.group.clone(),
                    m.drought_months.to_string(),
                    m.moderate_extreme_recall.map(|v| format!("{v:.6}")).unwrap_or_default(),
                    m.drought_exact_agreement.map(|v| format!("{v:.6}")).unwrap_or_default(),
                ]
            })
        })
        .collect();
    emit("drought_recall.csv", (header, rows))?;

    let header: Vec<String> = [
        "approach", "ensemble", "unit", "month", "actual_vci3m", "predicted_vci3m", "actual_class", "predicted_class", "match",
    ]
    .map(String::from)
    .to_vec();
    let mut rows = Vec::new();
    for r in results {
        for i in 0..holdout.n_rows() {
            let (a, p) = (holdout.targets[i], r.predictions[i]);
            let (ac, pc) = (classify_vci3m(a)?, classify_vci3m(p)?);
            rows.push(vec![
                r.approach.kind.clone(),
                r.approach.ensemble.clone(),
                holdout.keys[i].unit.clone(),
                holdout.target_months[i].to_string(),
                format!("{a:.6}"),
                format!("{p:.6}"),
                ac.to_string(),
                pc.to_string(),
                u8::from(ac == pc).to_string(),
            ]);
        }
    }
    emit("agreement.csv", (header, rows))?;
    Ok(written)
}
