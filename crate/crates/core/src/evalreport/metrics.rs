use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{average_ranks, mean, pearson};

/// Squared Pearson correlation between predicted and actual.
pub fn r2(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::Data("predicted and actual differ in length".into()));
    }
    if actual.len() < 3 {
        return Err(Error::Data(format!("R² needs at least 3 rows, got {}", actual.len())));
    }
    pearson(predicted, actual)
        .map(|r| r * r)
        .ok_or_else(|| Error::Data("R² undefined for a constant vector".into()))
}

/// `1 - RSS/TSS`, reported next to the squared correlation.
pub fn r2_determination(predicted: &[f64], actual: &[f64]) -> Option<f64> {
    let m = mean(actual);
    let tss: f64 = actual.iter().map(|a| (a - m).powi(2)).sum();
    let rss: f64 = predicted.iter().zip(actual).map(|(p, a)| (a - p).powi(2)).sum();
    (tss > 0.0).then(|| 1.0 - rss / tss)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub rmse: f64,
    pub mae: f64,
    /// Percent; `None` when every actual value is (near) zero.
    pub mape: Option<f64>,
    pub mape_skipped: usize,
}

pub const MAPE_FLOOR: f64 = 1e-9;

pub fn error_metrics(predicted: &[f64], actual: &[f64]) -> Result<ErrorMetrics> {
    if predicted.len() != actual.len() || actual.is_empty() {
        return Err(Error::Data("error metrics need aligned, non-empty vectors".into()));
    }
    let n = actual.len() as f64;
    let rmse = (predicted.iter().zip(actual).map(|(p, a)| (p - a).powi(2)).sum::<f64>() / n).sqrt();
    let mae = predicted.iter().zip(actual).map(|(p, a)| (p - a).abs()).sum::<f64>() / n;
    let mut total = 0.0;
    let mut used = 0usize;
    for (p, a) in predicted.iter().zip(actual) {
        if a.abs() >= MAPE_FLOOR {
            total += ((p - a) / a).abs();
            used += 1;
        }
    }
    Ok(ErrorMetrics {
        rmse,
        mae,
        mape: (used > 0).then(|| 100.0 * total / used as f64),
        mape_skipped: actual.len() - used,
    })
}

/// Vegetation-deficit class 1 (extreme) to 5 (none).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DroughtClass(u8);

impl DroughtClass {
    /// Lower bounds of classes 2 to 5.
    pub const BOUNDS: [f64; 4] = [10.0, 20.0, 35.0, 50.0];

    pub fn new(class: u8) -> Result<Self> {
        if !(1..=5).contains(&class) {
            return Err(Error::Data(format!("drought class {class} out of range 1-5")));
        }
        Ok(Self(class))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn is_drought(self) -> bool {
        self.0 <= 3
    }

    pub fn label(self) -> &'static str {
        match self.0 {
            1 => "Extreme vegetation deficit",
            2 => "Severe vegetation deficit",
            3 => "Moderate vegetation deficit",
            4 => "Normal vegetation conditions",
            _ => "Above normal vegetation conditions",
        }
    }
}

impl fmt::Display for DroughtClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Lower bounds are inclusive; below 0 and above 100 fall into the end classes.
pub fn classify_vci3m(value: f64) -> Result<DroughtClass> {
    if !value.is_finite() {
        return Err(Error::Data(format!("cannot classify non-finite VCI3M {value}")));
    }
    let class = 1 + DroughtClass::BOUNDS.iter().filter(|b| value >= **b).count() as u8;
    Ok(DroughtClass(class))
}

pub fn accuracy(predicted: &[DroughtClass], actual: &[DroughtClass]) -> Result<f64> {
    if predicted.len() != actual.len() || actual.is_empty() {
        return Err(Error::Data("accuracy needs aligned, non-empty class vectors".into()));
    }
    let hits = predicted.iter().zip(actual).filter(|(p, a)| p == a).count();
    Ok(hits as f64 / actual.len() as f64)
}

/// Mann-Whitney AUROC with average ranks for ties.
pub fn auroc_binary(scores: &[f64], events: &[bool]) -> Result<f64> {
    if scores.len() != events.len() {
        return Err(Error::Data("scores and events differ in length".into()));
    }
    let pos = events.iter().filter(|e| **e).count();
    let neg = events.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Data("AUROC needs both events and non-events".into()));
    }
    let ranks = average_ranks(scores);
    let rank_sum: f64 = ranks.iter().zip(events).filter(|(_, e)| **e).map(|(r, _)| r).sum();
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// AUROC of the drought event (actual class ≤ 3) scored by −predicted VCI3M.
pub fn drought_auroc(predicted_vci: &[f64], actual: &[DroughtClass]) -> Result<f64> {
    let scores: Vec<f64> = predicted_vci.iter().map(|v| -v).collect();
    let events: Vec<bool> = actual.iter().map(|c| c.is_drought()).collect();
    auroc_binary(&scores, &events)
}

/// Among months with actual class ≤ 3, the share predicted as class ≤ 3.
pub fn moderate_extreme_recall(predicted: &[DroughtClass], actual: &[DroughtClass]) -> Result<f64> {
    let (hit, total) = drought_months(predicted, actual, |p, _| p.is_drought())?;
    Ok(hit as f64 / total as f64)
}

/// Among months with actual class ≤ 3, the share predicted in exactly that class.
pub fn drought_exact_agreement(predicted: &[DroughtClass], actual: &[DroughtClass]) -> Result<f64> {
    let (hit, total) = drought_months(predicted, actual, |p, a| p == a)?;
    Ok(hit as f64 / total as f64)
}

fn drought_months(
    predicted: &[DroughtClass],
    actual: &[DroughtClass],
    hit: impl Fn(DroughtClass, DroughtClass) -> bool,
) -> Result<(usize, usize)> {
    if predicted.len() != actual.len() {
        return Err(Error::Data("class vectors differ in length".into()));
    }
    let rows: Vec<(DroughtClass, DroughtClass)> = predicted
        .iter()
        .zip(actual)
        .filter(|(_, a)| a.is_drought())
        .map(|(p, a)| (*p, *a))
        .collect();
    if rows.is_empty() {
        return Err(Error::Data("no moderate-to-extreme months among the actual classes".into()));
    }
    Ok((rows.iter().filter(|(p, a)| hit(*p, *a)).count(), rows.len()))
}

/// All metrics for one group of rows; undefined values are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub group: String,
    pub n: usize,
    pub r2: Option<f64>,
    /// Sign of the correlation behind `r2`.
    pub corr_sign: Option<f64>,
    pub r2_determination: Option<f64>,
    pub rmse: f64,
    pub mae: f64,
    pub mape: Option<f64>,
    pub mape_skipped: usize,
    pub accuracy: f64,
    pub auroc: Option<f64>,
    pub moderate_extreme_recall: Option<f64>,
    pub drought_exact_agreement: Option<f64>,
    pub drought_months: usize,
}

pub fn compute_metrics(group: &str, predicted: &[f64], actual: &[f64]) -> Result<MetricsRecord> {
    let err = error_metrics(predicted, actual)?;
    let pc = predicted.iter().map(|v| classify_vci3m(*v)).collect::<Result<Vec<_>>>()?;
    let ac = actual.iter().map(|v| classify_vci3m(*v)).collect::<Result<Vec<_>>>()?;
    let corr = if actual.len() >= 3 { pearson(predicted, actual) } else { None };
    Ok(MetricsRecord {
        group: group.to_string(),
        n: actual.len(),
        r2: corr.map(|r| r * r),
        corr_sign: corr.map(f64::signum),
        r2_determination: r2_determination(predicted, actual),
        rmse: err.rmse,
        mae: err.mae,
        mape: err.mape,
        mape_skipped: err.mape_skipped,
        accuracy: accuracy(&pc, &ac)?,
        auroc: drought_auroc(predicted, &ac).ok(),
        moderate_extreme_recall: moderate_extreme_recall(&pc, &ac).ok(),
        drought_exact_agreement: drought_exact_agreement(&pc, &ac).ok(),
        drought_months: ac.iter().filter(|c| c.is_drought()).count(),
    })
}
