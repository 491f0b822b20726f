use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

impl MinMax {
    pub fn fit(values: impl Iterator<Item = f64>) -> Option<Self> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (hi > lo && lo.is_finite() && hi.is_finite()).then_some(Self { min: lo, max: hi })
    }

    pub fn transform(&self, v: f64) -> f64 {
        (v - self.min) / (self.max - self.min)
    }

    pub fn inverse(&self, v: f64) -> f64 {
        self.min + v * (self.max - self.min)
    }
}

/// Min-max scaling fitted on a training fold; no clamping outside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub features: Vec<MinMax>,
    pub target: Option<MinMax>,
}

pub fn fit_scaler(rows: &[Vec<f64>], target: Option<&[f64]>) -> Result<Scaler> {
    let d = rows.first().map(Vec::len).ok_or_else(|| Error::Data("cannot fit a scaler on no rows".into()))?;
    let features = (0..d)
        .map(|j| {
            MinMax::fit(rows.iter().map(|r| r[j]))
                .ok_or_else(|| Error::Data(format!("feature {j} is constant on the training fold")))
        })
        .collect::<Result<Vec<_>>>()?;
    let target = target
        .map(|y| MinMax::fit(y.iter().copied()).ok_or_else(|| Error::Data("target is constant on the training fold".into())))
        .transpose()?;
    Ok(Scaler { features, target })
}

impl Scaler {
    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.features).map(|(v, m)| m.transform(*v)).collect()
    }

    pub fn apply(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.apply_row(r)).collect()
    }

    pub fn scale_target(&self, y: &[f64]) -> Vec<f64> {
        match &self.target {
            Some(m) => y.iter().map(|v| m.transform(*v)).collect(),
            None => y.to_vec(),
        }
    }

    pub fn inverse_target(&self, v: f64) -> f64 {
        match &self.target {
            Some(m) => m.inverse(v),
            None => v,
        }
    }
}
