use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{BaggedModel, Technique};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GateConfig {
    pub r2_min: f64,
    pub overfit_tolerance: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            r2_min: 0.7,
            overfit_tolerance: 0.03,
        }
    }
}

impl GateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r2_min > 0.0 && self.r2_min < 1.0) || !(self.overfit_tolerance >= 0.0) {
            return Err(Error::Config(format!("invalid gate settings {self:?}")));
        }
        Ok(())
    }
}

/// Absorbs decimal rounding so that a loss of exactly the tolerance passes.
const ROUNDING: f64 = 1e-12;

/// `(r2_val - r2_train, r2_train - r2_val > tolerance)`.
pub fn overfit_index(r2_train: f64, r2_val: f64, tolerance: f64) -> (f64, bool) {
    (r2_val - r2_train, r2_train - r2_val > tolerance + ROUNDING)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateVerdict {
    Kept,
    BelowCutoff,
    Overfit,
}

impl GateVerdict {
    pub fn label(self) -> &'static str {
        match self {
            GateVerdict::Kept => "kept",
            GateVerdict::BelowCutoff => "below_cutoff",
            GateVerdict::Overfit => "overfit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateDecision {
    pub formula_id: String,
    pub formula: String,
    pub n_predictors: usize,
    pub train_r2: f64,
    pub val_r2: f64,
    pub overfit_index: f64,
    pub verdict: GateVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateOutcome {
    pub reference: Technique,
    pub total: usize,
    /// Surviving formula ids, by descending reference validation R²; ties go
    /// to fewer predictors, then input order.
    pub ranked: Vec<String>,
    pub decisions: Vec<GateDecision>,
}

/// Gates formulas on the `reference` technique's bagged metrics. Models of
/// other techniques are ignored here and admitted later by formula.
pub fn gate_models(models: &[BaggedModel], cfg: &GateConfig, reference: Technique) -> Result<GateOutcome> {
    cfg.validate()?;
    let mut decisions = Vec::new();
    let mut seen = BTreeMap::new();
    for m in models.iter().filter(|m| m.technique == reference) {
        if seen.insert(m.formula_id.clone(), ()).is_some() {
            return Err(Error::Data(format!("duplicate {reference} model for formula {}", m.formula_id)));
        }
        if !m.train_r2.is_finite() || !m.val_r2.is_finite() {
            return Err(Error::Data(format!("missing metrics for {}", m.key())));
        }
        let (index, overfit) = overfit_index(m.train_r2, m.val_r2, cfg.overfit_tolerance);
        let verdict = if m.val_r2 < cfg.r2_min {
            GateVerdict::BelowCutoff
        } else if overfit {
            GateVerdict::Overfit
        } else {
            GateVerdict::Kept
        };
        decisions.push(GateDecision {
            formula_id: m.formula_id.clone(),
            formula: m.formula.clone(),
            n_predictors: m.predictors.len(),
            train_r2: m.train_r2,
            val_r2: m.val_r2,
            overfit_index: index,
            verdict,
        });
    }
    let mut kept: Vec<(usize, &GateDecision)> = decisions
        .iter()
        .enumerate()
        .filter(|(_, d)| d.verdict == GateVerdict::Kept)
        .collect();
    if kept.is_empty() {
        return Err(Error::Data(format!(
            "no {reference} model passed the gate (validation R² ≥ {}, loss ≤ {})",
            cfg.r2_min, cfg.overfit_tolerance
        )));
    }
    kept.sort_by(|(i, a), (j, b)| {
        b.val_r2
            .total_cmp(&a.val_r2)
            .then(a.n_predictors.cmp(&b.n_predictors))
            .then(i.cmp(j))
    });
    Ok(GateOutcome {
        reference,
        total: decisions.len(),
        ranked: kept.iter().map(|(_, d)| d.formula_id.clone()).collect(),
        decisions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overfit_examples() {
        let (i, o) = overfit_index(0.81, 0.86, 0.03);
        assert!((i - 0.05).abs() < 1e-12 && !o);
        let (i, o) = overfit_index(0.87, 0.86, 0.03);
        assert!((i + 0.01).abs() < 1e-12 && !o);
        let (i, o) = overfit_index(0.90, 0.85, 0.03);
        assert!((i + 0.05).abs() < 1e-12 && o);
        assert!(!overfit_index(0.83, 0.80, 0.03).1);
    }
}
