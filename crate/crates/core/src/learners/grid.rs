use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bagged::{bagged_fit_with_folds, FoldPlan, LearnerConfig, Technique};
use super::svr::SvrHyper;
use crate::error::{Error, Result};
use crate::indices::{Category, SupervisedDataset};
use crate::modelspace::ModelFormula;

/// One SVR setting; γ is `gamma_scale / d` for a d-feature formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub c: f64,
    pub epsilon: f64,
    pub gamma_scale: f64,
}

impl GridPoint {
    pub fn apply(&self, base: &SvrHyper) -> SvrHyper {
        SvrHyper {
            c: self.c,
            epsilon: self.epsilon,
            gamma: None,
            gamma_scale: self.gamma_scale,
            ..base.clone()
        }
    }
}

/// C in 2^-2..2^6, ε in {0.05, 0.1, 0.2, 0.3, 0.4}, γ·d in {1, 2, 0.5}.
pub fn default_grid() -> Vec<GridPoint> {
    let mut out = Vec::new();
    for p in -2..=6 {
        for epsilon in [0.05, 0.1, 0.2, 0.3, 0.4] {
            for gamma_scale in [1.0, 2.0, 0.5] {
                out.push(GridPoint {
                    c: 2f64.powi(p),
                    epsilon,
                    gamma_scale,
                });
            }
        }
    }
    out
}

/// Formulas with a single vegetation predictor.
pub fn singleton_vegetation(formulas: &[ModelFormula]) -> Vec<ModelFormula> {
    formulas
        .iter()
        .filter(|f| f.predictors.len() == 1 && f.predictors[0].category == Category::Vegetation)
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: GridPoint,
    pub best_score: f64,
    /// Mean validation R² per grid point, in grid order; −∞ where training failed.
    pub scores: Vec<f64>,
}

/// Mean bagged validation R² over `formulas` for each point; the first
/// maximum in grid order wins.
pub fn grid_search_svr(
    ds: &SupervisedDataset,
    formulas: &[ModelFormula],
    folds: &FoldPlan,
    base: &SvrHyper,
    grid: &[GridPoint],
) -> Result<GridResult> {
    if grid.is_empty() {
        return Err(Error::Config("SVR grid is empty".into()));
    }
    if formulas.is_empty() {
        return Err(Error::Config("grid search needs at least one formula".into()));
    }
    let scores: Vec<f64> = grid
        .par_iter()
        .map(|pt| {
            let cfg = LearnerConfig {
                svr: pt.apply(base),
                ..LearnerConfig::default()
            };
            let mut total = 0.0;
            for f in formulas {
                match bagged_fit_with_folds(f, Technique::Svr, ds, folds, &cfg) {
                    Ok(m) => total += m.val_r2,
                    Err(e) => {
                        log::debug!("grid point {pt:?} failed on {f}: {e}");
                        return f64::NEG_INFINITY;
                    }
                }
            }
            total / formulas.len() as f64
        })
        .collect();
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    Ok(GridResult {
        best: grid[best],
        best_score: scores[best],
        scores,
    })
}
