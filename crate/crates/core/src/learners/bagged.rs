use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ann::{train_ann, AnnHyper, Network};
use super::scaler::{fit_scaler, Scaler};
use super::svr::{train_svr, EpsilonUnits, SvrHyper, SvrModel};
use crate::data::{assign_folds, Fold, SplitPlan};
use crate::error::{Error, Result};
use crate::indices::SupervisedDataset;
use crate::modelspace::ModelFormula;
use crate::seed::derive_seed;
use crate::stats::squared_pearson;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Technique {
    Ann,
    Svr,
}

impl Technique {
    pub const ALL: [Technique; 2] = [Technique::Ann, Technique::Svr];

    pub fn tag(self) -> &'static str {
        match self {
            Technique::Ann => "ann",
            Technique::Svr => "svr",
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Technique {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ann" => Ok(Technique::Ann),
            "svr" => Ok(Technique::Svr),
            _ => Err(Error::Config(format!("unknown technique {s}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    pub ann: AnnHyper,
    pub svr: SvrHyper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ReplicateModel {
    Ann { network: Network, best_epoch: usize, epochs_run: usize },
    Svr { svr: SvrModel },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    pub repeat: usize,
    pub seed: u64,
    pub train_r2: f64,
    pub val_r2: f64,
    pub scaler: Scaler,
    pub model: ReplicateModel,
}

impl Replicate {
    pub fn predict_row(&self, raw: &[f64]) -> f64 {
        let x = self.scaler.apply_row(raw);
        let out = match &self.model {
            ReplicateModel::Ann { network, .. } => network.predict_one(&x),
            ReplicateModel::Svr { svr } => svr.predict_one(&x),
        };
        self.scaler.inverse_target(out)
    }
}

/// K replicates of one (formula, technique) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaggedModel {
    pub formula_id: String,
    pub formula: String,
    pub predictors: Vec<String>,
    pub technique: Technique,
    pub train_r2: f64,
    pub val_r2: f64,
    /// Validation minus training R².
    pub overfit_index: f64,
    pub replicates: Vec<Replicate>,
    /// Out-of-fold prediction per in-sample row: mean over the repeats in
    /// which the row was in VALIDATION; `None` if it never was.
    #[serde(skip)]
    pub oof: Vec<Option<f64>>,
}

impl BaggedModel {
    pub fn key(&self) -> String {
        format!("{}.{}", self.formula_id, self.technique)
    }

    /// Mean of the replicates' inverse-scaled outputs on raw feature rows
    /// (columns in `predictors` order).
    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        let k = self.replicates.len() as f64;
        rows.iter()
            .map(|r| self.replicates.iter().map(|rep| rep.predict_row(r)).sum::<f64>() / k)
            .collect()
    }

    pub fn predict_dataset(&self, ds: &SupervisedDataset) -> Result<Vec<f64>> {
        let names: Vec<&str> = self.predictors.iter().map(String::as_str).collect();
        Ok(self.predict(&ds.design(&names)?))
    }
}

/// Fold labels per repeat, aligned with the dataset rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPlan {
    pub seed: u64,
    pub folds: Vec<Vec<Fold>>,
}

impl FoldPlan {
    pub fn new(ds: &SupervisedDataset, plan: &SplitPlan) -> Result<Self> {
        let folds = (0..plan.repeats)
            .map(|r| assign_folds(&ds.keys, plan, r))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { seed: plan.seed, folds })
    }

    pub fn repeats(&self) -> usize {
        self.folds.len()
    }
}

fn pick<T: Clone>(v: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| v[i].clone()).collect()
}

fn fit_replicate(
    technique: Technique,
    x: &[Vec<f64>],
    y: &[f64],
    train: &[usize],
    valid: &[usize],
    cfg: &LearnerConfig,
    seed: u64,
    repeat: usize,
) -> Result<(Replicate, Vec<f64>)> {
    let (tx, ty) = (pick(x, train), pick(y, train));
    let (vx, vy) = (pick(x, valid), pick(y, valid));
    let scale_target = match technique {
        Technique::Ann => true,
        Technique::Svr => cfg.svr.epsilon_units == EpsilonUnits::Scaled,
    };
    let scaler = fit_scaler(&tx, scale_target.then_some(ty.as_slice()))?;
    let (sx, sy) = (scaler.apply(&tx), scaler.scale_target(&ty));
    let svx = scaler.apply(&vx);
    let model = match technique {
        Technique::Ann => {
            let svy = scaler.scale_target(&vy);
            let valid = (!svx.is_empty()).then_some((svx.as_slice(), svy.as_slice()));
            let out = train_ann(&sx, &sy, valid, &cfg.ann, seed)?;
            ReplicateModel::Ann {
                network: out.network,
                best_epoch: out.best_epoch,
                epochs_run: out.epochs_run,
            }
        }
        Technique::Svr => ReplicateModel::Svr {
            svr: train_svr(&sx, &sy, &cfg.svr)?,
        },
    };
    let mut rep = Replicate {
        repeat,
        seed,
        train_r2: 0.0,
        val_r2: 0.0,
        scaler,
        model,
    };
    let train_pred: Vec<f64> = tx.iter().map(|r| rep.predict_row(r)).collect();
    let val_pred: Vec<f64> = vx.iter().map(|r| rep.predict_row(r)).collect();
    if train_pred.iter().chain(&val_pred).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite prediction".into()));
    }
    rep.train_r2 = squared_pearson(&train_pred, &ty);
    rep.val_r2 = if vy.len() >= 2 { squared_pearson(&val_pred, &vy) } else { 0.0 };
    Ok((rep, val_pred))
}

/// Trains K replicates on the shared fold plan and aggregates their metrics.
pub fn bagged_fit_with_folds(
    formula: &ModelFormula,
    technique: Technique,
    ds: &SupervisedDataset,
    folds: &FoldPlan,
    cfg: &LearnerConfig,
) -> Result<BaggedModel> {
    if folds.repeats() == 0 {
        return Err(Error::Config("bagging needs at least one repeat".into()));
    }
    let id = formula.id();
    let names = formula.names();
    let x = ds.design(&names)?;
    let y = &ds.targets;
    let n = ds.n_rows();
    let mut oof_sum = vec![0.0; n];
    let mut oof_count = vec![0usize; n];
    let mut replicates = Vec::with_capacity(folds.repeats());
    for (repeat, labels) in folds.folds.iter().enumerate() {
        if labels.len() != n {
            return Err(Error::Data("fold plan does not match the dataset".into()));
        }
        let train: Vec<usize> = (0..n).filter(|&i| labels[i] == Fold::Train).collect();
        let valid: Vec<usize> = (0..n).filter(|&i| labels[i] == Fold::Validation).collect();
        let seed = derive_seed(folds.seed, technique.tag(), &id, repeat as u64);
        let (rep, val_pred) = fit_replicate(technique, &x, y, &train, &valid, cfg, seed, repeat).map_err(|e| e.context(&format!("{technique} {id} repeat {repeat}")))?;
        for (&i, p) in valid.iter().zip(&val_pred) {
            oof_sum[i] += p;
            oof_count[i] += 1;
        }
        replicates.push(rep);
    }
    let k = replicates.len() as f64;
    let train_r2 = replicates.iter().map(|r| r.train_r2).sum::<f64>() / k;
    let val_r2 = replicates.iter().map(|r| r.val_r2).sum::<f64>() / k;
    Ok(BaggedModel {
        formula_id: id,
        formula: formula.to_string(),
        predictors: names.iter().map(|s| s.to_string()).collect(),
        technique,
        train_r2,
        val_r2,
        overfit_index: val_r2 - train_r2,
        replicates,
        oof: oof_sum
            .iter()
            .zip(&oof_count)
            .map(|(s, &c)| (c > 0).then(|| s / c as f64))
            .collect(),
    })
}

pub fn bagged_fit(
    formula: &ModelFormula,
    technique: Technique,
    ds: &SupervisedDataset,
    plan: &SplitPlan,
    cfg: &LearnerConfig,
) -> Result<BaggedModel> {
    let folds = FoldPlan::new(ds, plan)?;
    bagged_fit_with_folds(formula, technique, ds, &folds, cfg)
}
