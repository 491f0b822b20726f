use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::combine::{combine_simple, combine_with_weights, score_weights};
use super::gate::GateConfig;
use super::select::{select_members, Selection};
use super::stacker::{train_stacker, Stacker, StackerConfig};
use crate::error::{Error, Result};
use crate::indices::SupervisedDataset;
use crate::learners::{ModelRegistry, Technique};
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleMode {
    HomogeneousAnn,
    HomogeneousSvr,
    Heterogeneous,
}

impl EnsembleMode {
    pub const ALL: [EnsembleMode; 3] = [
        EnsembleMode::HomogeneousAnn,
        EnsembleMode::HomogeneousSvr,
        EnsembleMode::Heterogeneous,
    ];

    pub fn techniques(self) -> &'static [Technique] {
        match self {
            EnsembleMode::HomogeneousAnn => &[Technique::Ann],
            EnsembleMode::HomogeneousSvr => &[Technique::Svr],
            EnsembleMode::Heterogeneous => &[Technique::Ann, Technique::Svr],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            EnsembleMode::HomogeneousAnn => "homogeneous-ann",
            EnsembleMode::HomogeneousSvr => "homogeneous-svr",
            EnsembleMode::Heterogeneous => "heterogeneous",
        }
    }
}

impl fmt::Display for EnsembleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    Simple,
    Weighted,
    Stacked,
}

impl Combiner {
    pub const ALL: [Combiner; 3] = [Combiner::Simple, Combiner::Weighted, Combiner::Stacked];

    pub fn label(self) -> &'static str {
        match self {
            Combiner::Simple => "simple",
            Combiner::Weighted => "weighted",
            Combiner::Stacked => "stacked",
        }
    }
}

impl fmt::Display for Combiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Combiner {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Combiner::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| Error::Config(format!("unknown combiner {s}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberRef {
    pub formula_id: String,
    pub technique: Technique,
    /// Bagged validation R², the weighting score.
    pub score: f64,
}

impl MemberRef {
    pub fn key(&self) -> String {
        format!("{}.{}", self.formula_id, self.technique)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub mode: EnsembleMode,
    pub combiner: Combiner,
    /// Formula order follows the selection ranking; heterogeneous specs list
    /// each formula's ANN member before its SVR member.
    pub members: Vec<MemberRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stacker: Option<Stacker>,
}

impl EnsembleSpec {
    pub fn name(&self) -> String {
        format!("{}-{}", self.combiner, self.mode)
    }

    pub fn to_manifest(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Data(format!("serialising ensemble {}: {e}", self.name())))
    }

    pub fn from_manifest(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Data(format!("not an ensemble manifest: {e}")))
    }
}

pub fn members_for(formula_ids: &[String], mode: EnsembleMode, registry: &ModelRegistry) -> Result<Vec<MemberRef>> {
    let mut out = Vec::new();
    for id in formula_ids {
        for &t in mode.techniques() {
            let m = registry
                .get(id, t)
                .ok_or_else(|| Error::Data(format!("model {id}.{t} missing from the registry")))?;
            out.push(MemberRef {
                formula_id: id.clone(),
                technique: t,
                score: m.val_r2,
            });
        }
    }
    Ok(out)
}

/// Out-of-fold columns for `members` restricted to rows every member covers;
/// returns the row indices (into the registry keys) and the columns.
pub fn oof_columns(members: &[MemberRef], registry: &ModelRegistry) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
    let models = members
        .iter()
        .map(|m| {
            registry
                .get(&m.formula_id, m.technique)
                .ok_or_else(|| Error::Data(format!("model {} missing from the registry", m.key())))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = registry.keys.len();
    if models.iter().any(|m| m.oof.len() != n) {
        return Err(Error::Data("out-of-fold predictions do not match the registry rows".into()));
    }
    let rows: Vec<usize> = (0..n).filter(|&i| models.iter().all(|m| m.oof[i].is_some())).collect();
    if rows.len() < 3 {
        return Err(Error::Data(format!("only {} rows carry out-of-fold predictions for every member", rows.len())));
    }
    let cols = models
        .iter()
        .map(|m| rows.iter().map(|&i| m.oof[i].unwrap()).collect())
        .collect();
    Ok((rows, cols))
}

fn check_rows(registry: &ModelRegistry, in_sample: &SupervisedDataset) -> Result<()> {
    if registry.keys != in_sample.keys {
        return Err(Error::Data("registry rows differ from the in-sample dataset".into()));
    }
    Ok(())
}

/// Fits the combiner of one ensemble from out-of-fold predictions of the
/// in-sample rows.
pub fn build_spec(
    mode: EnsembleMode,
    combiner: Combiner,
    formula_ids: &[String],
    registry: &ModelRegistry,
    in_sample: &SupervisedDataset,
    stacker: &StackerConfig,
    seed: u64,
) -> Result<EnsembleSpec> {
    check_rows(registry, in_sample)?;
    let members = members_for(formula_ids, mode, registry)?;
    let mut spec = EnsembleSpec {
        mode,
        combiner,
        members,
        weights: None,
        stacker: None,
    };
    match combiner {
        Combiner::Simple => {}
        Combiner::Weighted => {
            let scores: Vec<f64> = spec.members.iter().map(|m| m.score).collect();
            spec.weights = Some(score_weights(&scores)?);
        }
        Combiner::Stacked => {
            let (rows, cols) = oof_columns(&spec.members, registry)?;
            let target: Vec<f64> = rows.iter().map(|&i| in_sample.targets[i]).collect();
            let s = derive_seed(seed, "stacker", mode.label(), 0);
            spec.stacker = Some(train_stacker(&cols, &target, stacker, s).map_err(|e| e.context(&spec.name()))?);
        }
    }
    Ok(spec)
}

pub fn combine_columns(spec: &EnsembleSpec, cols: &[Vec<f64>]) -> Result<Vec<f64>> {
    match spec.combiner {
        Combiner::Simple => combine_simple(cols),
        Combiner::Weighted => {
            let w = spec
                .weights
                .as_ref()
                .ok_or_else(|| Error::Data(format!("{} has no weights", spec.name())))?;
            combine_with_weights(cols, w)
        }
        Combiner::Stacked => spec
            .stacker
            .as_ref()
            .ok_or_else(|| Error::Data(format!("{} has no meta-model", spec.name())))?
            .predict_columns(cols),
    }
}

/// Member predictions on `ds`, gathered in parallel and combined in member order.
pub fn predict_ensemble(spec: &EnsembleSpec, registry: &ModelRegistry, ds: &SupervisedDataset) -> Result<Vec<f64>> {
    let cols = spec
        .members
        .par_iter()
        .map(|m| {
            registry
                .get(&m.formula_id, m.technique)
                .ok_or_else(|| Error::Data(format!("model {} missing from the registry", m.key())))?
                .predict_dataset(ds)
        })
        .collect::<Result<Vec<_>>>()?;
    combine_columns(spec, &cols)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    pub gate: GateConfig,
    /// Models dropped per backward step.
    pub batch: usize,
    pub stacker: StackerConfig,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            gate: GateConfig::default(),
            batch: 5,
            stacker: StackerConfig::default(),
        }
    }
}

/// Backward-forward selection over the ranked formulas, scored on their ANN
/// out-of-fold predictions; returns the selection and the chosen formula ids
/// in rank order.
pub fn select_formulas(
    registry: &ModelRegistry,
    in_sample: &SupervisedDataset,
    ranked: &[String],
    batch: usize,
) -> Result<(Selection, Vec<String>)> {
    check_rows(registry, in_sample)?;
    let members = members_for(ranked, EnsembleMode::HomogeneousAnn, registry)?;
    let (rows, cols) = oof_columns(&members, registry)?;
    let target: Vec<f64> = rows.iter().map(|&i| in_sample.targets[i]).collect();
    let selection = select_members(&cols, &target, batch)?;
    let ids = selection.members.iter().map(|&i| ranked[i].clone()).collect();
    Ok((selection, ids))
}
