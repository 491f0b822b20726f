use std::io::Write;

use serde::{Deserialize, Serialize};

use super::correlation::spearman;
use super::regression::{aic_linear, lmg_importance, stepwise_bidirectional, RegressionData};
use super::shapiro::{shapiro_wilk, NormalityResult};
use crate::error::{Error, Result};
use crate::indices::{SourceTag, SupervisedDataset, PRECIP_ROLES};

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableEvidence {
    pub name: String,
    pub source: SourceTag,
    pub role: String,
    pub spearman: f64,
    /// AIC of the single-variable linear model.
    pub aic: f64,
    pub lmg_share: f64,
    pub normality: NormalityResult,
    pub stepwise_selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceDecision {
    pub source_a: SourceTag,
    pub source_b: SourceTag,
    pub evidence: Vec<VariableEvidence>,
    pub mean_spearman_a: f64,
    pub mean_spearman_b: f64,
    pub stepwise_selected: Vec<String>,
    pub stepwise_aic: f64,
    pub full_r2: f64,
    pub chosen: SourceTag,
    pub tie: bool,
    pub alpha: f64,
}

/// Ranks two rainfall sources by the mean Spearman correlation of their six
/// variables against the lead target, and gathers the supporting evidence.
/// Equal means resolve to `a` with the tie flag set.
pub fn compare_sources(
    ds: &SupervisedDataset,
    a: (SourceTag, &[&str]),
    b: (SourceTag, &[&str]),
    alpha: f64,
) -> Result<SourceDecision> {
    let roles = PRECIP_ROLES.len();
    if a.1.len() != roles || b.1.len() != roles {
        return Err(Error::Config(format!(
            "each source must provide {roles} variables ({} and {} given)",
            a.1.len(),
            b.1.len()
        )));
    }
    let names: Vec<&str> = a.1.iter().chain(b.1).copied().collect();
    let data = RegressionData::from_dataset(ds, &names)?;
    let all: Vec<usize> = (0..names.len()).collect();
    let step = stepwise_bidirectional(&data, &all)?;
    let shares = lmg_importance(&data, &all)?;
    let full_r2 = data.r2(&all)?;

    let mut evidence = Vec::with_capacity(names.len());
    for (i, name) in names.iter().enumerate() {
        let (source, role) = if i < roles { (a.0, PRECIP_ROLES[i]) } else { (b.0, PRECIP_ROLES[i - roles]) };
        evidence.push(VariableEvidence {
            name: name.to_string(),
            source,
            role: role.to_string(),
            spearman: spearman(&data.columns[i], &data.y)?,
            aic: aic_linear(&data, &[i])?,
            lmg_share: shares[i],
            normality: shapiro_wilk(&data.columns[i])?,
            stepwise_selected: step.selected.contains(&i),
        });
    }
    let mean_of = |range: std::ops::Range<usize>| {
        evidence[range].iter().map(|e| e.spearman).sum::<f64>() / roles as f64
    };
    let mean_a = mean_of(0..roles);
    let mean_b = mean_of(roles..2 * roles);
    let tie = mean_a == mean_b;
    let chosen = if mean_b > mean_a { b.0 } else { a.0 };
    Ok(SourceDecision {
        source_a: a.0,
        source_b: b.0,
        stepwise_selected: step.selected.iter().map(|&i| names[i].to_string()).collect(),
        stepwise_aic: step.aic,
        evidence,
        mean_spearman_a: mean_a,
        mean_spearman_b: mean_b,
        full_r2,
        chosen,
        tie,
        alpha,
    })
}

/// Per-variable evidence table followed by summary rows.
pub fn write_source_report<W: Write>(d: &SourceDecision, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "variable",
        "source",
        "role",
        "spearman",
        "aic",
        "lmg_share",
        "shapiro_w",
        "shapiro_p",
        "normality_rejected",
        "stepwise_selected",
    ])?;
    for e in &d.evidence {
        w.write_record([
            e.name.clone(),
            e.source.to_string(),
            e.role.clone(),
            format!("{:.6}", e.spearman),
            format!("{:.6}", e.aic),
            format!("{:.6}", e.lmg_share),
            format!("{:.6}", e.normality.w),
            format!("{:.6e}", e.normality.p_value),
            e.normality.rejects_normality(d.alpha).to_string(),
            e.stepwise_selected.to_string(),
        ])?;
    }
    let summary = [
        (format!("mean_spearman_{}", d.source_a), format!("{:.6}", d.mean_spearman_a)),
        (format!("mean_spearman_{}", d.source_b), format!("{:.6}", d.mean_spearman_b)),
        ("full_model_r2".to_string(), format!("{:.6}", d.full_r2)),
        ("stepwise_aic".to_string(), format!("{:.6}", d.stepwise_aic)),
        ("stepwise_set".to_string(), d.stepwise_selected.join(" + ")),
        ("chosen_source".to_string(), d.chosen.to_string()),
        ("tie".to_string(), d.tie.to_string()),
        ("alpha".to_string(), d.alpha.to_string()),
    ];
    for (k, v) in summary {
        let mut rec = vec![String::new(); 10];
        rec[0] = k;
        rec[3] = v;
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("source report", e))?;
    Ok(())
}
