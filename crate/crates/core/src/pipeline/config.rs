use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{SplitPlan, SynthConfig};
use crate::ensemble::{Combiner, EnsembleConfig};
use crate::error::{Error, Result};
use crate::indices::IndexConfig;
use crate::learners::{AnnHyper, LearnerConfig, SvrHyper, Technique};
use crate::varselect::DEFAULT_ALPHA;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSettings {
    pub holdout_months: usize,
    pub ratio: f64,
    pub repeats: usize,
}

impl Default for SplitSettings {
    fn default() -> Self {
        let p = SplitPlan::default();
        Self {
            holdout_months: p.holdout_months,
            ratio: p.ratio,
            repeats: p.repeats,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VarselectSettings {
    pub alpha: f64,
    /// Compare the primary and alternate rainfall sources when both exist.
    pub compare_sources: bool,
}

impl Default for VarselectSettings {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            compare_sources: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerSettings {
    pub techniques: Vec<Technique>,
    /// Replace the SVR C/ε/γ with the best point of the default grid.
    pub grid_search: bool,
    pub ann: AnnHyper,
    /// `epsilon_units = "raw"` keeps ε in VCI units; "scaled" applies it to
    /// the min-max scaled target.
    pub svr: SvrHyper,
}

impl Default for LearnerSettings {
    fn default() -> Self {
        Self {
            techniques: Technique::ALL.to_vec(),
            grid_search: false,
            ann: AnnHyper::default(),
            svr: SvrHyper::default(),
        }
    }
}

impl LearnerSettings {
    pub fn learner_config(&self) -> LearnerConfig {
        LearnerConfig {
            ann: self.ann.clone(),
            svr: self.svr.clone(),
        }
    }
}

/// Everything a run depends on besides the input bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Input table; synthetic data from `synth` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    pub interpolate_short_gaps: bool,
    /// Run directory. Not part of the run identity.
    pub out: PathBuf,
    pub lead: usize,
    pub synth: SynthConfig,
    pub split: SplitSettings,
    pub indices: IndexConfig,
    pub varselect: VarselectSettings,
    pub learners: LearnerSettings,
    pub ensemble: EnsembleConfig,
    pub combiners: Vec<Combiner>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            input: None,
            interpolate_short_gaps: false,
            out: PathBuf::from("run"),
            lead: 1,
            synth: SynthConfig::default(),
            split: SplitSettings::default(),
            indices: IndexConfig::default(),
            varselect: VarselectSettings::default(),
            learners: LearnerSettings::default(),
            ensemble: EnsembleConfig::default(),
            combiners: Combiner::ALL.to_vec(),
        }
    }
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Error::Config(format!("empty key in {key:?}")))?;
    let mut node = table;
    for p in parts {
        let entry = node
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("{key}: {p} is not a section")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with(text, &[])
    }

    /// Applies `key.path=value` overrides on top of the TOML text.
    pub fn from_toml_with(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e| Error::Config(format!("config: {e}")))?;
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {o:?} is not key=value")))?;
            set_path(&mut table, k.trim(), parse_value(v.trim()))?;
        }
        let cfg: RunConfig = table.try_into().map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.split_plan().validate()?;
        self.ensemble.gate.validate()?;
        self.learners.ann.rprop.validate()?;
        self.learners.svr.validate()?;
        if self.lead == 0 {
            return Err(Error::Config("lead must be at least 1".into()));
        }
        if self.learners.techniques.is_empty() {
            return Err(Error::Config("at least one technique is required".into()));
        }
        if !self.learners.techniques.contains(&Technique::Ann) {
            return Err(Error::Config("gating uses ANN metrics, so ANN must be trained".into()));
        }
        if self.combiners.is_empty() {
            return Err(Error::Config("at least one combiner is required".into()));
        }
        if self.ensemble.batch == 0 {
            return Err(Error::Config("ensemble.batch must be at least 1".into()));
        }
        Ok(())
    }

    pub fn split_plan(&self) -> SplitPlan {
        SplitPlan {
            holdout_months: self.split.holdout_months,
            ratio: self.split.ratio,
            repeats: self.split.repeats,
            seed: self.seed,
        }
    }

    /// Synthetic panels follow the global seed.
    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            seed: self.seed,
            ..self.synth.clone()
        }
    }

    /// sha256 of the canonical TOML with `out` cleared.
    pub fn digest(&self) -> Result<String> {
        let canon = RunConfig {
            out: PathBuf::new(),
            ..self.clone()
        };
        Ok(hex(&Sha256::digest(canon.to_toml()?.as_bytes())))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
