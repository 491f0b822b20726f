use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::bagged::{BaggedModel, Technique};
use crate::data::{RowKey, YearMonth};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "vcistack-bagged-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: BaggedModel,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

pub fn model_file_name(formula_id: &str, technique: Technique) -> String {
    format!("{formula_id}.{technique}.model")
}

pub fn save_model(dir: &Path, model: &BaggedModel) -> Result<PathBuf> {
    let path = dir.join(model_file_name(&model.formula_id, model.technique));
    let file = ModelFile {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        model: model.clone(),
    };
    let text = toml::to_string(&file).map_err(|e| Error::Data(format!("serialising {}: {e}", path.display())))?;
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(path)
}

pub fn load_model(path: &Path) -> Result<BaggedModel> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let file: ModelFile =
        toml::from_str(&text).map_err(|e| Error::Data(format!("{}: not a model file: {e}", path.display())))?;
    if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
        return Err(Error::Data(format!(
            "{}: unsupported model format {} v{}",
            path.display(),
            file.format,
            file.version
        )));
    }
    Ok(file.model)
}

/// Bagged models plus the in-sample row keys their out-of-fold predictions
/// refer to.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelRegistry {
    pub keys: Vec<RowKey>,
    pub models: Vec<BaggedModel>,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexRow {
    formula_id: String,
    technique: Technique,
    n_predictors: usize,
    train_r2: f64,
    val_r2: f64,
    overfit_index: f64,
    formula: String,
}

impl ModelRegistry {
    pub fn get(&self, formula_id: &str, technique: Technique) -> Option<&BaggedModel> {
        self.models
            .iter()
            .find(|m| m.formula_id == formula_id && m.technique == technique)
    }

    pub fn by_key(&self) -> BTreeMap<String, &BaggedModel> {
        self.models.iter().map(|m| (m.key(), m)).collect()
    }

    /// Writes one model file per bagged model, `index.csv` and `oof.csv`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        for m in &self.models {
            save_model(dir, m)?;
        }
        let index = dir.join("index.csv");
        let mut w = csv::Writer::from_path(&index)?;
        for m in &self.models {
            w.serialize(IndexRow {
                formula_id: m.formula_id.clone(),
                technique: m.technique,
                n_predictors: m.predictors.len(),
                train_r2: m.train_r2,
                val_r2: m.val_r2,
                overfit_index: m.overfit_index,
                formula: m.formula.clone(),
            })?;
        }
        w.flush().map_err(io_err(&index))?;
        let oof = dir.join("oof.csv");
        let mut w = csv::Writer::from_path(&oof)?;
        let mut header = vec!["unit".to_string(), "month".to_string()];
        header.extend(self.models.iter().map(BaggedModel::key));
        w.write_record(&header)?;
        for (i, k) in self.keys.iter().enumerate() {
            let mut rec = vec![k.unit.clone(), k.month.to_string()];
            for m in &self.models {
                if m.oof.len() != self.keys.len() {
                    return Err(Error::Data(format!("{}: out-of-fold vector does not match the row keys", m.key())));
                }
                rec.push(m.oof[i].map(|v| v.to_string()).unwrap_or_default());
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(io_err(&oof))?;
        Ok(())
    }

    /// Loads the models listed in `index.csv` and reattaches `oof.csv`.
    pub fn load(dir: &Path) -> Result<Self> {
        let index = dir.join("index.csv");
        let mut r = csv::Reader::from_path(&index).map_err(|e| Error::Data(format!("{}: {e}", index.display())))?;
        let mut models = Vec::new();
        for row in r.deserialize::<IndexRow>() {
            let row = row?;
            models.push(load_model(&dir.join(model_file_name(&row.formula_id, row.technique)))?);
        }
        let oof = dir.join("oof.csv");
        let mut r = csv::Reader::from_path(&oof).map_err(|e| Error::Data(format!("{}: {e}", oof.display())))?;
        let header = r.headers()?.clone();
        let cols: Vec<usize> = models
            .iter()
            .map(|m| {
                header
                    .iter()
                    .position(|h| h == m.key())
                    .ok_or_else(|| Error::MissingColumn(format!("{} in {}", m.key(), oof.display())))
            })
            .collect::<Result<_>>()?;
        for m in &mut models {
            m.oof.clear();
        }
        let mut keys = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let month: YearMonth = rec[1].parse().map_err(|_| Error::BadDate {
                line: line + 2,
                value: rec[1].to_string(),
            })?;
            keys.push(RowKey::new(&rec[0], month));
            for (m, &c) in models.iter_mut().zip(&cols) {
                let v = match &rec[c] {
                    "" => None,
                    s => Some(s.parse::<f64>().map_err(|_| Error::NonNumeric {
                        line: line + 2,
                        column: m.key(),
                        value: s.to_string(),
                    })?),
                };
                m.oof.push(v);
            }
        }
        Ok(Self { keys, models })
    }
}
