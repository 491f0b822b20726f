use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::catalog::{VariableCatalog, TARGET};
use crate::data::{RowKey, TimeSeriesTable, YearMonth};
use crate::error::{Error, Result};

/// Feature rows at month t paired with the target at t + lead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisedDataset {
    pub keys: Vec<RowKey>,
    pub target_months: Vec<YearMonth>,
    pub feature_names: Vec<String>,
    /// Row-major, `keys.len()` rows of `feature_names.len()` values.
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub target_name: String,
    pub lead: usize,
}

pub fn build_supervised(table: &TimeSeriesTable, catalog: &VariableCatalog, lead: usize) -> Result<SupervisedDataset> {
    build_supervised_columns(table, &catalog.names(), TARGET, lead)
}

/// Rows with every feature present at t and the target present at t + lead,
/// within the same unit.
pub fn build_supervised_columns(
    table: &TimeSeriesTable,
    feature_names: &[&str],
    target: &str,
    lead: usize,
) -> Result<SupervisedDataset> {
    if lead == 0 {
        return Err(Error::Config("lead must be at least 1".into()));
    }
    let cols = feature_names
        .iter()
        .map(|n| table.require(n))
        .collect::<Result<Vec<_>>>()?;
    let y = table.require(target)?;
    let mut ds = SupervisedDataset {
        keys: Vec::new(),
        target_months: Vec::new(),
        feature_names: feature_names.iter().map(|s| s.to_string()).collect(),
        features: Vec::new(),
        targets: Vec::new(),
        target_name: target.to_string(),
        lead,
    };
    for (_, r) in table.unit_ranges() {
        for i in r.start..r.end.saturating_sub(lead) {
            let Some(target_value) = y[i + lead] else { continue };
            let row: Option<Vec<f64>> = cols.iter().map(|c| c[i]).collect();
            let Some(row) = row else { continue };
            let key = table.keys()[i].clone();
            ds.target_months.push(table.keys()[i + lead].month);
            ds.keys.push(key);
            ds.features.push(row);
            ds.targets.push(target_value);
        }
    }
    if ds.keys.is_empty() {
        return Err(Error::Data("supervised dataset is empty after filtering".into()));
    }
    Ok(ds)
}

impl SupervisedDataset {
    pub fn n_rows(&self) -> usize {
        self.keys.len()
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.feature_index(name)?;
        Ok(self.features.iter().map(|r| r[j]).collect())
    }

    /// Row-major design matrix restricted to `names`, in that order.
    pub fn design(&self, names: &[&str]) -> Result<Vec<Vec<f64>>> {
        let idx = names.iter().map(|n| self.feature_index(n)).collect::<Result<Vec<_>>>()?;
        Ok(self.features.iter().map(|r| idx.iter().map(|&j| r[j]).collect()).collect())
    }

    pub fn select_rows(&self, keep: impl Fn(&RowKey, YearMonth) -> bool) -> Self {
        let mut out = Self {
            keys: Vec::new(),
            target_months: Vec::new(),
            feature_names: self.feature_names.clone(),
            features: Vec::new(),
            targets: Vec::new(),
            target_name: self.target_name.clone(),
            lead: self.lead,
        };
        for i in 0..self.n_rows() {
            if keep(&self.keys[i], self.target_months[i]) {
                out.keys.push(self.keys[i].clone());
                out.target_months.push(self.target_months[i]);
                out.features.push(self.features[i].clone());
                out.targets.push(self.targets[i]);
            }
        }
        out
    }

    /// In-sample rows have their target month before the unit's holdout start.
    pub fn split_by_target(&self, holdout_starts: &BTreeMap<String, YearMonth>) -> Result<(Self, Self)> {
        for k in &self.keys {
            if !holdout_starts.contains_key(&k.unit) {
                return Err(Error::Data(format!("no holdout start for unit {}", k.unit)));
            }
        }
        let inside = self.select_rows(|k, tm| tm < holdout_starts[&k.unit]);
        let outside = self.select_rows(|k, tm| tm >= holdout_starts[&k.unit]);
        Ok((inside, outside))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Column;
    use crate::indices::transform::rolling_mean;

    fn table(months: usize) -> TimeSeriesTable {
        let start = YearMonth::new(2005, 1).unwrap();
        let keys: Vec<RowKey> = (0..months).map(|i| RowKey::new("u1", start.add_months(i as i64))).collect();
        let x: Vec<Option<f64>> = (0..months).map(|i| Some(i as f64)).collect();
        let x3 = rolling_mean(&x, 3).unwrap();
        TimeSeriesTable::new(
            keys,
            vec![
                Column { name: "X".into(), values: x.clone() },
                Column { name: "X3".into(), values: x3 },
                Column { name: "Y".into(), values: x.iter().map(|v| v.map(|a| 10.0 * a)).collect() },
            ],
        )
        .unwrap()
    }

    #[test]
    fn off_by_lead_row_count() {
        let ds = build_supervised_columns(&table(40), &["X"], "Y", 1).unwrap();
        assert_eq!(ds.n_rows(), 39);
        for (k, tm) in ds.keys.iter().zip(&ds.target_months) {
            assert_eq!(k.month.add_months(1), *tm);
        }
    }

    #[test]
    fn target_is_next_month() {
        let ds = build_supervised_columns(&table(40), &["X"], "Y", 1).unwrap();
        let i = ds.keys.iter().position(|k| k.month == YearMonth::new(2005, 3).unwrap()).unwrap();
        assert_eq!(ds.target_months[i], YearMonth::new(2005, 4).unwrap());
        assert_eq!(ds.targets[i], 30.0);
    }

    #[test]
    fn missing_aggregates_are_excluded() {
        let ds = build_supervised_columns(&table(40), &["X", "X3"], "Y", 1).unwrap();
        assert_eq!(ds.n_rows(), 37);
        assert_eq!(ds.keys[0].month, YearMonth::new(2005, 3).unwrap());
    }

    #[test]
    fn empty_result_and_zero_lead() {
        assert!(build_supervised_columns(&table(3), &["X3"], "Y", 1).is_err());
        assert!(build_supervised_columns(&table(10), &["X"], "Y", 0).is_err());
    }
}
