use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{RowKey, TimeSeriesTable, YearMonth};
use crate::error::{Error, Result};
use crate::seed::StableHasher;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    /// Trailing months per unit reserved as out-of-sample.
    pub holdout_months: usize,
    /// In-sample training fraction.
    pub ratio: f64,
    /// Bagging repeats (K).
    pub repeats: usize,
    pub seed: u64,
}

impl Default for SplitPlan {
    fn default() -> Self {
        Self {
            holdout_months: 24,
            ratio: 0.7,
            repeats: 5,
            seed: 0,
        }
    }
}

impl SplitPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::Config(format!("split ratio {} not in (0, 1)", self.ratio)));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.holdout_months == 0 {
            return Err(Error::Config("holdout_months must be at least 1".into()));
        }
        Ok(())
    }

    pub fn validate_against(&self, table: &TimeSeriesTable) -> Result<()> {
        self.validate()?;
        for (unit, r) in table.unit_ranges() {
            if self.holdout_months >= r.len() {
                return Err(Error::Data(format!(
                    "holdout of {} months leaves nothing in-sample for unit {unit} ({} months)",
                    self.holdout_months,
                    r.len()
                )));
            }
        }
        Ok(())
    }

    /// Number of TRAIN rows among `n`.
    pub fn train_count(&self, n: usize) -> usize {
        // the epsilon keeps 0.7 * 70 from flooring to 48
        ((self.ratio * n as f64) + 1e-9).floor() as usize
    }
}

/// First out-of-sample month of every unit.
pub fn holdout_starts(table: &TimeSeriesTable, plan: &SplitPlan) -> Result<BTreeMap<String, YearMonth>> {
    plan.validate_against(table)?;
    Ok(table
        .unit_ranges()
        .into_iter()
        .map(|(u, r)| (u.to_string(), table.keys()[r.end - plan.holdout_months].month))
        .collect())
}

/// Splits off the trailing `holdout_months` of every unit.
pub fn split_in_out(table: &TimeSeriesTable, plan: &SplitPlan) -> Result<(TimeSeriesTable, TimeSeriesTable)> {
    let starts = holdout_starts(table, plan)?;
    let is_out = |k: &RowKey| k.month >= starts[&k.unit];
    let inside = table.filter_rows(|k| !is_out(k))?;
    let outside = table.filter_rows(is_out)?;
    Ok((inside, outside))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Fold {
    Train,
    Validation,
}

fn row_hash(plan: &SplitPlan, repeat: usize, key: &RowKey) -> u64 {
    StableHasher::new()
        .u64(plan.seed)
        .str("fold")
        .u64(repeat as u64)
        .str(&key.unit)
        .u64(key.month.ordinal() as u64)
        .finish()
}

/// TRAIN/VALIDATION label per key, aligned with `keys`.
///
/// Labels depend only on (seed, repeat, key): rows are ranked by a keyed hash
/// and the first `floor(ratio * n)` become TRAIN, so the result does not
/// depend on the order of `keys`.
pub fn assign_folds(keys: &[RowKey], plan: &SplitPlan, repeat: usize) -> Result<Vec<Fold>> {
    plan.validate()?;
    if repeat >= plan.repeats {
        return Err(Error::Config(format!(
            "repeat {repeat} out of range (repeats = {})",
            plan.repeats
        )));
    }
    let mut ranked: Vec<(u64, &RowKey, usize)> = keys
        .iter()
        .enumerate()
        .map(|(i, k)| (row_hash(plan, repeat, k), k, i))
        .collect();
    ranked.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    let n_train = plan.train_count(keys.len());
    let mut folds = vec![Fold::Validation; keys.len()];
    for &(_, _, i) in ranked.iter().take(n_train) {
        folds[i] = Fold::Train;
    }
    Ok(folds)
}

pub fn assign_train_validation(
    in_sample: &TimeSeriesTable,
    plan: &SplitPlan,
    repeat: usize,
) -> Result<BTreeMap<RowKey, Fold>> {
    let folds = assign_folds(in_sample.keys(), plan, repeat)?;
    Ok(in_sample.keys().iter().cloned().zip(folds).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Column;

    fn panel(units: usize, months: usize) -> TimeSeriesTable {
        let start = YearMonth::new(2001, 3).unwrap();
        let mut keys = Vec::new();
        let mut vals = Vec::new();
        for u in 0..units {
            for m in 0..months {
                keys.push(RowKey::new(format!("u{}", u + 1), start.add_months(m as i64)));
                vals.push(Some((u * 1000 + m) as f64));
            }
        }
        TimeSeriesTable::new(keys, vec![Column { name: "x".into(), values: vals }]).unwrap()
    }

    #[test]
    fn four_units_holdout_24_gives_96_rows() {
        let t = panel(4, 204);
        let (i, o) = split_in_out(&t, &SplitPlan::default()).unwrap();
        assert_eq!(o.n_rows(), 96);
        assert_eq!(i.n_rows(), 4 * 180);
    }

    #[test]
    fn holdout_equal_to_length_is_rejected() {
        let t = panel(1, 36);
        let plan = SplitPlan {
            holdout_months: 36,
            ..SplitPlan::default()
        };
        assert!(split_in_out(&t, &plan).is_err());
    }

    #[test]
    fn single_unit_split_identity() {
        let t = panel(1, 36);
        let plan = SplitPlan {
            holdout_months: 12,
            ..SplitPlan::default()
        };
        let (i, o) = split_in_out(&t, &plan).unwrap();
        let iv: Vec<f64> = i.column("x").unwrap().iter().map(|v| v.unwrap()).collect();
        let ov: Vec<f64> = o.column("x").unwrap().iter().map(|v| v.unwrap()).collect();
        assert_eq!(iv, (0..24).map(f64::from).collect::<Vec<_>>());
        assert_eq!(ov, (24..36).map(f64::from).collect::<Vec<_>>());
        assert_eq!(i.concat(&o).unwrap(), t);
    }

    #[test]
    fn ten_rows_gives_seven_train() {
        let t = panel(1, 10);
        let plan = SplitPlan::default();
        let m = assign_train_validation(&t, &plan, 0).unwrap();
        assert_eq!(m.values().filter(|f| **f == Fold::Train).count(), 7);
        assert_eq!(m, assign_train_validation(&t, &plan, 0).unwrap());
        assert_eq!(plan.train_count(70), 49);
    }

    #[test]
    fn seeds_produce_different_assignments() {
        let t = panel(1, 100);
        for s in 0..100u64 {
            let a = SplitPlan { seed: 2 * s + 1, ..SplitPlan::default() };
            let b = SplitPlan { seed: 2 * s + 2, ..SplitPlan::default() };
            let fa = assign_folds(t.keys(), &a, 0).unwrap();
            let fb = assign_folds(t.keys(), &b, 0).unwrap();
            assert_ne!(fa, fb, "seed pair {} / {}", a.seed, b.seed);
        }
    }

    #[test]
    fn repeats_differ_and_out_of_range_repeat_rejected() {
        let t = panel(2, 50);
        let plan = SplitPlan::default();
        let r0 = assign_folds(t.keys(), &plan, 0).unwrap();
        let r1 = assign_folds(t.keys(), &plan, 1).unwrap();
        assert_ne!(r0, r1);
        assert!(assign_folds(t.keys(), &plan, plan.repeats).is_err());
    }

    #[test]
    fn assignment_ignores_physical_order() {
        let t = panel(3, 40);
        let plan = SplitPlan { seed: 9, ..SplitPlan::default() };
        let forward = assign_folds(t.keys(), &plan, 2).unwrap();
        let mut rev: Vec<RowKey> = t.keys().to_vec();
        rev.reverse();
        let backward = assign_folds(&rev, &plan, 2).unwrap();
        let n = forward.len();
        for i in 0..n {
            assert_eq!(forward[i], backward[n - 1 - i]);
        }
    }
}
