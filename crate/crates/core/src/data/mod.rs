//! Unit-level monthly panels: the data carrier shared by every stage.

mod io;
mod split;
mod synth;

use std::collections::HashSet;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{emit_table, load_table, ColumnDecl, LoadOptions, Schema};
pub use split::{assign_folds, assign_train_validation, holdout_starts, split_in_out, Fold, SplitPlan};
pub use synth::{generate_synthetic, SynthConfig};

/// Calendar month. Ordered chronologically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct YearMonth {
    pub year: i32,
    /// 1..=12
    pub month: u8,
}

impl YearMonth {
    pub fn new(year: i32, month: u8) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::Data(format!("month {month} out of range")));
        }
        Ok(Self { year, month })
    }

    /// Months since year 0, used for arithmetic.
    pub fn ordinal(self) -> i64 {
        i64::from(self.year) * 12 + i64::from(self.month) - 1
    }

    pub fn from_ordinal(ord: i64) -> Self {
        let year = ord.div_euclid(12) as i32;
        let month = (ord.rem_euclid(12) + 1) as u8;
        Self { year, month }
    }

    pub fn add_months(self, k: i64) -> Self {
        Self::from_ordinal(self.ordinal() + k)
    }

    /// Zero-based calendar slot (January = 0).
    pub fn slot(self) -> usize {
        usize::from(self.month - 1)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::BadDate {
            line: 0,
            value: s.to_string(),
        };
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u8 = m.parse().map_err(|_| bad())?;
        YearMonth::new(year, month).map_err(|_| bad())
    }
}

impl TryFrom<String> for YearMonth {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<YearMonth> for String {
    fn from(v: YearMonth) -> String {
        v.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RowKey {
    pub unit: String,
    pub month: YearMonth,
}

impl RowKey {
    pub fn new(unit: impl Into<String>, month: YearMonth) -> Self {
        Self {
            unit: unit.into(),
            month,
        }
    }
}

impl fmt::Display for RowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.unit, self.month)
    }
}

/// A cell is `None` when missing.
pub type Series = Vec<Option<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Series,
}

/// Per-unit monthly panel. Rows are sorted by (unit, month), keys are unique
/// and every unit's months are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesTable {
    keys: Vec<RowKey>,
    columns: Vec<Column>,
}

impl TimeSeriesTable {
    /// Sorts rows and validates uniqueness and contiguity.
    pub fn new(keys: Vec<RowKey>, columns: Vec<Column>) -> Result<Self> {
        let mut names = HashSet::new();
        for c in &columns {
            if c.values.len() != keys.len() {
                return Err(Error::Data(format!(
                    "column {} has {} cells, expected {}",
                    c.name,
                    c.values.len(),
                    keys.len()
                )));
            }
            if !names.insert(c.name.as_str()) {
                return Err(Error::Data(format!("duplicate column {}", c.name)));
            }
        }

        let mut order: Vec<usize> = (0..keys.len()).collect();
        order.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
        let keys: Vec<RowKey> = order.iter().map(|&i| keys[i].clone()).collect();
        let columns = columns
            .into_iter()
            .map(|c| Column {
                name: c.name,
                values: order.iter().map(|&i| c.values[i]).collect(),
            })
            .collect();

        for w in keys.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if a == b {
                return Err(Error::DuplicateKey {
                    unit: a.unit.clone(),
                    month: a.month,
                });
            }
            if a.unit == b.unit && b.month.ordinal() != a.month.ordinal() + 1 {
                return Err(Error::CalendarGap {
                    unit: a.unit.clone(),
                    missing: a.month.add_months(1),
                    before: a.month,
                    after: b.month,
                });
            }
        }
        Ok(Self { keys, columns })
    }

    pub fn n_rows(&self) -> usize {
        self.keys.len()
    }

    pub fn keys(&self) -> &[RowKey] {
        &self.keys
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&Series> {
        self.columns.iter().find(|c| c.name == name).map(|c| &c.values)
    }

    pub fn require(&self, name: &str) -> Result<&Series> {
        self.column(name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    /// Units in sorted order.
    pub fn units(&self) -> Vec<&str> {
        self.unit_ranges().into_iter().map(|(u, _)| u).collect()
    }

    /// Contiguous row range of every unit.
    pub fn unit_ranges(&self) -> Vec<(&str, Range<usize>)> {
        let mut out: Vec<(&str, Range<usize>)> = Vec::new();
        for (i, k) in self.keys.iter().enumerate() {
            match out.last_mut() {
                Some((u, r)) if *u == k.unit => r.end = i + 1,
                _ => out.push((k.unit.as_str(), i..i + 1)),
            }
        }
        out
    }

    /// Appends (or replaces) a column.
    pub fn with_column(mut self, name: impl Into<String>, values: Series) -> Result<Self> {
        let name = name.into();
        if values.len() != self.keys.len() {
            return Err(Error::Data(format!(
                "column {name} has {} cells, expected {}",
                values.len(),
                self.keys.len()
            )));
        }
        match self.columns.iter_mut().find(|c| c.name == name) {
            Some(c) => c.values = values,
            None => self.columns.push(Column { name, values }),
        }
        Ok(self)
    }

    /// Keeps the rows whose key satisfies `keep`. Contiguity is re-validated.
    pub fn filter_rows(&self, keep: impl Fn(&RowKey) -> bool) -> Result<Self> {
        let idx: Vec<usize> = (0..self.keys.len()).filter(|&i| keep(&self.keys[i])).collect();
        let keys = idx.iter().map(|&i| self.keys[i].clone()).collect();
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                values: idx.iter().map(|&i| c.values[i]).collect(),
            })
            .collect();
        Self::new(keys, columns)
    }

    /// Row-wise union of two tables with identical column sets.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.column_names() != other.column_names() {
            return Err(Error::Data("column sets differ".into()));
        }
        let mut keys = self.keys.clone();
        keys.extend(other.keys.iter().cloned());
        let columns = self
            .columns
            .iter()
            .zip(&other.columns)
            .map(|(a, b)| Column {
                name: a.name.clone(),
                values: a.values.iter().chain(&b.values).copied().collect(),
            })
            .collect();
        Self::new(keys, columns)
    }

    /// Index of the row for `key`, if present.
    pub fn row_of(&self, key: &RowKey) -> Option<usize> {
        self.keys.binary_search(key).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ym(y: i32, m: u8) -> YearMonth {
        YearMonth::new(y, m).unwrap()
    }

    #[test]
    fn year_month_arithmetic() {
        assert_eq!(ym(2005, 12).add_months(1), ym(2006, 1));
        assert_eq!(ym(2006, 1).add_months(-1), ym(2005, 12));
        assert_eq!(ym(2001, 3).add_months(203), ym(2018, 2));
        assert_eq!("2005-03".parse::<YearMonth>().unwrap(), ym(2005, 3));
        assert!("2005-3".parse::<YearMonth>().is_err());
        assert!("2005-13".parse::<YearMonth>().is_err());
        assert_eq!(ym(2005, 3).to_string(), "2005-03");
    }

    #[test]
    fn table_sorts_and_detects_gaps() {
        let keys = vec![
            RowKey::new("b", ym(2001, 1)),
            RowKey::new("a", ym(2001, 2)),
            RowKey::new("a", ym(2001, 1)),
        ];
        let col = Column {
            name: "x".into(),
            values: vec![Some(3.0), Some(2.0), Some(1.0)],
        };
        let t = TimeSeriesTable::new(keys, vec![col]).unwrap();
        assert_eq!(t.column("x").unwrap(), &vec![Some(1.0), Some(2.0), Some(3.0)]);
        assert_eq!(t.units(), vec!["a", "b"]);

        let gap = TimeSeriesTable::new(
            vec![RowKey::new("a", ym(2001, 1)), RowKey::new("a", ym(2001, 3))],
            vec![],
        );
        assert!(matches!(gap, Err(Error::CalendarGap { .. })));
    }
}
