use std::io::{Read, Write};

use super::{Column, RowKey, Series, TimeSeriesTable, YearMonth};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnDecl {
    pub name: String,
    pub required: bool,
}

/// Declared numeric columns. Header columns must all be declared.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Schema {
    pub columns: Vec<ColumnDecl>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn required(mut self, name: &str) -> Self {
        self.columns.push(ColumnDecl {
            name: name.to_string(),
            required: true,
        });
        self
    }

    pub fn optional(mut self, name: &str) -> Self {
        self.columns.push(ColumnDecl {
            name: name.to_string(),
            required: false,
        });
        self
    }

    /// Accepts any header; every column is numeric and optional.
    pub fn any(names: &[&str]) -> Self {
        names.iter().fold(Self::new(), |s, n| s.optional(n))
    }

    fn declares(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Linearly interpolate interior runs of at most two missing months.
    pub interpolate_short_gaps: bool,
}

const MAX_INTERPOLATED_RUN: usize = 2;

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("na") || c.eq_ignore_ascii_case("nan")
}

/// Parses `unit,date,<var>...` delimited text into a validated table.
pub fn load_table<R: Read>(source: R, schema: &Schema, opts: LoadOptions) -> Result<TimeSeriesTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header = reader.headers()?.clone();
    if header.len() < 2 || &header[0] != "unit" || &header[1] != "date" {
        return Err(Error::Data("header must start with `unit,date`".into()));
    }
    let names: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
    for n in &names {
        if !schema.declares(n) {
            return Err(Error::Data(format!("undeclared column {n}")));
        }
    }
    for decl in schema.columns.iter().filter(|c| c.required) {
        if !names.contains(&decl.name) {
            return Err(Error::MissingColumn(decl.name.clone()));
        }
    }

    let mut keys = Vec::new();
    let mut cells: Vec<Series> = vec![Vec::new(); names.len()];
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != names.len() + 2 {
            return Err(Error::Data(format!(
                "line {line}: expected {} fields, found {}",
                names.len() + 2,
                rec.len()
            )));
        }
        let month: YearMonth = rec[1].parse().map_err(|_| Error::BadDate {
            line,
            value: rec[1].to_string(),
        })?;
        keys.push(RowKey::new(&rec[0], month));
        for (j, name) in names.iter().enumerate() {
            let cell = &rec[j + 2];
            let v = if is_missing(cell) {
                None
            } else {
                let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                    line,
                    column: name.clone(),
                    value: cell.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(Error::NonNumeric {
                        line,
                        column: name.clone(),
                        value: cell.to_string(),
                    });
                }
                Some(v)
            };
            cells[j].push(v);
        }
    }

    let columns = names
        .into_iter()
        .zip(cells)
        .map(|(name, values)| Column { name, values })
        .collect();
    let table = TimeSeriesTable::new(keys, columns)?;
    resolve_missing(table, opts)
}

fn resolve_missing(table: TimeSeriesTable, opts: LoadOptions) -> Result<TimeSeriesTable> {
    let ranges: Vec<_> = table
        .unit_ranges()
        .into_iter()
        .map(|(u, r)| (u.to_string(), r))
        .collect();
    let mut out = table.clone();
    for col in &table.columns {
        let mut values = col.values.clone();
        for (unit, range) in &ranges {
            let seg = &mut values[range.clone()];
            let mut i = 0;
            while i < seg.len() {
                if seg[i].is_some() {
                    i += 1;
                    continue;
                }
                let start = i;
                while i < seg.len() && seg[i].is_none() {
                    i += 1;
                }
                let run = i - start;
                let fillable = opts.interpolate_short_gaps
                    && run <= MAX_INTERPOLATED_RUN
                    && start > 0
                    && i < seg.len();
                if !fillable {
                    return Err(Error::MissingValue {
                        column: col.name.clone(),
                        unit: unit.clone(),
                        month: table.keys[range.start + start].month,
                    });
                }
                let (a, b) = (seg[start - 1].unwrap(), seg[i].unwrap());
                for k in 0..run {
                    let f = (k + 1) as f64 / (run + 1) as f64;
                    seg[start + k] = Some(a + f * (b - a));
                }
            }
        }
        out = out.with_column(col.name.clone(), values)?;
    }
    Ok(out)
}

/// Writes the table in the same delimited format `load_table` reads.
/// Missing cells are written empty; numbers use the shortest round-trip form.
pub fn emit_table<W: Write>(table: &TimeSeriesTable, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["unit".to_string(), "date".to_string()];
    header.extend(table.columns.iter().map(|c| c.name.clone()));
    w.write_record(&header)?;
    for (i, k) in table.keys.iter().enumerate() {
        let mut rec = vec![k.unit.clone(), k.month.to_string()];
        rec.extend(
            table
                .columns
                .iter()
                .map(|c| c.values[i].map(|v| v.to_string()).unwrap_or_default()),
        );
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<table>", e))?;
    Ok(())
}
