use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::catalog::{Derivation, VariableCatalog};
use super::standardized::{fit_standardized_index, SpiFit};
use super::transform::{relative_range, rolling_mean, FitWindow, RelativeRangeParams, Slotting};
use crate::data::{Series, TimeSeriesTable, YearMonth};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndexConfig {
    pub slotting: Slotting,
    pub spi_per_calendar_month: bool,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self {
            slotting: Slotting::PerCalendarMonth,
            spi_per_calendar_month: true,
        }
    }
}

/// Fitted parameters keyed by variable name, then unit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VariableFits {
    pub relative_range: BTreeMap<String, BTreeMap<String, RelativeRangeParams>>,
    pub standardized: BTreeMap<String, BTreeMap<String, SpiFit>>,
}

impl VariableFits {
    /// Fit-window slots whose standardized values drift outside mean ±0.05 / sd 0.9..1.1.
    pub fn standardization_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (var, units) in &self.standardized {
            for (unit, fit) in units {
                for (slot, d) in fit.diagnostics.iter().enumerate() {
                    if !d.within_tolerance() {
                        out.push(format!(
                            "{var} unit {unit} slot {}: fit-window mean {:.3}, sd {:.3} (n = {})",
                            slot + 1,
                            d.mean,
                            d.sd,
                            d.n
                        ));
                    }
                }
            }
        }
        out
    }
}

struct UnitView<'a> {
    table: &'a TimeSeriesTable,
    range: std::ops::Range<usize>,
    months: Vec<YearMonth>,
}

impl UnitView<'_> {
    fn base(&self, name: &str) -> Result<Series> {
        Ok(self.table.require(name)?[self.range.clone()].to_vec())
    }
}

fn eval_unfitted(d: &Derivation, view: &UnitView) -> Result<Series> {
    match d {
        Derivation::Base(b) => view.base(b),
        Derivation::Difference(a, b) => {
            let (a, b) = (view.base(a)?, view.base(b)?);
            Ok(a.iter().zip(&b).map(|(x, y)| Some((*x)? - (*y)?)).collect())
        }
        Derivation::RollingMean(inner, w) => rolling_mean(&eval_unfitted(inner, view)?, *w),
        Derivation::RelativeRange(_) | Derivation::Standardized(..) => Err(Error::Config(format!(
            "fitted transform must be the outermost step: {d}"
        ))),
    }
}

fn check_inputs(table: &TimeSeriesTable, catalog: &VariableCatalog) -> Result<()> {
    for e in catalog.entries() {
        for c in e.derivation.inputs() {
            if !table.has_column(c) {
                return Err(Error::MissingColumn(format!("{c} (needed by {})", e.name)));
            }
        }
    }
    Ok(())
}

fn views<'a>(table: &'a TimeSeriesTable) -> Vec<(String, UnitView<'a>)> {
    table
        .unit_ranges()
        .into_iter()
        .map(|(u, range)| {
            let months = table.keys()[range.clone()].iter().map(|k| k.month).collect();
            (u.to_string(), UnitView { table, range, months })
        })
        .collect()
}

/// Fits every relative-range and standardized transform per unit on that
/// unit's fit window.
pub fn fit_variable_transforms(
    table: &TimeSeriesTable,
    catalog: &VariableCatalog,
    windows: &BTreeMap<String, FitWindow>,
    cfg: &IndexConfig,
) -> Result<VariableFits> {
    check_inputs(table, catalog)?;
    let mut fits = VariableFits::default();
    for (unit, view) in views(table) {
        let window = *windows
            .get(&unit)
            .ok_or_else(|| Error::Data(format!("no fit window for unit {unit}")))?;
        for e in catalog.entries() {
            let context = |err: Error| match err {
                Error::DegenerateRange { slot } => Error::DegenerateRange {
                    slot: format!("{} unit {unit} {slot}", e.name),
                },
                Error::DegenerateFit(m) => Error::DegenerateFit(format!("{} unit {unit}: {m}", e.name)),
                Error::Data(m) => Error::Data(format!("{} unit {unit}: {m}", e.name)),
                other => other,
            };
            match &e.derivation {
                Derivation::RelativeRange(inner) => {
                    let raw = eval_unfitted(inner, &view)?;
                    let p = RelativeRangeParams::fit(&raw, &view.months, window, cfg.slotting).map_err(context)?;
                    fits.relative_range.entry(e.name.clone()).or_default().insert(unit.clone(), p);
                }
                Derivation::Standardized(inner, dist) => {
                    let raw = eval_unfitted(inner, &view)?;
                    let (f, _) = fit_standardized_index(&raw, &view.months, *dist, window, cfg.spi_per_calendar_month)
                        .map_err(context)?;
                    fits.standardized.entry(e.name.clone()).or_default().insert(unit.clone(), f);
                }
                _ => {}
            }
        }
    }
    Ok(fits)
}

/// Appends one column per catalog entry, computed from the base columns with
/// the supplied fits.
pub fn build_variable_set(table: &TimeSeriesTable, catalog: &VariableCatalog, fits: &VariableFits) -> Result<TimeSeriesTable> {
    check_inputs(table, catalog)?;
    let unit_views = views(table);
    let mut out = table.clone();
    for e in catalog.entries() {
        let mut column: Series = Vec::with_capacity(table.n_rows());
        for (unit, view) in &unit_views {
            let missing_fit = || Error::Data(format!("no fitted parameters for {} unit {unit}", e.name));
            let values = match &e.derivation {
                Derivation::RelativeRange(inner) => {
                    let p = fits
                        .relative_range
                        .get(&e.name)
                        .and_then(|m| m.get(unit))
                        .ok_or_else(missing_fit)?;
                    relative_range(&eval_unfitted(inner, view)?, &view.months, p).map_err(|err| match err {
                        Error::DegenerateRange { slot } => Error::DegenerateRange {
                            slot: format!("{} unit {unit} {slot}", e.name),
                        },
                        other => other,
                    })?
                }
                Derivation::Standardized(inner, _) => {
                    let f = fits
                        .standardized
                        .get(&e.name)
                        .and_then(|m| m.get(unit))
                        .ok_or_else(missing_fit)?;
                    f.transform(&eval_unfitted(inner, view)?, &view.months)
                }
                d => eval_unfitted(d, view)?,
            };
            column.extend(values);
        }
        out = out.with_column(e.name.clone(), column)?;
    }
    Ok(out)
}

/// Fit window per unit: everything before `holdout_starts`.
pub fn in_sample_windows(
    table: &TimeSeriesTable,
    holdout_starts: &BTreeMap<String, YearMonth>,
) -> Result<BTreeMap<String, FitWindow>> {
    table
        .unit_ranges()
        .into_iter()
        .map(|(u, r)| {
            let start = *holdout_starts
                .get(u)
                .ok_or_else(|| Error::Data(format!("no holdout start for unit {u}")))?;
            let first = table.keys()[r.start].month;
            Ok((u.to_string(), FitWindow { first, last: start.add_months(-1) }))
        })
        .collect()
}
