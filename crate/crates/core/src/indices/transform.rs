use serde::{Deserialize, Serialize};

use crate::data::{Series, YearMonth};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Slotting {
    Global,
    PerCalendarMonth,
}

impl Slotting {
    fn slots(self) -> usize {
        match self {
            Slotting::Global => 1,
            Slotting::PerCalendarMonth => 12,
        }
    }

    fn slot_of(self, m: YearMonth) -> usize {
        match self {
            Slotting::Global => 0,
            Slotting::PerCalendarMonth => m.slot(),
        }
    }
}

/// Inclusive month range used to fit extremes or distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitWindow {
    pub first: YearMonth,
    pub last: YearMonth,
}

impl FitWindow {
    pub fn contains(&self, m: YearMonth) -> bool {
        self.first <= m && m <= self.last
    }

    pub fn all() -> Self {
        Self {
            first: YearMonth { year: i32::MIN / 24, month: 1 },
            last: YearMonth { year: i32::MAX / 24, month: 12 },
        }
    }
}

/// Historical extremes per calendar slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeRangeParams {
    pub slotting: Slotting,
    pub reference_min: Vec<f64>,
    pub reference_max: Vec<f64>,
    pub fit_window: FitWindow,
}

fn slot_label(slotting: Slotting, slot: usize) -> String {
    match slotting {
        Slotting::Global => "global slot".to_string(),
        Slotting::PerCalendarMonth => format!("calendar month {:02}", slot + 1),
    }
}

impl RelativeRangeParams {
    /// Extremes over the observed values inside `window`.
    pub fn fit(series: &[Option<f64>], months: &[YearMonth], window: FitWindow, slotting: Slotting) -> Result<Self> {
        assert_eq!(series.len(), months.len());
        let k = slotting.slots();
        let mut lo = vec![f64::INFINITY; k];
        let mut hi = vec![f64::NEG_INFINITY; k];
        for (v, m) in series.iter().zip(months) {
            if let (Some(v), true) = (v, window.contains(*m)) {
                let s = slotting.slot_of(*m);
                lo[s] = lo[s].min(*v);
                hi[s] = hi[s].max(*v);
            }
        }
        for s in 0..k {
            if !lo[s].is_finite() {
                return Err(Error::Data(format!(
                    "no observations in fit window for {}",
                    slot_label(slotting, s)
                )));
            }
        }
        Ok(Self {
            slotting,
            reference_min: lo,
            reference_max: hi,
            fit_window: window,
        })
    }
}

/// `100 * (x - min) / (max - min)` with the slot's extremes. Values outside the
/// fit-window extremes land below 0 or above 100.
pub fn relative_range(series: &[Option<f64>], months: &[YearMonth], params: &RelativeRangeParams) -> Result<Series> {
    assert_eq!(series.len(), months.len());
    series
        .iter()
        .zip(months)
        .map(|(v, m)| {
            let Some(x) = v else { return Ok(None) };
            let s = params.slotting.slot_of(*m);
            let (lo, hi) = (params.reference_min[s], params.reference_max[s]);
            if hi <= lo {
                return Err(Error::DegenerateRange {
                    slot: slot_label(params.slotting, s),
                });
            }
            Ok(Some(100.0 * (x - lo) / (hi - lo)))
        })
        .collect()
}

/// Trailing mean over `window` months; missing until the window is full or
/// whenever it contains a missing value.
pub fn rolling_mean(series: &[Option<f64>], window: usize) -> Result<Series> {
    if window == 0 {
        return Err(Error::Config("rolling window must be at least 1".into()));
    }
    if window > series.len() {
        return Err(Error::Data(format!(
            "rolling window {window} exceeds series length {}",
            series.len()
        )));
    }
    Ok((0..series.len())
        .map(|t| {
            if t + 1 < window {
                return None;
            }
            let mut sum = 0.0;
            for v in &series[t + 1 - window..=t] {
                sum += (*v)?;
            }
            Some(sum / window as f64)
        })
        .collect())
}

/// Shifts the series `k` months forward in time: output at t is input at t - k.
pub fn lag(series: &[Option<f64>], k: usize) -> Series {
    (0..series.len())
        .map(|t| if t >= k { series[t - k] } else { None })
        .collect()
}
