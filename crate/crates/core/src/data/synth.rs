//! Seeded synthetic panels shaped like county-level monthly aggregates.
//!
//! Rainfall follows a bimodal (MAM/OND) climatology modulated by a persistent
//! wetness anomaly. Vegetation responds to the previous month's rainfall
//! anomaly through a lag-1 autoregressive state, so NDVI trails precipitation.
//! Land-surface temperature runs in anti-phase with the wet seasons.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use super::{Column, RowKey, TimeSeriesTable, YearMonth};
use crate::error::{Error, Result};
use crate::indices::base;
use crate::seed::{derive_seed, rng};

pub const MIN_SYNTH_MONTHS: usize = 48;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub units: usize,
    pub months: usize,
    pub seed: u64,
    pub start: YearMonth,
    /// Gamma shape of the multiplicative rainfall noise (higher = less noisy).
    pub rain_shape: f64,
    /// Innovation sd of the vegetation state.
    pub veg_noise: f64,
    /// Observation noise on monthly NDVI.
    pub ndvi_noise: f64,
    /// Observation noise on LST (K).
    pub lst_noise: f64,
    /// Response of the vegetation state to last month's rainfall anomaly.
    pub coupling: f64,
    /// Log-normal sd of the second rainfall source relative to the first.
    pub alt_source_noise: f64,
    pub alt_source: bool,
    pub dekadal: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            units: 4,
            months: 204,
            seed: 0,
            start: YearMonth { year: 2001, month: 3 },
            rain_shape: 4.0,
            veg_noise: 0.25,
            ndvi_noise: 0.004,
            lst_noise: 0.6,
            coupling: 0.7,
            alt_source_noise: 0.45,
            alt_source: true,
            dekadal: true,
        }
    }
}

fn circular_distance(m: u8, centre: f64) -> f64 {
    let d = (f64::from(m) - centre).abs();
    d.min(12.0 - d)
}

/// Relative rainfall climatology with peaks in April and November.
fn seasonal(m: u8) -> f64 {
    let long = (-circular_distance(m, 4.0).powi(2) / 1.5).exp();
    let short = (-circular_distance(m, 11.0).powi(2) / 1.5).exp();
    0.08 + long + 0.8 * short
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd.max(0.0)).expect("sd is finite and non-negative")
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<TimeSeriesTable> {
    if cfg.months < MIN_SYNTH_MONTHS {
        return Err(Error::Config(format!(
            "synthetic series needs at least {MIN_SYNTH_MONTHS} months, got {}",
            cfg.months
        )));
    }
    if cfg.units == 0 {
        return Err(Error::Config("synthetic panel needs at least one unit".into()));
    }
    if !(cfg.rain_shape > 0.0) {
        return Err(Error::Config("rain_shape must be positive".into()));
    }

    let n = cfg.units * cfg.months;
    let mut keys = Vec::with_capacity(n);
    let mut ndvi = Vec::with_capacity(n);
    let mut dekad = Vec::with_capacity(n);
    let mut rfe = Vec::with_capacity(n);
    let mut alt = Vec::with_capacity(n);
    let mut lst = Vec::with_capacity(n);
    let mut evt = Vec::with_capacity(n);
    let mut pet = Vec::with_capacity(n);

    let rain_noise = Gamma::new(cfg.rain_shape, 1.0 / cfg.rain_shape)
        .map_err(|e| Error::Config(format!("rain noise: {e}")))?;
    let max_season = (1..=12).map(seasonal).fold(f64::MIN, f64::max);

    for u in 0..cfg.units {
        let name = format!("u{}", u + 1);
        let mut r = rng(derive_seed(cfg.seed, "synth", &name, 0));
        let level: f64 = 30.0 + 25.0 * r.random::<f64>();
        let ndvi_base: f64 = 0.18 + 0.06 * r.random::<f64>();
        let alt_bias: f64 = 0.85 + 0.3 * r.random::<f64>();

        let phi_w = 0.8;
        let sd_w = 0.35;
        let mut wet: f64 = 0.0;
        let mut veg: f64 = 0.0;
        let mut prev_anomaly = 0.0;
        let mut unit_ndvi = Vec::with_capacity(cfg.months);

        for t in 0..cfg.months {
            let month = cfg.start.add_months(t as i64);
            keys.push(RowKey::new(&name, month));

            wet = phi_w * wet + normal(sd_w).sample(&mut r);
            let clim = level * seasonal(month.month);
            let mut rain = clim * wet.exp() * rain_noise.sample(&mut r);
            if seasonal(month.month) < 0.3 && r.random::<f64>() < 0.15 {
                rain = 0.0;
            }
            let anomaly = ((rain + 5.0) / (clim + 5.0)).ln();

            veg = 0.75 * veg + cfg.coupling * prev_anomaly + normal(cfg.veg_noise).sample(&mut r);
            prev_anomaly = anomaly;

            // canopy greens up one month after the rain climatology
            let lagged = seasonal(month.add_months(-1).month) / max_season;
            let nd = (ndvi_base + 0.16 * lagged + 0.05 * veg + normal(cfg.ndvi_noise).sample(&mut r))
                .clamp(0.03, 0.95);
            unit_ndvi.push(nd);

            let season = seasonal(month.month) / max_season;
            let temp = 298.0 + 7.0 * (1.0 - season) - 2.0 * veg + normal(cfg.lst_noise).sample(&mut r);
            let potential = 120.0 + 3.0 * (temp - 298.0) + normal(4.0).sample(&mut r);
            let actual = (8.0 + 0.15 * rain + 80.0 * (nd - 0.2) + normal(2.5).sample(&mut r)).max(0.0);

            rfe.push(Some(rain));
            alt.push(Some(
                rain * alt_bias * normal(cfg.alt_source_noise).sample(&mut r).exp(),
            ));
            lst.push(Some(temp));
            pet.push(Some(potential));
            evt.push(Some(actual));
        }

        // last-dekad NDVI sits two thirds of the way into the next month's trend
        let mut r_dekad = rng(derive_seed(cfg.seed, "synth-dekad", &name, 0));
        for t in 0..cfg.months {
            let next = unit_ndvi.get(t + 1).copied().unwrap_or(unit_ndvi[t]);
            let d = unit_ndvi[t] + 0.35 * (next - unit_ndvi[t])
                + normal(cfg.ndvi_noise).sample(&mut r_dekad);
            dekad.push(Some(d.clamp(0.03, 0.95)));
            ndvi.push(Some(unit_ndvi[t]));
        }
    }

    let mut columns = vec![Column { name: base::NDVI.into(), values: ndvi }];
    if cfg.dekadal {
        columns.push(Column { name: base::NDVI_DEKAD.into(), values: dekad });
    }
    columns.push(Column { name: base::RFE.into(), values: rfe });
    if cfg.alt_source {
        columns.push(Column { name: base::RFE_ALT.into(), values: alt });
    }
    columns.push(Column { name: base::LST.into(), values: lst });
    columns.push(Column { name: base::EVT.into(), values: evt });
    columns.push(Column { name: base::PET.into(), values: pet });
    TimeSeriesTable::new(keys, columns)
}
