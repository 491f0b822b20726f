use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma};
use statrs::function::gamma::digamma;

use super::catalog::StdDistribution;
use super::transform::FitWindow;
use crate::data::{Series, YearMonth};
use crate::error::{Error, Result};
use crate::stats::{mean, norm_ppf, variance};

pub const Z_CLAMP: f64 = 3.5;
pub const MIN_FIT_OBS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlotParams {
    Gamma { shape: f64, scale: f64, zero_prob: f64 },
    /// Log-logistic in its L-moment (generalized logistic) form: `shape = -1/β`
    /// of the three-parameter log-logistic, `location` its median.
    LogLogistic { location: f64, scale: f64, shape: f64 },
}

impl SlotParams {
    /// Non-exceedance probability under the fitted model. Zeros of the SPI
    /// mixture sit at the centre of the zero mass, q/2.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            SlotParams::Gamma { shape, scale, zero_prob } => {
                if x <= 0.0 {
                    zero_prob / 2.0
                } else {
                    let g = Gamma::new(shape, 1.0 / scale).expect("validated at fit time");
                    zero_prob + (1.0 - zero_prob) * g.cdf(x)
                }
            }
            SlotParams::LogLogistic { location, scale, shape } => {
                let y = if shape.abs() < 1e-9 {
                    (x - location) / scale
                } else {
                    let arg = 1.0 - shape * (x - location) / scale;
                    if arg <= 0.0 {
                        return if shape < 0.0 { 0.0 } else { 1.0 };
                    }
                    -arg.ln() / shape
                };
                1.0 / (1.0 + (-y).exp())
            }
        }
    }

    pub fn z(&self, x: f64) -> f64 {
        let p = self.cdf(x);
        if p <= 0.0 {
            return -Z_CLAMP;
        }
        if p >= 1.0 {
            return Z_CLAMP;
        }
        norm_ppf(p).clamp(-Z_CLAMP, Z_CLAMP)
    }
}

/// Fit-window summary of the transformed values in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotDiagnostic {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

impl SlotDiagnostic {
    pub fn within_tolerance(&self) -> bool {
        self.mean.abs() <= 0.05 && (0.9..=1.1).contains(&self.sd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiFit {
    pub distribution: StdDistribution,
    pub per_calendar_month: bool,
    /// One entry, or twelve indexed by calendar month.
    pub params: Vec<SlotParams>,
    pub diagnostics: Vec<SlotDiagnostic>,
    pub fit_window: FitWindow,
}

impl SpiFit {
    fn slot(&self, m: YearMonth) -> usize {
        if self.per_calendar_month {
            m.slot()
        } else {
            0
        }
    }

    pub fn transform(&self, series: &[Option<f64>], months: &[YearMonth]) -> Series {
        assert_eq!(series.len(), months.len());
        series
            .iter()
            .zip(months)
            .map(|(v, m)| v.map(|x| self.params[self.slot(*m)].z(x)))
            .collect()
    }
}

/// Maximum-likelihood gamma fit on strictly positive values.
pub fn fit_gamma(pos: &[f64]) -> Result<(f64, f64)> {
    let m = mean(pos);
    let a = m.ln() - pos.iter().map(|v| v.ln()).sum::<f64>() / pos.len() as f64;
    if !(a > 1e-12) || !a.is_finite() {
        return Err(Error::DegenerateFit("gamma fit on constant values".into()));
    }
    // Thom's approximation as the starting bracket, then solve ln k - psi(k) = A
    let thom = (1.0 + (1.0 + 4.0 * a / 3.0).sqrt()) / (4.0 * a);
    let f = |k: f64| k.ln() - digamma(k) - a;
    let (mut lo, mut hi) = (thom / 4.0, thom * 4.0);
    while f(lo) < 0.0 {
        lo /= 2.0;
    }
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * hi {
            break;
        }
    }
    let shape = 0.5 * (lo + hi);
    let scale = m / shape;
    if !(shape.is_finite() && scale.is_finite() && shape > 0.0 && scale > 0.0) {
        return Err(Error::DegenerateFit("gamma fit produced invalid parameters".into()));
    }
    Ok((shape, scale))
}

/// Unbiased probability-weighted moments w_s = E[x (1 - F)^s], s = 0, 1, 2.
pub fn pwm_alpha(values: &[f64]) -> [f64; 3] {
    let mut x = values.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut w = [0.0; 3];
    for (i, v) in x.iter().enumerate() {
        let j = (i + 1) as f64;
        w[0] += v;
        w[1] += v * (n - j) / (n - 1.0);
        w[2] += v * (n - j) * (n - j - 1.0) / ((n - 1.0) * (n - 2.0));
    }
    w.map(|s| s / n)
}

/// Three-parameter log-logistic fit by PWMs, returned as (location, scale,
/// shape) of the generalized logistic. With w the PWMs, the log-logistic
/// shape is β = (2w1 - w0) / (6w1 - w0 - 6w2) = 1/τ3, so shape = -τ3 here;
/// the L-moment form stays defined for symmetric and negatively skewed data
/// where β would be infinite or negative.
pub fn fit_log_logistic(values: &[f64]) -> Result<(f64, f64, f64)> {
    let [w0, w1, w2] = pwm_alpha(values);
    let l1 = w0;
    let l2 = w0 - 2.0 * w1;
    let l3 = w0 - 6.0 * w1 + 6.0 * w2;
    if !(l2 > 0.0) {
        return Err(Error::DegenerateFit("log-logistic PWM fit diverged (non-positive L-scale)".into()));
    }
    let k = -l3 / l2;
    if !(k.is_finite() && k.abs() < 1.0) {
        return Err(Error::DegenerateFit(format!("log-logistic PWM fit diverged (L-skewness {})", -k)));
    }
    let (scale, location) = if k.abs() < 1e-9 {
        (l2, l1)
    } else {
        let kpi = k * std::f64::consts::PI;
        let scale = l2 * kpi.sin() / kpi;
        (scale, l1 - scale * (1.0 / k - std::f64::consts::PI / kpi.sin()))
    };
    if !(scale.is_finite() && scale > 0.0 && location.is_finite()) {
        return Err(Error::DegenerateFit(format!("log-logistic PWM fit diverged (scale {scale})")));
    }
    Ok((location, scale, k))
}

fn fit_slot(values: &[f64], distribution: StdDistribution, label: &str) -> Result<SlotParams> {
    if values.len() < MIN_FIT_OBS {
        return Err(Error::Data(format!(
            "{label}: {} observations in fit window, need at least {MIN_FIT_OBS}",
            values.len()
        )));
    }
    if distribution == StdDistribution::Gamma && values.iter().all(|v| *v <= 0.0) {
        return Err(Error::DegenerateFit(format!("{label}: all-zero month")));
    }
    if variance(values) <= 0.0 {
        return Err(Error::DegenerateFit(format!("{label}: constant values")));
    }
    let with_label = |e: Error| match e {
        Error::DegenerateFit(m) => Error::DegenerateFit(format!("{label}: {m}")),
        other => other,
    };
    match distribution {
        StdDistribution::Gamma => {
            let pos: Vec<f64> = values.iter().copied().filter(|v| *v > 0.0).collect();
            if pos.is_empty() {
                return Err(Error::DegenerateFit(format!("{label}: all-zero month")));
            }
            if pos.len() < 2 {
                return Err(Error::DegenerateFit(format!("{label}: fewer than two positive values")));
            }
            let (shape, scale) = fit_gamma(&pos).map_err(with_label)?;
            let zero_prob = (values.len() - pos.len()) as f64 / values.len() as f64;
            Ok(SlotParams::Gamma { shape, scale, zero_prob })
        }
        StdDistribution::LogLogistic => {
            let (location, scale, shape) = fit_log_logistic(values).map_err(with_label)?;
            Ok(SlotParams::LogLogistic { location, scale, shape })
        }
    }
}

/// Fits the distribution on the observed values inside `window` and maps the
/// whole series through `Φ⁻¹(H(x))`, clamped to ±3.5.
pub fn fit_standardized_index(
    series: &[Option<f64>],
    months: &[YearMonth],
    distribution: StdDistribution,
    window: FitWindow,
    per_calendar_month: bool,
) -> Result<(SpiFit, Series)> {
    assert_eq!(series.len(), months.len());
    let k = if per_calendar_month { 12 } else { 1 };
    let slot = |m: YearMonth| if per_calendar_month { m.slot() } else { 0 };
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); k];
    for (v, m) in series.iter().zip(months) {
        if let (Some(v), true) = (v, window.contains(*m)) {
            buckets[slot(*m)].push(*v);
        }
    }
    let params = buckets
        .iter()
        .enumerate()
        .map(|(s, vals)| {
            let label = if per_calendar_month {
                format!("calendar month {:02}", s + 1)
            } else {
                "global slot".to_string()
            };
            fit_slot(vals, distribution, &label)
        })
        .collect::<Result<Vec<_>>>()?;
    let diagnostics = buckets
        .iter()
        .zip(&params)
        .map(|(vals, p)| {
            let z: Vec<f64> = vals.iter().map(|x| p.z(*x)).collect();
            SlotDiagnostic {
                n: z.len(),
                mean: mean(&z),
                sd: variance(&z).sqrt(),
            }
        })
        .collect();
    let fit = SpiFit {
        distribution,
        per_calendar_month,
        params,
        diagnostics,
        fit_window: window,
    };
    let out = fit.transform(series, months);
    Ok((fit, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_distr::{Distribution, Gamma as GammaDist};

    fn months(n: usize) -> Vec<YearMonth> {
        let s = YearMonth::new(2001, 1).unwrap();
        (0..n).map(|i| s.add_months(i as i64)).collect()
    }

    fn gamma_draws(n: usize, seed: u64) -> Vec<f64> {
        let mut r = crate::seed::rng(seed);
        let g = GammaDist::new(2.0, 3.0).unwrap();
        (0..n).map(|_| g.sample(&mut r)).collect()
    }

    #[test]
    fn constant_month_is_degenerate() {
        let m = months(240);
        let s: Series = m
            .iter()
            .enumerate()
            .map(|(i, ym)| Some(if ym.month == 7 { 5.0 } else { 1.0 + (i % 7) as f64 }))
            .collect();
        let err = fit_standardized_index(&s, &m, StdDistribution::Gamma, FitWindow::all(), true).unwrap_err();
        assert!(matches!(err, Error::DegenerateFit(ref msg) if msg.contains("calendar month 07")), "{err:?}");
    }

    #[test]
    fn all_zero_month_is_rejected() {
        let m = months(120);
        let s: Series = m
            .iter()
            .enumerate()
            .map(|(i, ym)| Some(if ym.month == 1 { 0.0 } else { 1.0 + (i % 5) as f64 }))
            .collect();
        assert!(fit_standardized_index(&s, &m, StdDistribution::Gamma, FitWindow::all(), true).is_err());
    }

    #[test]
    fn too_few_observations() {
        let m = months(60);
        let s: Series = (0..60).map(|i| Some(1.0 + (i % 4) as f64)).collect();
        let err = fit_standardized_index(&s, &m, StdDistribution::Gamma, FitWindow::all(), true).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn gamma_draws_standardize() {
        let x = gamma_draws(200, 11);
        let s: Series = x.iter().copied().map(Some).collect();
        let (fit, z) = fit_standardized_index(&s, &months(200), StdDistribution::Gamma, FitWindow::all(), false).unwrap();
        let z: Vec<f64> = z.into_iter().map(Option::unwrap).collect();
        assert!(mean(&z).abs() <= 0.05, "mean {}", mean(&z));
        let sd = variance(&z).sqrt();
        assert!((0.9..=1.1).contains(&sd), "sd {sd}");
        assert!(fit.diagnostics[0].within_tolerance());
    }

    #[test]
    fn pwm_of_uniform_ranks() {
        // x = 1..n: w0 = (n+1)/2, w1 = (n+1)/6, w2 = (n+1)/12 exactly
        let x: Vec<f64> = (1..=9).map(f64::from).collect();
        let w = pwm_alpha(&x);
        assert!((w[0] - 5.0).abs() < 1e-12);
        assert!((w[1] - 10.0 / 6.0).abs() < 1e-12);
        assert!((w[2] - 10.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn log_logistic_matches_direct_pwm_formulas() {
        // positively skewed sample: compare with F = 1 / (1 + (α / (x - γ))^β)
        let x = gamma_draws(150, 3);
        let [w0, w1, w2] = pwm_alpha(&x);
        let beta = (2.0 * w1 - w0) / (6.0 * w1 - w0 - 6.0 * w2);
        let g = statrs::function::gamma::gamma(1.0 + 1.0 / beta) * statrs::function::gamma::gamma(1.0 - 1.0 / beta);
        let alpha = (w0 - 2.0 * w1) * beta / g;
        let gam = w0 - alpha * g;
        let (location, scale, shape) = fit_log_logistic(&x).unwrap();
        let p = SlotParams::LogLogistic { location, scale, shape };
        for q in [0.5, 2.0, 5.0, 9.0, 20.0] {
            let direct = 1.0 / (1.0 + (alpha / (q - gam)).powf(beta));
            assert!((p.cdf(q) - direct).abs() < 1e-10, "x {q}: {} vs {direct}", p.cdf(q));
        }
        // negatively skewed sample still fits
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let (_, _, k) = fit_log_logistic(&neg).unwrap();
        assert!(k > 0.0);
    }

    proptest! {
        #[test]
        fn transform_is_monotone(a in 0.0f64..60.0, b in 0.0f64..60.0, seed in 0u64..50) {
            let x = gamma_draws(120, seed);
            let s: Series = x.iter().copied().map(Some).collect();
            let m = months(120);
            for dist in [StdDistribution::Gamma, StdDistribution::LogLogistic] {
                let (fit, _) = fit_standardized_index(&s, &m, dist, FitWindow::all(), false).unwrap();
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(fit.params[0].z(lo) <= fit.params[0].z(hi));
            }
        }
    }
}
