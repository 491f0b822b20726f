use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indices::SupervisedDataset;
use crate::stats::ols;

/// Named predictor columns and a response, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl RegressionData {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::Data("regression data: names and columns differ in length".into()));
        }
        if columns.iter().any(|c| c.len() != y.len()) {
            return Err(Error::Data("regression data: column length mismatch".into()));
        }
        Ok(Self { names, columns, y })
    }

    pub fn from_dataset(ds: &SupervisedDataset, names: &[&str]) -> Result<Self> {
        let columns = names.iter().map(|n| ds.column(n)).collect::<Result<Vec<_>>>()?;
        Self::new(names.iter().map(|s| s.to_string()).collect(), columns, ds.targets.clone())
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    fn subset(&self, idx: &[usize]) -> Vec<&[f64]> {
        idx.iter().map(|&i| self.columns[i].as_slice()).collect()
    }

    /// R² of the OLS fit on `idx` (0 for the empty set).
    pub fn r2(&self, idx: &[usize]) -> Result<f64> {
        if idx.is_empty() {
            return Ok(0.0);
        }
        Ok(ols(&self.subset(idx), &self.y)?.r2())
    }
}

pub const RSS_FLOOR: f64 = 1e-12;

/// `n ln(RSS/n) + 2(k + 2)` for the OLS fit on `idx`.
pub fn aic_linear(data: &RegressionData, idx: &[usize]) -> Result<f64> {
    let n = data.n();
    let k = idx.len();
    if n <= k + 2 {
        return Err(Error::Data(format!("aic needs n > k + 2 (n = {n}, k = {k})")));
    }
    let rss = if k == 0 {
        let m = crate::stats::mean(&data.y);
        data.y.iter().map(|v| (v - m).powi(2)).sum()
    } else {
        ols(&data.subset(idx), &data.y)?.rss
    };
    if rss < RSS_FLOOR {
        return Err(Error::DegenerateFit(format!("residual sum of squares {rss:e} is effectively zero")));
    }
    let nf = n as f64;
    Ok(nf * (rss / nf).ln() + 2.0 * (k as f64 + 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepMove {
    Add(usize),
    Drop(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepwiseResult {
    /// Selected column indices, ascending.
    pub selected: Vec<usize>,
    pub aic: f64,
    pub trace: Vec<(StepMove, f64)>,
}

/// Bidirectional stepwise search from the empty model. Each round takes the
/// single add or drop with the lowest AIC if it improves on the current
/// model; ties go to the lower column index.
pub fn stepwise_bidirectional(data: &RegressionData, candidates: &[usize]) -> Result<StepwiseResult> {
    if candidates.len() > 20 {
        return Err(Error::Config(format!("stepwise supports at most 20 candidates, got {}", candidates.len())));
    }
    let mut pool: Vec<usize> = candidates.to_vec();
    pool.sort_unstable();
    pool.dedup();
    let mut selected: Vec<usize> = Vec::new();
    let mut current = aic_linear(data, &selected)?;
    let mut trace = Vec::new();
    loop {
        let mut best: Option<(f64, usize, StepMove)> = None;
        for &c in &pool {
            let (mv, set) = if let Some(pos) = selected.iter().position(|&s| s == c) {
                let mut s = selected.clone();
                s.remove(pos);
                (StepMove::Drop(c), s)
            } else {
                let mut s = selected.clone();
                s.push(c);
                s.sort_unstable();
                (StepMove::Add(c), s)
            };
            if data.n() <= set.len() + 2 {
                continue;
            }
            let a = aic_linear(data, &set)?;
            if best.as_ref().is_none_or(|(b, _, _)| a < *b) {
                best = Some((a, c, mv));
            }
        }
        match best {
            Some((a, _, mv)) if a < current => {
                match mv {
                    StepMove::Add(c) => {
                        selected.push(c);
                        selected.sort_unstable();
                    }
                    StepMove::Drop(c) => selected.retain(|&s| s != c),
                }
                current = a;
                trace.push((mv, a));
            }
            _ => break,
        }
    }
    Ok(StepwiseResult {
        selected,
        aic: current,
        trace,
    })
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// LMG relative importance: each variable's incremental R² averaged over all
/// orderings, computed from the 2^p subset R² values with Shapley weights.
pub fn lmg_importance(data: &RegressionData, vars: &[usize]) -> Result<Vec<f64>> {
    let p = vars.len();
    if p > 12 {
        return Err(Error::Config(format!("lmg supports at most 12 variables, got {p}")));
    }
    let r2: Vec<f64> = (0..1usize << p)
        .map(|mask| {
            let idx: Vec<usize> = (0..p).filter(|j| mask >> j & 1 == 1).map(|j| vars[j]).collect();
            data.r2(&idx)
        })
        .collect::<Result<_>>()?;
    let pf = factorial(p);
    let weights: Vec<f64> = (0..p).map(|s| factorial(s) * factorial(p - s - 1) / pf).collect();
    let mut shares = vec![0.0; p];
    for (j, share) in shares.iter_mut().enumerate() {
        for mask in 0..1usize << p {
            if mask >> j & 1 == 1 {
                continue;
            }
            let s = mask.count_ones() as usize;
            *share += weights[s] * (r2[mask | 1 << j] - r2[mask]);
        }
    }
    Ok(shares)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_fit_is_degenerate() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let d = RegressionData::new(vec!["x".into()], vec![x], y).unwrap();
        assert!(matches!(aic_linear(&d, &[0]), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn zero_column_costs_two() {
        let x = vec![1.0, 3.0, 2.0, 5.0, 4.0, 7.0, 6.0, 8.0];
        let y = vec![1.2, 2.9, 2.3, 4.8, 4.4, 6.7, 6.1, 8.3];
        let d = RegressionData::new(vec!["x".into(), "z".into()], vec![x, vec![0.0; 8]], y).unwrap();
        let a1 = aic_linear(&d, &[0]).unwrap();
        let a2 = aic_linear(&d, &[0, 1]).unwrap();
        assert!(a2 - a1 >= 2.0 - 1e-6);
    }

    #[test]
    fn empty_candidates_select_nothing() {
        let d = RegressionData::new(vec![], vec![], vec![1.0, 2.0, 4.0, 3.0]).unwrap();
        let r = stepwise_bidirectional(&d, &[]).unwrap();
        assert!(r.selected.is_empty());
    }
}
