use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{train_rprop, MinMax, Network, RpropHyper};
use crate::seed::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StackerConfig {
    /// Hidden units; 0 keeps the single-layer linear perceptron.
    pub hidden: usize,
    /// Share of the out-of-fold rows held back for early stopping.
    pub validation_fraction: f64,
    pub init_range: f64,
    pub rprop: RpropHyper,
}

impl Default for StackerConfig {
    fn default() -> Self {
        Self {
            hidden: 0,
            validation_fraction: 0.3,
            init_range: 0.5,
            rprop: RpropHyper::default(),
        }
    }
}

/// Meta-model over member predictions. Inputs and target share one min-max
/// map (the target's), so the initial equal weights reproduce the simple mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stacker {
    pub scale: MinMax,
    pub network: Network,
    pub best_epoch: usize,
}

impl Stacker {
    pub fn n_members(&self) -> usize {
        self.network.sizes[0]
    }

    /// `row` holds one prediction per member, in member order.
    pub fn predict_one(&self, row: &[f64]) -> f64 {
        let x: Vec<f64> = row.iter().map(|v| self.scale.transform(*v)).collect();
        self.scale.inverse(self.network.predict_one(&x))
    }

    pub fn predict_columns(&self, cols: &[Vec<f64>]) -> Result<Vec<f64>> {
        if cols.len() != self.n_members() {
            return Err(Error::Data(format!(
                "stacker expects {} members, got {}",
                self.n_members(),
                cols.len()
            )));
        }
        let n = cols.first().map_or(0, Vec::len);
        Ok((0..n)
            .map(|i| self.predict_one(&cols.iter().map(|c| c[i]).collect::<Vec<_>>()))
            .collect())
    }

    /// Input weights of the linear perceptron; `None` with a hidden layer.
    pub fn linear_weights(&self) -> Option<&[f64]> {
        (self.network.sizes.len() == 2).then(|| &self.network.params[..self.network.sizes[0]])
    }
}

/// Trains on out-of-fold member predictions (`cols`, member-major) of
/// in-sample rows.
pub fn train_stacker(cols: &[Vec<f64>], target: &[f64], cfg: &StackerConfig, seed: u64) -> Result<Stacker> {
    let m = cols.len();
    if m == 0 {
        return Err(Error::Data("stacker needs at least one member".into()));
    }
    let n = target.len();
    if cols.iter().any(|c| c.len() != n) {
        return Err(Error::Data("stacker inputs are not aligned with the target".into()));
    }
    if !(cfg.validation_fraction >= 0.0 && cfg.validation_fraction < 1.0) {
        return Err(Error::Config(format!(
            "stacker validation fraction {} not in [0, 1)",
            cfg.validation_fraction
        )));
    }
    let scale = MinMax::fit(target.iter().copied())
        .ok_or_else(|| Error::Data("stacker target is constant".into()))?;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| cols.iter().map(|c| scale.transform(c[i])).collect())
        .collect();
    let y: Vec<f64> = target.iter().map(|v| scale.transform(*v)).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng(seed));
    let n_valid = (cfg.validation_fraction * n as f64).floor() as usize;
    let (valid_idx, train_idx) = order.split_at(n_valid);
    if train_idx.len() < 2 {
        return Err(Error::Data(format!("stacker has only {} training rows", train_idx.len())));
    }
    let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<f64>) {
        (idx.iter().map(|&i| rows[i].clone()).collect(), idx.iter().map(|&i| y[i]).collect())
    };
    let (tx, ty) = pick(train_idx);
    let (vx, vy) = pick(valid_idx);

    let start = if cfg.hidden == 0 {
        let mut params = vec![1.0 / m as f64; m];
        params.push(0.0);
        Network::new(vec![m, 1], params)?
    } else {
        Network::random(vec![m, cfg.hidden, 1], cfg.init_range, seed)?
    };
    let valid = (!vx.is_empty()).then_some((vx.as_slice(), vy.as_slice()));
    let out = train_rprop(start, &tx, &ty, valid, &cfg.rprop)?;
    Ok(Stacker {
        scale,
        network: out.network,
        best_epoch: out.best_epoch,
    })
}
