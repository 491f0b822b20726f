use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Fully connected network: sigmoid hidden layers, one linear output.
///
/// Parameters are stored flat, layer by layer: the weight matrix (rows =
/// outputs) followed by the bias vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
}

impl Network {
    pub fn n_params_for(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn new(sizes: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        if sizes.len() < 2 || *sizes.last().unwrap() != 1 || sizes.contains(&0) {
            return Err(Error::Config(format!("invalid network layout {sizes:?}")));
        }
        if params.len() != Self::n_params_for(&sizes) {
            return Err(Error::Config(format!(
                "layout {sizes:?} needs {} parameters, got {}",
                Self::n_params_for(&sizes),
                params.len()
            )));
        }
        Ok(Self { sizes, params })
    }

    /// Uniform(-range, range) initial parameters from `seed`.
    pub fn random(sizes: Vec<usize>, range: f64, seed: u64) -> Result<Self> {
        let mut r = rng(seed);
        let n = Self::n_params_for(&sizes);
        let params = (0..n).map(|_| r.random_range(-range..range)).collect();
        Self::new(sizes, params)
    }

    pub fn n_inputs(&self) -> usize {
        self.sizes[0]
    }

    pub fn predict_one(&self, x: &[f64]) -> f64 {
        let mut act = x.to_vec();
        let mut off = 0;
        let layers = self.sizes.len() - 1;
        for l in 0..layers {
            let (nin, nout) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[off..off + nin * nout];
            let b = &self.params[off + nin * nout..off + nin * nout + nout];
            off += nin * nout + nout;
            let last = l + 1 == layers;
            act = (0..nout)
                .map(|o| {
                    let z = b[o] + w[o * nin..(o + 1) * nin].iter().zip(&act).map(|(a, v)| a * v).sum::<f64>();
                    if last {
                        z
                    } else {
                        sigmoid(z)
                    }
                })
                .collect();
        }
        act[0]
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().map(|r| self.predict_one(r)).collect()
    }

    pub fn mse(&self, rows: &[Vec<f64>], y: &[f64]) -> f64 {
        rows.iter().zip(y).map(|(r, t)| (self.predict_one(r) - t).powi(2)).sum::<f64>() / y.len() as f64
    }

    /// Mean squared error and its gradient with respect to `params`.
    pub fn loss_and_gradient(&self, rows: &[Vec<f64>], y: &[f64]) -> (f64, Vec<f64>) {
        let layers = self.sizes.len() - 1;
        let mut grad = vec![0.0; self.params.len()];
        let mut offsets = Vec::with_capacity(layers);
        let mut off = 0;
        for l in 0..layers {
            offsets.push(off);
            off += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        let mut acts: Vec<Vec<f64>> = self.sizes.iter().map(|&s| vec![0.0; s]).collect();
        let mut deltas: Vec<Vec<f64>> = self.sizes.iter().map(|&s| vec![0.0; s]).collect();
        let n = y.len() as f64;
        let mut loss = 0.0;
        for (row, target) in rows.iter().zip(y) {
            acts[0].copy_from_slice(row);
            for l in 0..layers {
                let (nin, nout) = (self.sizes[l], self.sizes[l + 1]);
                let o0 = offsets[l];
                let last = l + 1 == layers;
                let (head, tail) = acts.split_at_mut(l + 1);
                let input = &head[l];
                for o in 0..nout {
                    let w = &self.params[o0 + o * nin..o0 + (o + 1) * nin];
                    let z = self.params[o0 + nin * nout + o] + w.iter().zip(input).map(|(a, v)| a * v).sum::<f64>();
                    tail[0][o] = if last { z } else { sigmoid(z) };
                }
            }
            let err = acts[layers][0] - target;
            loss += err * err;
            deltas[layers][0] = 2.0 * err / n;
            for l in (0..layers).rev() {
                let (nin, nout) = (self.sizes[l], self.sizes[l + 1]);
                let o0 = offsets[l];
                for o in 0..nout {
                    let d = deltas[l + 1][o];
                    for i in 0..nin {
                        grad[o0 + o * nin + i] += d * acts[l][i];
                    }
                    grad[o0 + nin * nout + o] += d;
                }
                if l > 0 {
                    for i in 0..nin {
                        let mut s = 0.0;
                        for o in 0..nout {
                            s += self.params[o0 + o * nin + i] * deltas[l + 1][o];
                        }
                        let a = acts[l][i];
                        deltas[l][i] = s * a * (1.0 - a);
                    }
                }
            }
        }
        (loss / n, grad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RpropHyper {
    pub delta0: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub eta_plus: f64,
    pub eta_minus: f64,
    pub max_epochs: usize,
    /// Epochs without improvement of the monitored loss before stopping.
    pub patience: usize,
}

impl Default for RpropHyper {
    fn default() -> Self {
        Self {
            delta0: 0.1,
            delta_min: 1e-6,
            delta_max: 50.0,
            eta_plus: 1.2,
            eta_minus: 0.5,
            max_epochs: 2000,
            patience: 50,
        }
    }
}

impl RpropHyper {
    pub fn validate(&self) -> Result<()> {
        let ok = self.delta_min > 0.0
            && self.delta_min <= self.delta0
            && self.delta0 <= self.delta_max
            && self.eta_plus > 1.0
            && self.eta_minus > 0.0
            && self.eta_minus < 1.0;
        if !ok {
            return Err(Error::Config(format!("invalid RPROP settings {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub network: Network,
    /// Per-parameter step sizes when training stopped.
    pub steps: Vec<f64>,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub best_loss: f64,
}

/// iRPROP⁻ on the batch MSE. Monitors validation MSE when a validation set is
/// given (training MSE otherwise) and returns the parameters of the best
/// monitored epoch; epoch 0 is the starting point.
pub fn train_rprop(
    start: Network,
    x: &[Vec<f64>],
    y: &[f64],
    valid: Option<(&[Vec<f64>], &[f64])>,
    hyper: &RpropHyper,
) -> Result<TrainOutcome> {
    hyper.validate()?;
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::Data("empty or misaligned training fold".into()));
    }
    if let Some((vx, vy)) = valid {
        if vx.is_empty() || vx.len() != vy.len() {
            return Err(Error::Data("empty or misaligned validation fold".into()));
        }
    }
    let monitor = |net: &Network, train_loss: f64| match valid {
        Some((vx, vy)) => net.mse(vx, vy),
        None => train_loss,
    };
    let mut net = start;
    let p = net.params.len();
    let mut steps = vec![hyper.delta0; p];
    let mut prev = vec![0.0; p];
    let (mut loss, mut grad) = net.loss_and_gradient(x, y);
    if !loss.is_finite() {
        return Err(Error::Numerical("non-finite loss at initialisation".into()));
    }
    let mut best = (monitor(&net, loss), net.params.clone(), 0usize);
    let mut since_best = 0;
    let mut epochs_run = 0;
    for epoch in 1..=hyper.max_epochs {
        for k in 0..p {
            let g = grad[k];
            let s = g * prev[k];
            if s > 0.0 {
                steps[k] = (steps[k] * hyper.eta_plus).min(hyper.delta_max);
                net.params[k] -= g.signum() * steps[k];
                prev[k] = g;
            } else if s < 0.0 {
                steps[k] = (steps[k] * hyper.eta_minus).max(hyper.delta_min);
                prev[k] = 0.0;
            } else {
                if g != 0.0 {
                    net.params[k] -= g.signum() * steps[k];
                }
                prev[k] = g;
            }
        }
        epochs_run = epoch;
        (loss, grad) = net.loss_and_gradient(x, y);
        if !loss.is_finite() || net.params.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite loss at epoch {epoch}")));
        }
        let m = monitor(&net, loss);
        if m < best.0 {
            best = (m, net.params.clone(), epoch);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= hyper.patience {
                break;
            }
        }
    }
    net.params = best.1;
    Ok(TrainOutcome {
        network: net,
        steps,
        best_epoch: best.2,
        epochs_run,
        best_loss: best.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnHyper {
    /// Hidden layer sizes; `None` means one layer of `2 * inputs + 1`.
    pub hidden: Option<Vec<usize>>,
    pub init_range: f64,
    pub rprop: RpropHyper,
}

impl Default for AnnHyper {
    fn default() -> Self {
        Self {
            hidden: None,
            init_range: 0.5,
            rprop: RpropHyper::default(),
        }
    }
}

impl AnnHyper {
    pub fn layout(&self, n_inputs: usize) -> Vec<usize> {
        let mut sizes = vec![n_inputs];
        match &self.hidden {
            Some(h) => sizes.extend(h),
            None => sizes.push(2 * n_inputs + 1),
        }
        sizes.push(1);
        sizes
    }
}

pub const MIN_ANN_ROWS: usize = 4;

/// Seeded initialisation followed by `train_rprop`.
pub fn train_ann(
    x: &[Vec<f64>],
    y: &[f64],
    valid: Option<(&[Vec<f64>], &[f64])>,
    hyper: &AnnHyper,
    seed: u64,
) -> Result<TrainOutcome> {
    if x.len() < MIN_ANN_ROWS {
        return Err(Error::Data(format!("network training needs at least {MIN_ANN_ROWS} rows, got {}", x.len())));
    }
    let d = x[0].len();
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite training input".into()));
    }
    let start = Network::random(hyper.layout(d), hyper.init_range, seed)?;
    train_rprop(start, x, y, valid, &hyper.rprop)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_epochs_returns_initial_network() {
        let x = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.5, 0.5], vec![0.2, 0.9]];
        let y = vec![1.0, 0.0, 0.5, 0.3];
        let hyper = AnnHyper {
            rprop: RpropHyper { max_epochs: 0, ..RpropHyper::default() },
            ..AnnHyper::default()
        };
        let out = train_ann(&x, &y, None, &hyper, 42).unwrap();
        let init = Network::random(hyper.layout(2), hyper.init_range, 42).unwrap();
        assert_eq!(out.network, init);
        assert_eq!(out.network.predict(&x), init.predict(&x));
    }

    #[test]
    fn layout_rule() {
        assert_eq!(AnnHyper::default().layout(3), vec![3, 7, 1]);
        let h = AnnHyper { hidden: Some(vec![]), ..AnnHyper::default() };
        assert_eq!(h.layout(4), vec![4, 1]);
    }
}
