use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonUnits {
    /// ε in target units; targets are not rescaled.
    Raw,
    /// ε on the target min-max scaled to [0, 1] over the training fold.
    Scaled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvrHyper {
    pub c: f64,
    pub epsilon: f64,
    /// RBF width; `None` means `gamma_scale / n_features`.
    pub gamma: Option<f64>,
    pub gamma_scale: f64,
    pub epsilon_units: EpsilonUnits,
    pub tol: f64,
    /// Iteration cap; 0 means `max(100_000, 200 * n)`.
    pub max_iter: usize,
}

impl Default for SvrHyper {
    fn default() -> Self {
        Self {
            c: 32.0,
            epsilon: 0.2,
            gamma: None,
            gamma_scale: 1.0,
            epsilon_units: EpsilonUnits::Raw,
            tol: 1e-3,
            max_iter: 0,
        }
    }
}

impl SvrHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !(self.epsilon >= 0.0) || !(self.tol > 0.0) || self.gamma.is_some_and(|g| !(g > 0.0))
            || !(self.gamma_scale > 0.0)
        {
            return Err(Error::Config(format!("invalid SVR settings {self:?}")));
        }
        Ok(())
    }

    pub fn gamma_for(&self, d: usize) -> f64 {
        self.gamma.unwrap_or(self.gamma_scale / d.max(1) as f64)
    }
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    (-gamma * d2).exp()
}

/// Trained ε-SVR: support vectors with coefficients (α - α*) and bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub gamma: f64,
    pub c: f64,
    pub epsilon: f64,
    pub support: Vec<Vec<f64>>,
    pub coef: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// Final maximal KKT violation (m - M).
    pub violation: f64,
}

impl SvrModel {
    pub fn predict_one(&self, x: &[f64]) -> f64 {
        self.bias
            + self
                .support
                .iter()
                .zip(&self.coef)
                .map(|(s, c)| c * rbf(s, x, self.gamma))
                .sum::<f64>()
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().map(|r| self.predict_one(r)).collect()
    }
}

/// Raw SMO solution over all training rows (coefficients include zeros).
#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub coef: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub violation: f64,
    /// Dual objective (maximisation form) after each iteration, when traced.
    pub trace: Vec<f64>,
}

const TAU: f64 = 1e-12;

/// Solves the ε-SVR dual with libsvm-style SMO: 2n variables
/// β = (α, α*), labels (+1, -1), linear term (ε - z, ε + z), second-order
/// working-set selection, stop when m(β) - M(β) < tol.
pub fn solve_smo(kernel: &[f64], z: &[f64], c: f64, epsilon: f64, tol: f64, max_iter: usize, trace: bool) -> Result<SmoSolution> {
    let n = z.len();
    assert_eq!(kernel.len(), n * n);
    let l = 2 * n;
    let y = |t: usize| if t < n { 1.0 } else { -1.0 };
    let kk = |a: usize, b: usize| kernel[(a % n) * n + b % n];
    let q = |a: usize, b: usize| y(a) * y(b) * kk(a, b);
    let p: Vec<f64> = (0..l).map(|t| if t < n { epsilon - z[t] } else { epsilon + z[t - n] }).collect();
    let mut alpha = vec![0.0; l];
    let mut grad = p.clone();
    let cap = if max_iter == 0 { (200 * n).max(100_000) } else { max_iter };
    let mut trace_vals = Vec::new();
    let objective = |alpha: &[f64], grad: &[f64]| -> f64 {
        -0.5 * alpha.iter().zip(grad.iter().zip(&p)).map(|(a, (g, pp))| a * (g + pp)).sum::<f64>()
    };
    if trace {
        trace_vals.push(objective(&alpha, &grad));
    }
    let mut iter = 0;
    let mut violation;
    loop {
        // i: argmax of -y G over I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..l {
            let up = if y(t) > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            if up && -y(t) * grad[t] >= gmax {
                gmax = -y(t) * grad[t];
                i = t;
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut obj_min = f64::INFINITY;
        for t in 0..l {
            let low = if y(t) > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
            if !low {
                continue;
            }
            let yg = y(t) * grad[t];
            if yg >= gmax2 {
                gmax2 = yg;
            }
            if i == usize::MAX {
                continue;
            }
            let grad_diff = gmax + yg;
            if grad_diff > 0.0 {
                let quad = q(i, i) + q(t, t) - 2.0 * y(i) * y(t) * q(i, t);
                let quad = if quad > 0.0 { quad } else { TAU };
                let obj = -(grad_diff * grad_diff) / quad;
                if obj <= obj_min {
                    obj_min = obj;
                    j = t;
                }
            }
        }
        violation = gmax + gmax2;
        if i == usize::MAX || j == usize::MAX || violation < tol {
            break;
        }
        if iter >= cap {
            break;
        }
        iter += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = q(i, j);
        if y(i) != y(j) {
            let quad = q(i, i) + q(j, j) + 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = q(i, i) + q(j, j) - 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..l {
            grad[t] += q(i, t) * di + q(j, t) * dj;
        }
        if trace {
            trace_vals.push(objective(&alpha, &grad));
        }
    }
    if violation > 10.0 * tol {
        return Err(Error::NonConvergence(format!(
            "SMO stopped after {iter} iterations with KKT violation {violation:.3e}"
        )));
    }
    if alpha.iter().chain(&grad).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("SMO produced non-finite values".into()));
    }

    // bias from free variables, else midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut nfree, mut sum_free) = (0usize, 0.0);
    for t in 0..l {
        let yg = y(t) * grad[t];
        if alpha[t] >= c {
            if y(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            nfree += 1;
            sum_free += yg;
        }
    }
    let rho = if nfree > 0 { sum_free / nfree as f64 } else { (ub + lb) / 2.0 };
    let coef = (0..n).map(|k| alpha[k] - alpha[k + n]).collect();
    Ok(SmoSolution {
        coef,
        bias: -rho,
        iterations: iter,
        violation,
        trace: trace_vals,
    })
}

pub fn kernel_matrix(x: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    let n = x.len();
    let mut k = vec![0.0; n * n];
    for a in 0..n {
        k[a * n + a] = 1.0;
        for b in 0..a {
            let v = rbf(&x[a], &x[b], gamma);
            k[a * n + b] = v;
            k[b * n + a] = v;
        }
    }
    k
}

/// Fits an RBF ε-SVR on (already scaled) features and targets `z`.
pub fn train_svr(x: &[Vec<f64>], z: &[f64], hyper: &SvrHyper) -> Result<SvrModel> {
    hyper.validate()?;
    if x.is_empty() || x.len() != z.len() {
        return Err(Error::Data("empty or misaligned SVR training fold".into()));
    }
    if x.iter().flatten().chain(z).any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite SVR training input".into()));
    }
    let gamma = hyper.gamma_for(x[0].len());
    let k = kernel_matrix(x, gamma);
    let sol = solve_smo(&k, z, hyper.c, hyper.epsilon, hyper.tol, hyper.max_iter, false)?;
    let (support, coef): (Vec<Vec<f64>>, Vec<f64>) = x
        .iter()
        .zip(&sol.coef)
        .filter(|(_, c)| **c != 0.0)
        .map(|(r, c)| (r.clone(), *c))
        .unzip();
    Ok(SvrModel {
        gamma,
        c: hyper.c,
        epsilon: hyper.epsilon,
        support,
        coef,
        bias: sol.bias,
        iterations: sol.iterations,
        violation: sol.violation,
    })
}
