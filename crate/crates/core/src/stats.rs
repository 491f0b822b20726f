//! Small numeric helpers shared across modules.

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

pub fn norm_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

pub fn norm_pdf(x: f64) -> f64 {
    std_normal().pdf(x)
}

/// Standard normal quantile. `p` is clamped into (0, 1) by the caller.
pub fn norm_ppf(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance (n - 1 denominator).
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "pearson: length mismatch");
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Squared Pearson correlation; 0 when undefined (constant input).
pub fn squared_pearson(x: &[f64], y: &[f64]) -> f64 {
    pearson(x, y).map_or(0.0, |r| r * r)
}

/// 1-based ranks with ties sharing their mean rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Ridge added to the normal equations when they are numerically singular.
pub const RIDGE_FALLBACK: f64 = 1e-8;

/// In-place Cholesky solve of a symmetric k×k system (row-major).
/// Returns `None` when a pivot falls below `1e-12 * max diagonal`.
fn cholesky_solve(a: &[f64], b: &[f64], k: usize) -> Option<Vec<f64>> {
    let scale = (0..k).map(|i| a[i * k + i]).fold(0.0_f64, f64::max);
    if scale <= 0.0 {
        return if k == 0 { Some(Vec::new()) } else { None };
    }
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = a[i * k + j];
            for p in 0..j {
                s -= l[i * k + p] * l[j * k + p];
            }
            if i == j {
                if s <= 1e-12 * scale {
                    return None;
                }
                l[i * k + i] = s.sqrt();
            } else {
                l[i * k + j] = s / l[j * k + j];
            }
        }
    }
    let mut z = vec![0.0; k];
    for i in 0..k {
        let mut s = b[i];
        for p in 0..i {
            s -= l[i * k + p] * z[p];
        }
        z[i] = s / l[i * k + i];
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = z[i];
        for p in i + 1..k {
            s -= l[p * k + i] * x[p];
        }
        x[i] = s / l[i * k + i];
    }
    Some(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub intercept: f64,
    pub coef: Vec<f64>,
    pub rss: f64,
    pub tss: f64,
    /// True when the ridge fallback was needed.
    pub ridged: bool,
}

impl OlsFit {
    pub fn r2(&self) -> f64 {
        if self.tss <= 0.0 {
            0.0
        } else {
            1.0 - self.rss / self.tss
        }
    }
}

/// Least squares with intercept on centred normal equations. Singular designs
/// fall back to ridge with `RIDGE_FALLBACK`, so the fit is always total for
/// finite inputs.
pub fn ols(columns: &[&[f64]], y: &[f64]) -> Result<OlsFit> {
    let n = y.len();
    let k = columns.len();
    if n == 0 {
        return Err(Error::Data("ols on empty data".into()));
    }
    for c in columns {
        if c.len() != n {
            return Err(Error::Data("ols: column length mismatch".into()));
        }
    }
    if y.iter().chain(columns.iter().flat_map(|c| c.iter())).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("ols: non-finite input".into()));
    }
    let my = mean(y);
    let means: Vec<f64> = columns.iter().map(|c| mean(c)).collect();
    let centred: Vec<Vec<f64>> = columns
        .iter()
        .zip(&means)
        .map(|(c, m)| c.iter().map(|v| v - m).collect())
        .collect();
    let yc: Vec<f64> = y.iter().map(|v| v - my).collect();

    let mut xtx = vec![0.0; k * k];
    let mut xty = vec![0.0; k];
    for i in 0..k {
        for j in 0..=i {
            let s: f64 = centred[i].iter().zip(&centred[j]).map(|(a, b)| a * b).sum();
            xtx[i * k + j] = s;
            xtx[j * k + i] = s;
        }
        xty[i] = centred[i].iter().zip(&yc).map(|(a, b)| a * b).sum();
    }

    let (coef, ridged) = match cholesky_solve(&xtx, &xty, k) {
        Some(c) => (c, false),
        None => {
            let mut ridge = xtx.clone();
            for i in 0..k {
                ridge[i * k + i] += RIDGE_FALLBACK;
            }
            let c = cholesky_solve(&ridge, &xty, k)
                .or_else(|| {
                    // all-zero columns leave a zero diagonal; solve with unit ridge on those only
                    for i in 0..k {
                        if xtx[i * k + i] == 0.0 {
                            ridge[i * k + i] = 1.0;
                        }
                    }
                    cholesky_solve(&ridge, &xty, k)
                })
                .ok_or_else(|| Error::Numerical("ols: singular design matrix".into()))?;
            (c, true)
        }
    };

    let intercept = my - coef.iter().zip(&means).map(|(b, m)| b * m).sum::<f64>();
    let mut rss = 0.0;
    for r in 0..n {
        let fit: f64 = coef.iter().zip(&centred).map(|(b, c)| b * c[r]).sum();
        rss += (yc[r] - fit).powi(2);
    }
    let tss: f64 = yc.iter().map(|v| v * v).sum();
    Ok(OlsFit {
        intercept,
        coef,
        rss,
        tss,
        ridged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
    }

    #[test]
    fn ols_recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        let f = ols(&[&x], &y).unwrap();
        assert!((f.coef[0] - 3.0).abs() < 1e-12);
        assert!((f.intercept + 1.0).abs() < 1e-12);
        assert!(f.rss < 1e-20);
    }

    #[test]
    fn ols_duplicate_column_uses_ridge() {
        let x = [1.0, 2.0, 4.0, 3.0, 7.0];
        let y = [2.0, 4.5, 7.0, 6.5, 15.0];
        let single = ols(&[&x], &y).unwrap();
        let dup = ols(&[&x, &x], &y).unwrap();
        assert!(dup.ridged);
        assert!((dup.coef[0] - dup.coef[1]).abs() < 1e-5);
        assert!((dup.rss - single.rss).abs() < 1e-6);
        let zeros = [0.0; 5];
        let z = ols(&[&x, &zeros], &y).unwrap();
        assert!((z.rss - single.rss).abs() < 1e-9);
    }

    #[test]
    fn normal_quantile_inverts_cdf() {
        for &p in &[0.001, 0.1, 0.5, 0.9, 0.999] {
            let err = (norm_cdf(norm_ppf(p)) - p).abs();
            assert!(err < 1e-10, "p {p}: {err:e}");
        }
    }
}
