use crate::error::{Error, Result};

fn check_aligned(cols: &[Vec<f64>]) -> Result<usize> {
    let n = cols
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::Data("no member predictions to combine".into()))?;
    if cols.iter().any(|c| c.len() != n) {
        return Err(Error::Data("member predictions are not row-aligned".into()));
    }
    Ok(n)
}

/// Row-wise mean of member prediction columns.
pub fn combine_simple(cols: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = check_aligned(cols)?;
    let m = cols.len() as f64;
    Ok((0..n).map(|i| cols.iter().map(|c| c[i]).sum::<f64>() / m).collect())
}

/// Min-max stretched scores normalised to sum to one; equal weights when all
/// scores coincide.
pub fn score_weights(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() || scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Data("member scores must be finite and non-empty".into()));
    }
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return Ok(vec![1.0 / scores.len() as f64; scores.len()]);
    }
    let raw: Vec<f64> = scores.iter().map(|s| (s - lo) / (hi - lo)).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.iter().map(|r| r / total).collect())
}

pub fn combine_weighted(cols: &[Vec<f64>], scores: &[f64]) -> Result<Vec<f64>> {
    if scores.len() != cols.len() {
        return Err(Error::Data(format!("{} scores for {} members", scores.len(), cols.len())));
    }
    combine_with_weights(cols, &score_weights(scores)?)
}

pub fn combine_with_weights(cols: &[Vec<f64>], weights: &[f64]) -> Result<Vec<f64>> {
    let n = check_aligned(cols)?;
    if weights.len() != cols.len() {
        return Err(Error::Data(format!("{} weights for {} members", weights.len(), cols.len())));
    }
    Ok((0..n).map(|i| cols.iter().zip(weights).map(|(c, w)| w * c[i]).sum()).collect())
}
