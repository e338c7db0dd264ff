use crate::error::{Error, Result};
use crate::linalg;

pub fn mse(y: &[f64], pred: &[f64]) -> Result<f64> {
    if y.len() != pred.len() {
        return Err(Error::LengthMismatch(y.len(), pred.len()));
    }
    if y.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(y.iter().zip(pred).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64)
}

/// Population variance.
pub fn variance(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

/// 1 − mse / Var(y).
pub fn r2(y: &[f64], pred: &[f64]) -> Result<f64> {
    let m = mse(y, pred)?;
    let v = variance(y);
    if v <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(1.0 - m / v)
}

/// Trace correlation between two one-dimensional spans: |cos| of the angle between them.
pub fn trace_correlation(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch(u.len(), v.len()));
    }
    let (nu, nv) = (linalg::norm(u), linalg::norm(v));
    if !(nu > 0.0) || !(nv > 0.0) {
        return Err(Error::ZeroVector);
    }
    Ok((linalg::dot(u, v) / (nu * nv)).abs().min(1.0))
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Mean and sample standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
