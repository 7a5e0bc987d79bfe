//! RMSE, cross-validation averaging and linearly mapped RMSE.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

fn check_pair(y: &[f64], y_hat: &[f64]) -> Result<()> {
    check_len(y.len(), y_hat.len())?;
    if y.is_empty() {
        return Err(Error::invalid("RMSE of zero samples is undefined"));
    }
    Ok(())
}

/// Root mean squared error over `N = y.len()` samples.
pub fn rmse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check_pair(y, y_hat)?;
    let sse: f64 = y.iter().zip(y_hat).map(|(a, b)| (b - a) * (b - a)).sum();
    Ok((sse / y.len() as f64).sqrt())
}

/// First-order mapping `a·ŷ + b` fitted by least squares onto `y`, and the
/// RMSE after mapping. Returns `(mapped_rmse, a, b)`.
pub fn mapped_rmse(y: &[f64], y_hat: &[f64]) -> Result<(f64, f64, f64)> {
    check_pair(y, y_hat)?;
    if y.len() < 2 {
        return Err(Error::invalid("linear mapping needs at least two samples"));
    }
    let n = y.len() as f64;
    let mean_p = y_hat.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let sxx: f64 = y_hat.iter().map(|p| (p - mean_p) * (p - mean_p)).sum();
    let sxy: f64 = y_hat
        .iter()
        .zip(y)
        .map(|(p, t)| (p - mean_p) * (t - mean_y))
        .sum();
    if sxx <= f64::EPSILON * n * mean_p.abs().max(1.0).powi(2) {
        return Err(Error::invalid("predictions are constant; mapping slope is undefined"));
    }
    let a = sxy / sxx;
    let b = mean_y - a * mean_p;
    let mapped: Vec<f64> = y_hat.iter().map(|p| a * p + b).collect();
    Ok((rmse(y, &mapped)?, a, b))
}

/// Arithmetic mean of per-fold RMSE values.
pub fn cv_average(per_fold_rmse: &[f64]) -> Result<f64> {
    if per_fold_rmse.is_empty() {
        return Err(Error::invalid("no folds to average"));
    }
    Ok(per_fold_rmse.iter().sum::<f64>() / per_fold_rmse.len() as f64)
}

/// Evaluation summary, serialized as `{n, rmse, mapped_rmse, a, b}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub n: usize,
    pub rmse: f64,
    pub mapped_rmse: f64,
    pub a: f64,
    pub b: f64,
}

impl ScoreReport {
    pub fn compute(y: &[f64], y_hat: &[f64]) -> Result<Self> {
        let r = rmse(y, y_hat)?;
        let (mapped, a, b) = mapped_rmse(y, y_hat)?;
        Ok(ScoreReport {
            n: y.len(),
            rmse: r,
            mapped_rmse: mapped,
            a,
            b,
        })
    }
}
