use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse: f64,
    pub mae: f64,
    /// Missing when the targets have zero variance or fewer than two rows.
    pub r2: Option<f64>,
    pub r2_undefined: bool,
}

pub(crate) fn check_pair(y_true: ArrayView1<'_, f64>, y_pred: ArrayView1<'_, f64>) -> Result<(), EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch {
            y_true: y_true.len(),
            y_pred: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(())
}

pub fn rmse(y_true: ArrayView1<'_, f64>, y_pred: ArrayView1<'_, f64>) -> Result<f64, EvalError> {
    check_pair(y_true, y_pred)?;
    let sse: f64 = y_true.iter().zip(&y_pred).map(|(t, p)| (t - p).powi(2)).sum();
    Ok((sse / y_true.len() as f64).sqrt())
}

pub fn mae(y_true: ArrayView1<'_, f64>, y_pred: ArrayView1<'_, f64>) -> Result<f64, EvalError> {
    check_pair(y_true, y_pred)?;
    let sae: f64 = y_true.iter().zip(&y_pred).map(|(t, p)| (t - p).abs()).sum();
    Ok(sae / y_true.len() as f64)
}

/// `1 − SSE/SST` with SST taken about the mean of `y_true`.
pub fn r2(y_true: ArrayView1<'_, f64>, y_pred: ArrayView1<'_, f64>) -> Result<Option<f64>, EvalError> {
    check_pair(y_true, y_pred)?;
    if y_true.len() < 2 {
        return Ok(None);
    }
    let mean = y_true.sum() / y_true.len() as f64;
    let sst: f64 = y_true.iter().map(|t| (t - mean).powi(2)).sum();
    if sst == 0.0 {
        return Ok(None);
    }
    let sse: f64 = y_true.iter().zip(&y_pred).map(|(t, p)| (t - p).powi(2)).sum();
    Ok(Some(1.0 - sse / sst))
}

pub fn metrics(y_true: ArrayView1<'_, f64>, y_pred: ArrayView1<'_, f64>) -> Result<Metrics, EvalError> {
    let r2 = r2(y_true, y_pred)?;
    Ok(Metrics {
        rmse: rmse(y_true, y_pred)?,
        mae: mae(y_true, y_pred)?,
        r2,
        r2_undefined: r2.is_none(),
    })
}
