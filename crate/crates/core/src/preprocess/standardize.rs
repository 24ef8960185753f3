use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{ColumnMeta, PreprocessError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub column: usize,
    pub mean: f64,
    /// Population standard deviation; `1.0` for constant columns.
    pub std: f64,
    /// Constant in training: left unscaled.
    pub constant: bool,
}

/// Per-column centering and scaling learned from training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub width: usize,
    pub columns: Vec<ColumnScale>,
}

impl Standardizer {
    /// Fit on the numeric columns of `x`; one-hot and indicator columns are
    /// left alone.
    pub fn fit(x: ArrayView2<'_, f64>, meta: &[ColumnMeta]) -> Result<Self, PreprocessError> {
        let cols: Vec<usize> = meta
            .iter()
            .enumerate()
            .filter(|(_, m)| m.is_numeric())
            .map(|(j, _)| j)
            .collect();
        Self::fit_columns(x, &cols)
    }

    pub fn fit_columns(x: ArrayView2<'_, f64>, cols: &[usize]) -> Result<Self, PreprocessError> {
        let n = x.nrows();
        if n < 2 {
            return Err(PreprocessError::TooFewRows { needed: 2, got: n });
        }
        let columns = cols
            .iter()
            .map(|&j| {
                let col = x.column(j);
                let mean = col.sum() / n as f64;
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
                let std = var.sqrt();
                let constant = std <= f64::EPSILON * mean.abs().max(1.0);
                if constant {
                    log::debug!("column {j} is constant; left unscaled");
                }
                ColumnScale {
                    column: j,
                    mean,
                    std: if constant { 1.0 } else { std },
                    constant,
                }
            })
            .collect();
        Ok(Standardizer {
            width: x.ncols(),
            columns,
        })
    }

    pub fn constant_columns(&self) -> Vec<usize> {
        self.columns.iter().filter(|c| c.constant).map(|c| c.column).collect()
    }

    pub fn apply(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>, PreprocessError> {
        let mut out = x.to_owned();
        self.apply_in_place(&mut out)?;
        Ok(out)
    }

    pub fn apply_in_place(&self, x: &mut Array2<f64>) -> Result<(), PreprocessError> {
        if x.ncols() != self.width {
            return Err(PreprocessError::WidthMismatch {
                expected: self.width,
                got: x.ncols(),
            });
        }
        for c in self.columns.iter().filter(|c| !c.constant) {
            x.column_mut(c.column).mapv_inplace(|v| (v - c.mean) / c.std);
        }
        Ok(())
    }
}

/// Logs a warning when a non-binary column is not centred with unit spread.
pub(crate) fn warn_if_unstandardized(x: ArrayView2<'_, f64>, consequence: &str) {
    let n = x.nrows() as f64;
    for (j, col) in x.axis_iter(Axis(1)).enumerate() {
        if col.iter().all(|&v| v == 0.0 || v == 1.0) {
            continue;
        }
        let mean = col.sum() / n;
        let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        if mean.abs() > 1e-6 || ((std - 1.0).abs() > 1e-6 && std > 0.0) {
            log::warn!("column {j} is not standardized (mean {mean:.3}, std {std:.3}); {consequence}");
            return;
        }
    }
}
