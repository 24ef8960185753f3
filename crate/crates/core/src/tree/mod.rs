//! Regression trees, random forests, gradient boosting and impurity-based
//! feature importance.
//!
//! Trees split on `x <= threshold` with thresholds at midpoints between
//! consecutive distinct values, choosing the split with the largest
//! decrease in summed squared error. Ties go to the lowest column, then the
//! lowest threshold.

mod cart;
mod forest;
mod gbm;
mod importance;

use thiserror::Error;

pub use cart::{fit_tree, Node, RegressionTree, SplitInfo, TreeParams};
pub use forest::{fit_random_forest, ForestModel, ForestParams};
pub use gbm::{fit_gbm, GbmFit, GbmModel, GbmParams};
pub use importance::{column_importance, feature_importance, FeatureImportance, TreeEnsemble};

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("features per split ({m}) must lie in 1..={d}")]
    BadFeatureCount { m: usize, d: usize },
    #[error("need at least one tree or stage")]
    NoEstimators,
    #[error("learning rate must lie in [0, 1], got {0}")]
    BadLearningRate(f64),
    #[error("design matrix has {x} rows but target has {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("model expects {expected} columns, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("non-finite value in the design matrix or target")]
    NonFinite,
}

pub(crate) fn check_xy(x: ndarray::ArrayView2<'_, f64>, y: ndarray::ArrayView1<'_, f64>) -> Result<(), TreeError> {
    if x.nrows() != y.len() {
        return Err(TreeError::LengthMismatch {
            x: x.nrows(),
            y: y.len(),
        });
    }
    if !x.iter().chain(y.iter()).all(|v| v.is_finite()) {
        return Err(TreeError::NonFinite);
    }
    Ok(())
}
