//! From orders to a numeric design matrix: one-hot encoding with
//! median-imputed missing values, training-only standardization, and the
//! train/test split with k-fold assignment.

mod encode;
mod split;
mod standardize;

use thiserror::Error;

pub use encode::{
    column_meta, encode_features, encode_orders, fingerprint, one_hot_encode, ColumnMeta, ColumnOrigin, EncodedDataset,
    FeatureMatrix,
};
pub use split::{split, SplitPlan};
pub(crate) use standardize::warn_if_unstandardized;
pub use standardize::{ColumnScale, Standardizer};

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("split ratio must lie strictly between 0 and 1, got {0}")]
    BadRatio(f64),
    #[error("need at least 2 folds, got {0}")]
    BadFoldCount(usize),
    #[error("training size {train} is smaller than the fold count {k}")]
    TooFewTrainingRows { train: usize, k: usize },
    #[error("row {row}: {source}")]
    Target {
        row: usize,
        #[source]
        source: crate::data::DataError,
    },
    #[error("matrix has {got} columns, standardizer expects {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("non-finite value in encoded row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
}
