use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::seed::rng_from_seed;

/// Train/test partition plus a fold label for every training row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// `folds[i]` is the fold of `train[i]`.
    pub folds: Vec<usize>,
    pub k: usize,
    pub seed: u64,
}

/// Shuffle `0..n` under `seed`, keep the first `floor(ratio * n)` rows for
/// training and deal them round-robin into `k` folds.
pub fn split(n: usize, ratio: f64, k: usize, seed: u64) -> Result<SplitPlan, PreprocessError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(PreprocessError::BadRatio(ratio));
    }
    if k < 2 {
        return Err(PreprocessError::BadFoldCount(k));
    }
    if n < k {
        return Err(PreprocessError::TooFewRows { needed: k, got: n });
    }
    // The epsilon keeps products like 0.29 * 100 from flooring to 28.
    let n_train = ((ratio * n as f64) + 1e-9).floor() as usize;
    if n_train < k {
        return Err(PreprocessError::TooFewTrainingRows { train: n_train, k });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng_from_seed(seed));
    let test = perm.split_off(n_train);
    let folds = (0..n_train).map(|i| i % k).collect();
    Ok(SplitPlan {
        train: perm,
        test,
        folds,
        k,
        seed,
    })
}

impl SplitPlan {
    /// Training rows outside fold `f` and inside it.
    pub fn fold_rows(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        let mut fit = Vec::new();
        let mut holdout = Vec::new();
        for (&row, &fold) in self.train.iter().zip(&self.folds) {
            if fold == f {
                holdout.push(row);
            } else {
                fit.push(row);
            }
        }
        (fit, holdout)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.folds {
            sizes[f] += 1;
        }
        sizes
    }
}
