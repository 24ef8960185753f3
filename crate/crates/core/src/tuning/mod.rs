//! K-fold cross-validation and random grid search.
//!
//! Candidate `i` always trains with `derive_seed(seed, i)` and results are
//! collected by index, so a search gives the same answer on any number of
//! worker threads.

mod cv;
mod grid;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Family, Hyperparams};
use crate::preprocess::{EncodedDataset, SplitPlan};
use crate::seed::{derive_seed, rng_from_seed};

pub use cv::cross_validate;
pub use grid::{ElasticNetGrid, GbmGrid, HyperGrid, LambdaGrid, NnGrid, RfGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TuneError {
    #[error("{family} grid has no values for {parameter}")]
    EmptyGrid { family: Family, parameter: String },
    #[error("invalid {family} grid: {reason}")]
    InvalidGrid { family: Family, reason: String },
    #[error("at least one candidate is required")]
    NoCandidates,
    #[error("fold {fold} has no rows on one side")]
    EmptyFold { fold: usize },
    #[error("fit failed on fold {fold}: {message}")]
    Fit { fold: usize, message: String },
    #[error("every {family} candidate failed; first error: {first}")]
    AllFailed { family: Family, first: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub index: usize,
    pub hyperparams: Hyperparams,
    pub seed: u64,
    pub fold_rmse: Vec<f64>,
    /// `None` when the candidate failed.
    pub mean_rmse: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub family: Family,
    pub base_seed: u64,
    pub n_requested: usize,
    pub candidates: Vec<CandidateResult>,
    pub winner: usize,
}

impl TuneResult {
    pub fn winner(&self) -> &CandidateResult {
        &self.candidates[self.winner]
    }

    pub fn failed(&self) -> impl Iterator<Item = &CandidateResult> {
        self.candidates.iter().filter(|c| c.error.is_some())
    }
}

/// Draw `n_candidates` combinations uniformly with replacement and drop
/// repeats, keeping first-draw order.
pub fn sample_candidates(
    family: Family,
    grid: &HyperGrid,
    n_candidates: usize,
    n_cols: usize,
    seed: u64,
) -> Result<Vec<Hyperparams>, TuneError> {
    if n_candidates == 0 {
        return Err(TuneError::NoCandidates);
    }
    let combos = grid.combinations(family, n_cols)?;
    let mut rng = rng_from_seed(derive_seed(seed, u64::MAX));
    let mut picked: Vec<usize> = Vec::new();
    for _ in 0..n_candidates {
        let i = rng.random_range(0..combos.len());
        if !picked.contains(&i) {
            picked.push(i);
        }
    }
    Ok(picked.into_iter().map(|i| combos[i].clone()).collect())
}

/// Random grid search scored by mean cross-validated RMSE. The winner is the
/// lowest mean, ties going to the earlier candidate. Candidates that fail
/// (for example a diverging network) are recorded and skipped.
pub fn random_grid_search(
    family: Family,
    grid: &HyperGrid,
    n_candidates: usize,
    data: &EncodedDataset,
    plan: &SplitPlan,
    seed: u64,
) -> Result<TuneResult, TuneError> {
    let candidates = sample_candidates(family, grid, n_candidates, data.n_cols(), seed)?;
    let results: Vec<CandidateResult> = candidates
        .into_par_iter()
        .enumerate()
        .map(|(index, hyperparams)| {
            let cand_seed = derive_seed(seed, index as u64);
            match cross_validate(&hyperparams, data, plan, cand_seed) {
                Ok(fold_rmse) => {
                    let mean = fold_rmse.iter().sum::<f64>() / fold_rmse.len() as f64;
                    CandidateResult {
                        index,
                        hyperparams,
                        seed: cand_seed,
                        fold_rmse,
                        mean_rmse: Some(mean),
                        error: None,
                    }
                }
                Err(e) => {
                    log::warn!("{family} candidate {index} failed: {e}");
                    CandidateResult {
                        index,
                        hyperparams,
                        seed: cand_seed,
                        fold_rmse: Vec::new(),
                        mean_rmse: None,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();

    let mut winner: Option<(usize, f64)> = None;
    for c in &results {
        if let Some(m) = c.mean_rmse {
            if winner.is_none_or(|(_, best)| m < best) {
                winner = Some((c.index, m));
            }
        }
    }
    let Some((winner, _)) = winner else {
        return Err(TuneError::AllFailed {
            family,
            first: results[0].error.clone().unwrap_or_default(),
        });
    };
    Ok(TuneResult {
        family,
        base_seed: seed,
        n_requested: n_candidates,
        candidates: results,
        winner,
    })
}
