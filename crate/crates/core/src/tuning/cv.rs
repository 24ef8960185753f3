use super::TuneError;
use crate::evaluation::rmse;
use crate::model::{self, Hyperparams};
use crate::preprocess::{EncodedDataset, SplitPlan};

/// Held-out RMSE of `hp` on each fold of `plan`. Every fold is fitted from
/// scratch on the other folds, so standardizers never see held-out rows.
pub fn cross_validate(
    hp: &Hyperparams,
    data: &EncodedDataset,
    plan: &SplitPlan,
    seed: u64,
) -> Result<Vec<f64>, TuneError> {
    (0..plan.k)
        .map(|fold| {
            let (fit_rows, holdout) = plan.fold_rows(fold);
            if holdout.is_empty() || fit_rows.is_empty() {
                return Err(TuneError::EmptyFold { fold });
            }
            let train = data.select_rows(&fit_rows);
            let valid = data.select_rows(&holdout);
            let fitted = model::train(hp, &train, seed).map_err(|e| TuneError::Fit {
                fold,
                message: e.to_string(),
            })?;
            let pred = fitted.predict(&valid).map_err(|e| TuneError::Fit {
                fold,
                message: e.to_string(),
            })?;
            Ok(rmse(valid.targets().view(), pred.view()).expect("fold has rows"))
        })
        .collect()
}
