use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::cart::{SortedColumns, TreeBuilder};
use super::{check_xy, RegressionTree, TreeError, TreeParams};
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    pub n_stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for GbmParams {
    fn default() -> Self {
        GbmParams {
            n_stages: 200,
            learning_rate: 0.1,
            max_depth: 4,
            min_samples_leaf: 5,
        }
    }
}

/// `H(x) = initial + Σ α·hⱼ(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmModel {
    pub initial_prediction: f64,
    pub stages: Vec<RegressionTree>,
    pub learning_rate: f64,
    pub n_stages: usize,
    pub seed: u64,
}

impl GbmModel {
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>, TreeError> {
        let mut out = Array1::from_elem(x.nrows(), self.initial_prediction);
        for t in &self.stages {
            out.scaled_add(self.learning_rate, &t.predict(x)?);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct GbmFit {
    pub model: GbmModel,
    /// Training MSE of the initial constant, then after each stage.
    pub train_mse: Vec<f64>,
}

/// Gradient boosting for squared loss: every stage fits a depth-limited tree
/// to the current residuals and adds it scaled by the learning rate.
///
/// A learning rate of 0 is accepted and yields the constant training mean.
pub fn fit_gbm(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    params: &GbmParams,
    seed: u64,
) -> Result<GbmFit, TreeError> {
    check_xy(x, y)?;
    if params.n_stages == 0 {
        return Err(TreeError::NoEstimators);
    }
    if !(0.0..=1.0).contains(&params.learning_rate) {
        return Err(TreeError::BadLearningRate(params.learning_rate));
    }
    let n = x.nrows();
    let needed = params.min_samples_leaf.max(1);
    if n < needed {
        return Err(TreeError::TooFewSamples { needed, got: n });
    }
    let initial = y.sum() / n as f64;
    let cols = SortedColumns::new(x);
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        feature_subset_size: None,
    };
    // Every column is a candidate, so the stream is never drawn from.
    let mut rng = rng_from_seed(seed);
    let mut fitted = Array1::from_elem(n, initial);
    let mut resid = &y - &fitted;
    let mse = |r: &Array1<f64>| r.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let mut history = vec![mse(&resid)];
    let mut stages = Vec::with_capacity(params.n_stages);
    let mut samples: Vec<usize> = (0..n).collect();
    for _ in 0..params.n_stages {
        samples.iter_mut().enumerate().for_each(|(i, s)| *s = i);
        let tree = TreeBuilder::new(&cols, resid.view(), tree_params, &mut rng).build(&mut samples);
        let step = tree.predict(x)?;
        fitted.scaled_add(params.learning_rate, &step);
        resid = &y - &fitted;
        history.push(mse(&resid));
        stages.push(tree);
    }
    Ok(GbmFit {
        model: GbmModel {
            initial_prediction: initial,
            stages,
            learning_rate: params.learning_rate,
            n_stages: params.n_stages,
            seed,
        },
        train_mse: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::fit_tree;
    use ndarray::{array, Array2};
    use rand::Rng;

    #[test]
    fn constant_target_fixed_point() {
        let x = array![[1.0], [2.0], [3.0], [4.0]];
        let y = array![6.0, 6.0, 6.0, 6.0];
        let fit = fit_gbm(
            x.view(),
            y.view(),
            &GbmParams {
                n_stages: 5,
                min_samples_leaf: 1,
                ..Default::default()
            },
            0,
        )
        .unwrap();
        assert_eq!(fit.model.initial_prediction, 6.0);
        for t in &fit.model.stages {
            assert!(t.predict(x.view()).unwrap().iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn one_full_step_equals_tree_plus_mean() {
        let mut rng = rng_from_seed(3);
        let x = Array2::from_shape_fn((25, 3), |_| rng.random_range(0.0..1.0));
        let y = Array1::from_shape_fn(25, |i| 10.0 * x[[i, 0]] + x[[i, 2]]);
        let p = GbmParams {
            n_stages: 1,
            learning_rate: 1.0,
            max_depth: 10,
            min_samples_leaf: 1,
        };
        let fit = fit_gbm(x.view(), y.view(), &p, 0).unwrap();
        let mean = y.mean().unwrap();
        let tp = TreeParams {
            max_depth: 10,
            min_samples_leaf: 1,
            feature_subset_size: None,
        };
        let centered = &y - mean;
        let t = fit_tree(x.view(), centered.view(), &tp, &mut rng_from_seed(0)).unwrap();
        let expect = t.predict(x.view()).unwrap() + mean;
        for (a, b) in fit.model.predict(x.view()).unwrap().iter().zip(&expect) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn training_mse_matches_recomputed_residuals() {
        let mut rng = rng_from_seed(4);
        let x: Array2<f64> = Array2::from_shape_fn((20, 2), |_| rng.random_range(-1.0..1.0));
        let y = Array1::from_shape_fn(20, |i| (3.0 * x[[i, 0]]).sin() + x[[i, 1]].powi(2));
        let p = GbmParams {
            n_stages: 50,
            learning_rate: 0.1,
            max_depth: 2,
            min_samples_leaf: 1,
        };
        let fit = fit_gbm(x.view(), y.view(), &p, 0).unwrap();
        for w in fit.train_mse.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        // Rebuild H_j stage by stage from the stored trees.
        let mut h = Array1::from_elem(20, fit.model.initial_prediction);
        for (j, t) in fit.model.stages.iter().enumerate() {
            h = h + 0.1 * t.predict(x.view()).unwrap();
            let mse = (&y - &h).mapv(|v| v * v).mean().unwrap();
            assert!((mse - fit.train_mse[j + 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_learning_rate_predicts_mean() {
        let x = array![[1.0], [5.0], [2.0]];
        let y = array![1.0, 8.0, 3.0];
        let p = GbmParams {
            learning_rate: 0.0,
            n_stages: 3,
            min_samples_leaf: 1,
            ..Default::default()
        };
        let fit = fit_gbm(x.view(), y.view(), &p, 0).unwrap();
        let pred = fit.model.predict(array![[0.0], [100.0]].view()).unwrap();
        assert_eq!(pred.to_vec(), vec![4.0, 4.0]);
        assert!(fit_gbm(
            x.view(),
            y.view(),
            &GbmParams {
                learning_rate: 1.5,
                ..p
            },
            0
        )
        .is_err());
    }
}
