use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cart::{SortedColumns, TreeBuilder};
use super::{check_xy, RegressionTree, TreeError, TreeParams};
use crate::seed::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Columns considered per split; `None` means `⌈d/3⌉`.
    pub features_per_split: Option<usize>,
    /// Draw an n-row bootstrap per tree; off means every tree sees all rows.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: 12,
            min_samples_leaf: 2,
            features_per_split: None,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<RegressionTree>,
    pub tree_seeds: Vec<u64>,
    pub features_per_split: usize,
    pub n_trees: usize,
    pub bootstrap: bool,
}

impl ForestModel {
    /// Arithmetic mean of the member trees.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>, TreeError> {
        let mut sum = Array1::<f64>::zeros(x.nrows());
        for t in &self.trees {
            sum += &t.predict(x)?;
        }
        Ok(sum / self.trees.len() as f64)
    }
}

/// Default split-candidate count for `d` columns.
pub fn default_features_per_split(d: usize) -> usize {
    d.div_ceil(3).max(1)
}

/// Bagged trees with per-node feature subsampling. Tree `t` draws from its
/// own stream seeded by `derive_seed(seed, t)`, so trees can be fitted in
/// any order or concurrently.
pub fn fit_random_forest(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel, TreeError> {
    check_xy(x, y)?;
    if params.n_trees == 0 {
        return Err(TreeError::NoEstimators);
    }
    let (n, d) = x.dim();
    let m = params
        .features_per_split
        .unwrap_or_else(|| default_features_per_split(d));
    if m == 0 || m > d {
        return Err(TreeError::BadFeatureCount { m, d });
    }
    let needed = params.min_samples_leaf.max(1);
    if n < needed {
        return Err(TreeError::TooFewSamples { needed, got: n });
    }
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        feature_subset_size: Some(m),
    };
    let cols = SortedColumns::new(x);
    let tree_seeds: Vec<u64> = (0..params.n_trees as u64).map(|t| derive_seed(seed, t)).collect();
    let trees: Vec<RegressionTree> = tree_seeds
        .par_iter()
        .map(|&s| {
            let mut rng = rng_from_seed(s);
            let mut samples: Vec<usize> = if params.bootstrap {
                let mut b: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                b.sort_unstable();
                b
            } else {
                (0..n).collect()
            };
            TreeBuilder::new(&cols, y, tree_params, &mut rng).build(&mut samples)
        })
        .collect();
    Ok(ForestModel {
        trees,
        tree_seeds,
        features_per_split: m,
        n_trees: params.n_trees,
        bootstrap: params.bootstrap,
    })
}
