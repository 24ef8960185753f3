use serde::{Deserialize, Serialize};

use super::TuneError;
use crate::model::{Family, Hyperparams, NnParams};
use crate::tree::{ForestParams, GbmParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LambdaGrid {
    pub lambda: Vec<f64>,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid {
            lambda: vec![1.0, 10.0, 100.0, 1000.0, 10_000.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElasticNetGrid {
    pub lambda: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl Default for ElasticNetGrid {
    fn default() -> Self {
        ElasticNetGrid {
            lambda: LambdaGrid::default().lambda,
            alpha: vec![0.2, 0.5, 0.8],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfGrid {
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
    /// Share of columns tried per split, turned into a count of at least 1.
    pub feature_fraction: Vec<f64>,
    pub bootstrap: Vec<bool>,
}

impl Default for RfGrid {
    fn default() -> Self {
        RfGrid {
            n_trees: vec![50, 100],
            max_depth: vec![10, 16],
            min_samples_leaf: vec![1, 3, 5],
            feature_fraction: vec![0.33, 0.6],
            bootstrap: vec![true],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbmGrid {
    pub n_stages: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub max_depth: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
}

impl Default for GbmGrid {
    fn default() -> Self {
        GbmGrid {
            n_stages: vec![100, 200],
            learning_rate: vec![0.05, 0.1],
            max_depth: vec![3, 4, 5],
            min_samples_leaf: vec![5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NnGrid {
    pub hidden_layers: Vec<usize>,
    pub width: Vec<usize>,
    pub step_size: Vec<f64>,
    pub epochs: Vec<usize>,
    pub batch_size: Vec<usize>,
}

impl Default for NnGrid {
    fn default() -> Self {
        NnGrid {
            hidden_layers: vec![1, 2],
            width: vec![16, 64, 128],
            step_size: vec![1e-2, 1e-3],
            epochs: vec![30],
            batch_size: vec![64],
        }
    }
}

/// Candidate values per family. Field names mirror the fit parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperGrid {
    pub lasso: LambdaGrid,
    pub ridge: LambdaGrid,
    pub elastic_net: ElasticNetGrid,
    pub rf: RfGrid,
    pub gbm: GbmGrid,
    pub nn: NnGrid,
}

fn bad(family: Family, msg: String) -> TuneError {
    TuneError::InvalidGrid { family, reason: msg }
}

fn check_all<T: Copy + std::fmt::Display>(
    family: Family,
    name: &str,
    values: &[T],
    ok: impl Fn(T) -> bool,
    rule: &str,
) -> Result<(), TuneError> {
    if values.is_empty() {
        return Err(TuneError::EmptyGrid {
            family,
            parameter: name.into(),
        });
    }
    match values.iter().find(|&&v| !ok(v)) {
        Some(v) => Err(bad(family, format!("{name} = {v} violates {rule}"))),
        None => Ok(()),
    }
}

fn nonneg(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

impl HyperGrid {
    /// Checks that every listed value is a legal argument for its fit.
    pub fn validate(&self, family: Family) -> Result<(), TuneError> {
        let f = family;
        match family {
            Family::Ols => Ok(()),
            Family::Lasso => check_all(f, "lambda", &self.lasso.lambda, nonneg, "λ ≥ 0"),
            Family::Ridge => check_all(f, "lambda", &self.ridge.lambda, nonneg, "λ ≥ 0"),
            Family::ElasticNet => {
                check_all(f, "lambda", &self.elastic_net.lambda, nonneg, "λ ≥ 0")?;
                check_all(
                    f,
                    "alpha",
                    &self.elastic_net.alpha,
                    |a| (0.0..=1.0).contains(&a),
                    "0 ≤ α ≤ 1",
                )
            }
            Family::RandomForest => {
                let g = &self.rf;
                check_all(f, "n_trees", &g.n_trees, |v| v >= 1, "n_trees ≥ 1")?;
                check_all(f, "max_depth", &g.max_depth, |_| true, "")?;
                check_all(
                    f,
                    "min_samples_leaf",
                    &g.min_samples_leaf,
                    |v| v >= 1,
                    "min_samples_leaf ≥ 1",
                )?;
                check_all(
                    f,
                    "feature_fraction",
                    &g.feature_fraction,
                    |v| v > 0.0 && v <= 1.0,
                    "0 < fraction ≤ 1",
                )?;
                check_all(f, "bootstrap", &g.bootstrap, |_| true, "")
            }
            Family::Gbm => {
                let g = &self.gbm;
                check_all(f, "n_stages", &g.n_stages, |v| v >= 1, "n_stages ≥ 1")?;
                check_all(
                    f,
                    "learning_rate",
                    &g.learning_rate,
                    |v| (0.0..=1.0).contains(&v),
                    "0 ≤ rate ≤ 1",
                )?;
                check_all(f, "max_depth", &g.max_depth, |_| true, "")?;
                check_all(
                    f,
                    "min_samples_leaf",
                    &g.min_samples_leaf,
                    |v| v >= 1,
                    "min_samples_leaf ≥ 1",
                )
            }
            Family::NeuralNet => {
                let g = &self.nn;
                check_all(f, "hidden_layers", &g.hidden_layers, |_| true, "")?;
                check_all(f, "width", &g.width, |v| v >= 1, "width ≥ 1")?;
                check_all(
                    f,
                    "step_size",
                    &g.step_size,
                    |v| v.is_finite() && v > 0.0,
                    "step size > 0",
                )?;
                check_all(f, "epochs", &g.epochs, |_| true, "")?;
                check_all(f, "batch_size", &g.batch_size, |v| v >= 1, "batch size ≥ 1")
            }
        }
    }

    /// Every combination for `family`, in row-major order of the parameter
    /// lists. `n_cols` turns forest feature fractions into counts.
    pub fn combinations(&self, family: Family, n_cols: usize) -> Result<Vec<Hyperparams>, TuneError> {
        self.validate(family)?;
        let mut out = Vec::new();
        match family {
            Family::Ols => out.push(Hyperparams::Ols),
            Family::Lasso => out.extend(self.lasso.lambda.iter().map(|&lambda| Hyperparams::Lasso { lambda })),
            Family::Ridge => out.extend(self.ridge.lambda.iter().map(|&lambda| Hyperparams::Ridge { lambda })),
            Family::ElasticNet => {
                for &lambda in &self.elastic_net.lambda {
                    for &alpha in &self.elastic_net.alpha {
                        out.push(Hyperparams::ElasticNet { lambda, alpha });
                    }
                }
            }
            Family::RandomForest => {
                let g = &self.rf;
                for &n_trees in &g.n_trees {
                    for &max_depth in &g.max_depth {
                        for &min_samples_leaf in &g.min_samples_leaf {
                            for &frac in &g.feature_fraction {
                                for &bootstrap in &g.bootstrap {
                                    let m = ((frac * n_cols as f64).ceil() as usize).clamp(1, n_cols.max(1));
                                    out.push(Hyperparams::Rf(ForestParams {
                                        n_trees,
                                        max_depth,
                                        min_samples_leaf,
                                        features_per_split: Some(m),
                                        bootstrap,
                                    }));
                                }
                            }
                        }
                    }
                }
            }
            Family::Gbm => {
                let g = &self.gbm;
                for &n_stages in &g.n_stages {
                    for &learning_rate in &g.learning_rate {
                        for &max_depth in &g.max_depth {
                            for &min_samples_leaf in &g.min_samples_leaf {
                                out.push(Hyperparams::Gbm(GbmParams {
                                    n_stages,
                                    learning_rate,
                                    max_depth,
                                    min_samples_leaf,
                                }));
                            }
                        }
                    }
                }
            }
            Family::NeuralNet => {
                let g = &self.nn;
                for &layers in &g.hidden_layers {
                    for &width in &g.width {
                        for &step_size in &g.step_size {
                            for &epochs in &g.epochs {
                                for &batch_size in &g.batch_size {
                                    out.push(Hyperparams::Nn(NnParams {
                                        hidden: vec![width; layers],
                                        epochs,
                                        step_size,
                                        batch_size,
                                    }));
                                }
                            }
                        }
                    }
                }
            }
        }
        // Fractions that round to the same count collapse here.
        let mut unique: Vec<Hyperparams> = Vec::with_capacity(out.len());
        for hp in out {
            if !unique.contains(&hp) {
                unique.push(hp);
            }
        }
        Ok(unique)
    }
}
