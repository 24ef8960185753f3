//! One training and prediction contract over all seven model families.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::linear::{self, LinearConfig, LinearModel};
use crate::neural::{self, MlpConfig, MlpModel};
use crate::preprocess::{ColumnMeta, EncodedDataset, Standardizer};
use crate::tree::{self, ForestModel, ForestParams, GbmModel, GbmParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "ols")]
    Ols,
    #[serde(rename = "lasso")]
    Lasso,
    #[serde(rename = "ridge")]
    Ridge,
    #[serde(rename = "elastic_net")]
    ElasticNet,
    #[serde(rename = "rf")]
    RandomForest,
    #[serde(rename = "gbm")]
    Gbm,
    #[serde(rename = "nn")]
    NeuralNet,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Ols,
        Family::Lasso,
        Family::Ridge,
        Family::ElasticNet,
        Family::RandomForest,
        Family::Gbm,
        Family::NeuralNet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Ols => "ols",
            Family::Lasso => "lasso",
            Family::Ridge => "ridge",
            Family::ElasticNet => "elastic_net",
            Family::RandomForest => "rf",
            Family::Gbm => "gbm",
            Family::NeuralNet => "nn",
        }
    }

    pub fn is_linear(self) -> bool {
        matches!(self, Family::Ols | Family::Lasso | Family::Ridge | Family::ElasticNet)
    }

    /// Linear and network pipelines standardize numeric columns first.
    pub fn standardizes(self) -> bool {
        self.is_linear() || self == Family::NeuralNet
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL.into_iter().find(|f| f.as_str() == s.trim()).ok_or_else(|| {
            format!("unknown model family '{s}' (expected one of ols, lasso, ridge, elastic_net, rf, gbm, nn)")
        })
    }
}

/// Network settings chosen by the search; the seed comes from the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnParams {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub step_size: f64,
    pub batch_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Hyperparams {
    Ols,
    Lasso { lambda: f64 },
    Ridge { lambda: f64 },
    ElasticNet { lambda: f64, alpha: f64 },
    Rf(ForestParams),
    Gbm(GbmParams),
    Nn(NnParams),
}

impl Hyperparams {
    pub fn family(&self) -> Family {
        match self {
            Hyperparams::Ols => Family::Ols,
            Hyperparams::Lasso { .. } => Family::Lasso,
            Hyperparams::Ridge { .. } => Family::Ridge,
            Hyperparams::ElasticNet { .. } => Family::ElasticNet,
            Hyperparams::Rf(_) => Family::RandomForest,
            Hyperparams::Gbm(_) => Family::Gbm,
            Hyperparams::Nn(_) => Family::NeuralNet,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Linear(LinearModel),
    Forest(ForestModel),
    Gbm(GbmModel),
    /// The network is trained on standardized targets.
    Mlp {
        network: MlpModel,
        y_mean: f64,
        y_std: f64,
    },
}

/// A fitted model with the preprocessing it needs at prediction time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub family: Family,
    pub hyperparams: Hyperparams,
    pub seed: u64,
    /// Column-layout fingerprint of the training matrix.
    pub fingerprint: String,
    pub standardizer: Option<Standardizer>,
    pub params: ModelParams,
}

/// Fit `hp` on a labeled dataset.
pub fn train(hp: &Hyperparams, data: &EncodedDataset, seed: u64) -> Result<TrainedModel> {
    train_matrix(hp, data.view(), data.targets().view(), data.column_meta(), seed)
}

/// Fit `hp` on a raw design matrix with the given column layout.
pub fn train_matrix(
    hp: &Hyperparams,
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    meta: &[ColumnMeta],
    seed: u64,
) -> Result<TrainedModel> {
    if meta.len() != x.ncols() {
        return Err(Error::Model(format!(
            "{} column descriptors for {} columns",
            meta.len(),
            x.ncols()
        )));
    }
    let family = hp.family();
    let standardizer = if family.standardizes() {
        Some(Standardizer::fit(x, meta)?)
    } else {
        None
    };
    let scaled;
    let x = match &standardizer {
        Some(s) => {
            scaled = s.apply(x)?;
            scaled.view()
        }
        None => x,
    };
    let cfg = LinearConfig::default();
    let params = match hp {
        Hyperparams::Ols => ModelParams::Linear(linear::fit_ols(x, y)?.0),
        Hyperparams::Ridge { lambda } => ModelParams::Linear(linear::fit_ridge(x, y, *lambda, false)?.0),
        Hyperparams::Lasso { lambda } => ModelParams::Linear(linear::fit_lasso(x, y, *lambda, &cfg)?.0),
        Hyperparams::ElasticNet { lambda, alpha } => {
            ModelParams::Linear(linear::fit_elastic_net(x, y, *lambda, *alpha, &cfg)?.0)
        }
        Hyperparams::Rf(p) => ModelParams::Forest(tree::fit_random_forest(x, y, p, seed)?),
        Hyperparams::Gbm(p) => ModelParams::Gbm(tree::fit_gbm(x, y, p, seed)?.model),
        Hyperparams::Nn(p) => {
            let n = y.len() as f64;
            let y_mean = y.sum() / n;
            let sd = (y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n).sqrt();
            let y_std = if sd > 0.0 { sd } else { 1.0 };
            let ys = y.mapv(|v| (v - y_mean) / y_std);
            let config = MlpConfig {
                hidden: p.hidden.clone(),
                epochs: p.epochs,
                step_size: p.step_size,
                batch_size: p.batch_size,
                seed,
            };
            let fit = neural::fit_mlp(x, ys.view(), &config)?;
            ModelParams::Mlp {
                network: fit.model,
                y_mean,
                y_std,
            }
        }
    };
    Ok(TrainedModel {
        family,
        hyperparams: hp.clone(),
        seed,
        fingerprint: crate::preprocess::fingerprint(meta),
        standardizer,
        params,
    })
}

impl TrainedModel {
    /// Predict for a dataset encoded under the same column layout.
    pub fn predict(&self, data: &EncodedDataset) -> Result<Array1<f64>> {
        let fp = data.fingerprint();
        if fp != self.fingerprint {
            return Err(Error::Model(format!(
                "{} model was trained on column layout {} but data has layout {}",
                self.family,
                &self.fingerprint[..12],
                &fp[..12]
            )));
        }
        self.predict_matrix(data.view())
    }

    /// Predict for a raw matrix; only the width is checked.
    pub fn predict_matrix(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        let scaled;
        let x = match &self.standardizer {
            Some(s) => {
                scaled = s.apply(x)?;
                scaled.view()
            }
            None => x,
        };
        Ok(match &self.params {
            ModelParams::Linear(m) => linear::predict(m, x)?,
            ModelParams::Forest(m) => m.predict(x)?,
            ModelParams::Gbm(m) => m.predict(x)?,
            ModelParams::Mlp { network, y_mean, y_std } => {
                neural::predict_mlp(network, x)?.mapv(|v| v * y_std + y_mean)
            }
        })
    }

    /// Tree ensembles expose impurity importance; other families return `None`.
    pub fn feature_importance(&self, meta: &[ColumnMeta]) -> Option<tree::FeatureImportance> {
        match &self.params {
            ModelParams::Forest(m) => Some(tree::feature_importance(m, meta)),
            ModelParams::Gbm(m) => Some(tree::feature_importance(m, meta)),
            _ => None,
        }
    }
}
