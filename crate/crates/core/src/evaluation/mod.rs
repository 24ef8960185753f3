//! Error metrics, plot payloads and the cross-model comparison report.

mod metrics;
mod plots;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Family, TrainedModel};
use crate::preprocess::EncodedDataset;

pub use metrics::{mae, metrics, r2, rmse, Metrics};
pub use plots::{
    bar_svg, forty_five_degree_data, forty_five_svg, histogram_svg, prediction_difference_histogram, FortyFive,
    Histogram,
};

pub const DEFAULT_BINS: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("nothing to evaluate")]
    Empty,
    #[error("{y_true} true values but {y_pred} predictions")]
    LengthMismatch { y_true: usize, y_pred: usize },
    #[error("histogram needs at least one bin")]
    BadBins,
    #[error("model '{model}' was trained on column layout {expected}, data has {got}")]
    FingerprintMismatch {
        model: String,
        expected: String,
        got: String,
    },
    #[error("train and test data have different column layouts")]
    SplitMismatch,
    #[error("model '{model}' failed to predict: {message}")]
    Predict { model: String, message: String },
    #[error("metric identity violated for '{model}': {detail}")]
    Identity { model: String, detail: String },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlotPayload {
    pub train: Option<FortyFive>,
    pub test: Option<FortyFive>,
    pub histogram: Option<Histogram>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEvaluation {
    pub name: String,
    pub family: Family,
    pub train: Metrics,
    pub test: Metrics,
    pub train_rows: usize,
    pub test_rows: usize,
    pub test_spread: f64,
    /// Plot data is written as CSV, not into the JSON report.
    #[serde(skip)]
    pub plots: PlotPayload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub fingerprint: String,
    pub models: Vec<ModelEvaluation>,
    /// Model names by test RMSE, best first.
    pub ranking: Vec<String>,
}

/// Metrics and plot data for one model's train and test predictions.
pub fn evaluate_predictions(
    name: &str,
    family: Family,
    train: (ArrayView1<'_, f64>, ArrayView1<'_, f64>),
    test: (ArrayView1<'_, f64>, ArrayView1<'_, f64>),
    n_bins: usize,
) -> Result<ModelEvaluation, EvalError> {
    let test_plot = forty_five_degree_data(test.0, test.1)?;
    Ok(ModelEvaluation {
        name: name.to_string(),
        family,
        train: metrics(train.0, train.1)?,
        test: metrics(test.0, test.1)?,
        train_rows: train.0.len(),
        test_rows: test.0.len(),
        test_spread: test_plot.spread,
        plots: PlotPayload {
            train: Some(forty_five_degree_data(train.0, train.1)?),
            histogram: Some(prediction_difference_histogram(test.0, test.1, n_bins)?),
            test: Some(test_plot),
        },
    })
}

/// Evaluate every model on both splits and rank by test RMSE. Models are
/// named by family; a repeated family gets a `_2`, `_3`... suffix.
pub fn comparison_report(
    models: &[TrainedModel],
    train: &EncodedDataset,
    test: &EncodedDataset,
    n_bins: usize,
) -> Result<EvaluationReport, EvalError> {
    if models.is_empty() {
        return Err(EvalError::Empty);
    }
    let fingerprint = train.fingerprint();
    if test.fingerprint() != fingerprint {
        return Err(EvalError::SplitMismatch);
    }
    let mut names: Vec<String> = Vec::with_capacity(models.len());
    for m in models {
        let base = m.family.as_str().to_string();
        let dup = names
            .iter()
            .filter(|n| n.as_str() == base || n.starts_with(&format!("{base}_")))
            .count();
        names.push(if dup == 0 { base } else { format!("{base}_{}", dup + 1) });
    }
    let mut evals = Vec::with_capacity(models.len());
    for (m, name) in models.iter().zip(&names) {
        if m.fingerprint != fingerprint {
            return Err(EvalError::FingerprintMismatch {
                model: name.clone(),
                expected: fingerprint.clone(),
                got: m.fingerprint.clone(),
            });
        }
        let predict = |d: &EncodedDataset| {
            m.predict(d).map_err(|e| EvalError::Predict {
                model: name.clone(),
                message: e.to_string(),
            })
        };
        let p_train = predict(train)?;
        let p_test = predict(test)?;
        evals.push(evaluate_predictions(
            name,
            m.family,
            (train.targets().view(), p_train.view()),
            (test.targets().view(), p_test.view()),
            n_bins,
        )?);
    }
    let report = EvaluationReport::new(fingerprint, evals);
    report.verify()?;
    Ok(report)
}

impl EvaluationReport {
    /// Ranks by test RMSE; equal scores keep input order.
    pub fn new(fingerprint: String, models: Vec<ModelEvaluation>) -> EvaluationReport {
        let mut order: Vec<usize> = (0..models.len()).collect();
        order.sort_by(|&a, &b| models[a].test.rmse.total_cmp(&models[b].test.rmse));
        let ranking = order.into_iter().map(|i| models[i].name.clone()).collect();
        EvaluationReport {
            fingerprint,
            models,
            ranking,
        }
    }

    /// rmse ≥ mae ≥ 0, R² ≤ 1, histogram mass equals the test row count and
    /// the 45-degree spread equals rmse/√2.
    pub fn verify(&self) -> Result<(), EvalError> {
        for m in &self.models {
            let fail = |detail: String| EvalError::Identity {
                model: m.name.clone(),
                detail,
            };
            for (split, x) in [("train", &m.train), ("test", &m.test)] {
                if !(x.mae >= 0.0 && x.rmse >= x.mae * (1.0 - 1e-12)) {
                    return Err(fail(format!("{split} rmse {} < mae {}", x.rmse, x.mae)));
                }
                if x.r2.is_some_and(|r| r > 1.0) {
                    return Err(fail(format!("{split} R² above 1")));
                }
            }
            if let Some(h) = &m.plots.histogram {
                if h.total() != m.test_rows {
                    return Err(fail(format!("histogram holds {} of {} rows", h.total(), m.test_rows)));
                }
            }
            if (m.test_spread - m.test.rmse / 2f64.sqrt()).abs() > 1e-12 * m.test.rmse.max(1.0) {
                return Err(fail("spread differs from rmse/√2".into()));
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&ModelEvaluation> {
        self.models.iter().find(|m| m.name == name)
    }

    /// Writes `report.json`, `45deg_<model>_<split>.csv`, `hist_<model>.csv`,
    /// matching SVGs and `rmse_comparison.svg` into `dir`. Returns the paths
    /// in write order.
    pub fn write_artifacts(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut put = |name: String, bytes: Vec<u8>| -> io::Result<()> {
            let p = dir.join(name);
            fs::write(&p, bytes)?;
            written.push(p);
            Ok(())
        };
        let mut json = serde_json::to_vec_pretty(self).map_err(io::Error::other)?;
        json.push(b'\n');
        put("report.json".into(), json)?;
        for m in &self.models {
            for (split, pts) in [("train", &m.plots.train), ("test", &m.plots.test)] {
                let Some(pts) = pts else { continue };
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["y_true", "y_pred"])?;
                for (t, p) in pts.y_true.iter().zip(&pts.y_pred) {
                    w.write_record([t.to_string(), p.to_string()])?;
                }
                put(
                    format!("45deg_{}_{split}.csv", m.name),
                    w.into_inner().map_err(io::Error::other)?,
                )?;
                put(
                    format!("45deg_{}_{split}.svg", m.name),
                    forty_five_svg(pts, &format!("{} ({split})", m.name)).into_bytes(),
                )?;
            }
            if let Some(h) = &m.plots.histogram {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["bin_lo", "bin_hi", "count"])?;
                for (i, c) in h.counts.iter().enumerate() {
                    w.write_record([h.edges[i].to_string(), h.edges[i + 1].to_string(), c.to_string()])?;
                }
                put(
                    format!("hist_{}.csv", m.name),
                    w.into_inner().map_err(io::Error::other)?,
                )?;
                put(
                    format!("hist_{}.svg", m.name),
                    histogram_svg(h, &format!("{} prediction difference", m.name)).into_bytes(),
                )?;
            }
        }
        let bars: Vec<(String, f64)> = self.models.iter().map(|m| (m.name.clone(), m.test.rmse)).collect();
        put(
            "rmse_comparison.svg".into(),
            bar_svg(&bars, "Test RMSE", "RMSE (days)").into_bytes(),
        )?;
        Ok(written)
    }
}
