//! Least squares, ridge, lasso and elastic net.
//!
//! All four minimize the unscaled squared error
//! `Σ (wᵀxᵢ + b − yᵢ)²` plus, for the penalized families,
//! `λ (α Σ|wⱼ| + (1 − α) Σ wⱼ²)` with `α = 1` for lasso and `α = 0` for
//! ridge. There is no `1/n` or `1/2` factor on either term.
//!
//! The intercept is unpenalized unless `penalize_bias` is set, in which case
//! it is treated as one more penalized coordinate.

mod cd;
mod linalg;

use crate::preprocess::warn_if_unstandardized;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cd::soft_threshold;

#[derive(Debug, Error, PartialEq)]
pub enum LinearError {
    #[error("no training rows")]
    Empty,
    #[error("design matrix has {x} rows but target has {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("lambda must be a finite value ≥ 0, got {0}")]
    BadLambda(f64),
    #[error("alpha must lie in [0, 1], got {0}")]
    BadAlpha(f64),
    #[error("model expects {expected} columns, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("non-finite value in the design matrix or target")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearFamily {
    Ols,
    Ridge,
    Lasso,
    ElasticNet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub family: LinearFamily,
    pub weights: Array1<f64>,
    pub bias: f64,
    pub lambda: f64,
    /// Only set for elastic net.
    pub alpha: Option<f64>,
    pub penalize_bias: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub objective: f64,
    pub converged: bool,
    pub max_change: f64,
    /// Objective after each coordinate-descent sweep (empty for closed forms).
    pub objective_history: Vec<f64>,
    /// Diagonal jitter used when the Gram matrix was singular.
    pub jitter: Option<f64>,
}

/// Solver knobs shared by the penalized fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearConfig {
    pub penalize_bias: bool,
    /// Coordinate descent stops once no coordinate moves more than this.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            penalize_bias: false,
            tol: 1e-6,
            max_sweeps: 10_000,
        }
    }
}

fn check_inputs(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<(), LinearError> {
    if x.nrows() != y.len() {
        return Err(LinearError::LengthMismatch {
            x: x.nrows(),
            y: y.len(),
        });
    }
    if x.nrows() == 0 {
        return Err(LinearError::Empty);
    }
    if !x.iter().chain(y.iter()).all(|v| v.is_finite()) {
        return Err(LinearError::NonFinite);
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<(), LinearError> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(LinearError::BadLambda(lambda))
    }
}

/// The penalized objective of `model` on `(x, y)`.
pub fn objective(model: &LinearModel, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> f64 {
    let pred = x.dot(&model.weights) + model.bias;
    let sse: f64 = pred.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum();
    let alpha = match model.family {
        LinearFamily::Ols => return sse,
        LinearFamily::Ridge => 0.0,
        LinearFamily::Lasso => 1.0,
        LinearFamily::ElasticNet => model.alpha.unwrap_or(1.0),
    };
    let mut l1: f64 = model.weights.iter().map(|w| w.abs()).sum();
    let mut l2: f64 = model.weights.iter().map(|w| w * w).sum();
    if model.penalize_bias {
        l1 += model.bias.abs();
        l2 += model.bias * model.bias;
    }
    sse + model.lambda * (alpha * l1 + (1.0 - alpha) * l2)
}

/// Ordinary least squares through the normal equations.
pub fn fit_ols(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<(LinearModel, FitDiagnostics), LinearError> {
    let (mut model, diag) = closed_form(x, y, 0.0, false)?;
    model.family = LinearFamily::Ols;
    Ok((model, diag))
}

/// Ridge regression, solved in closed form from `(XᵀX + λI) w = Xᵀy` on
/// centered data (or on the intercept-augmented design when the bias is
/// penalized).
pub fn fit_ridge(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    lambda: f64,
    penalize_bias: bool,
) -> Result<(LinearModel, FitDiagnostics), LinearError> {
    check_lambda(lambda)?;
    closed_form(x, y, lambda, penalize_bias)
}

fn closed_form(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    lambda: f64,
    penalize_bias: bool,
) -> Result<(LinearModel, FitDiagnostics), LinearError> {
    check_inputs(x, y)?;
    let d = x.ncols();
    let (weights, bias, jitter) = if penalize_bias {
        let mut a = Array2::<f64>::ones((x.nrows(), d + 1));
        a.slice_mut(ndarray::s![.., 1..]).assign(&x);
        let mut gram = a.t().dot(&a);
        gram.diag_mut().mapv_inplace(|v| v + lambda);
        let rhs = a.t().dot(&y);
        let (beta, jitter) = linalg::solve_spd(&gram, &rhs);
        (beta.slice(ndarray::s![1..]).to_owned(), beta[0], jitter)
    } else {
        let x_mean = x.mean_axis(Axis(0)).expect("nonempty");
        let y_mean = y.mean().expect("nonempty");
        let xc = &x - &x_mean;
        let yc = &y - y_mean;
        let mut gram = xc.t().dot(&xc);
        gram.diag_mut().mapv_inplace(|v| v + lambda);
        let rhs = xc.t().dot(&yc);
        let (w, jitter) = linalg::solve_spd(&gram, &rhs);
        let bias = y_mean - x_mean.dot(&w);
        (w, bias, jitter)
    };
    let model = LinearModel {
        family: LinearFamily::Ridge,
        weights,
        bias,
        lambda,
        alpha: None,
        penalize_bias,
    };
    let diag = FitDiagnostics {
        iterations: 1,
        objective: objective(&model, x, y),
        converged: true,
        max_change: 0.0,
        objective_history: Vec::new(),
        jitter,
    };
    Ok((model, diag))
}

/// Lasso by cyclic coordinate descent with soft-threshold updates.
pub fn fit_lasso(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    lambda: f64,
    config: &LinearConfig,
) -> Result<(LinearModel, FitDiagnostics), LinearError> {
    check_lambda(lambda)?;
    check_inputs(x, y)?;
    warn_if_unstandardized(x, "penalties will be scale dependent");
    let (mut model, diag) = cd::coordinate_descent(x, y, lambda, 1.0, config);
    model.family = LinearFamily::Lasso;
    Ok((model, diag))
}

/// Elastic net by coordinate descent; `alpha = 1` is lasso, `alpha = 0` ridge.
pub fn fit_elastic_net(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    lambda: f64,
    alpha: f64,
    config: &LinearConfig,
) -> Result<(LinearModel, FitDiagnostics), LinearError> {
    check_lambda(lambda)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(LinearError::BadAlpha(alpha));
    }
    check_inputs(x, y)?;
    warn_if_unstandardized(x, "penalties will be scale dependent");
    let (mut model, diag) = cd::coordinate_descent(x, y, lambda, alpha, config);
    model.family = LinearFamily::ElasticNet;
    model.alpha = Some(alpha);
    Ok((model, diag))
}

/// `ŷ = Xw + b`.
pub fn predict(model: &LinearModel, x: ArrayView2<'_, f64>) -> Result<Array1<f64>, LinearError> {
    if x.ncols() != model.weights.len() {
        return Err(LinearError::WidthMismatch {
            expected: model.weights.len(),
            got: x.ncols(),
        });
    }
    Ok(x.dot(&model.weights) + model.bias)
}
