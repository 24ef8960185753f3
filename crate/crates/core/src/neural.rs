//! Feed-forward network regressor: ReLU hidden layers, a linear output unit,
//! mean squared error, trained by plain mini-batch gradient descent.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::warn_if_unstandardized;
use crate::seed::rng_from_seed;

#[derive(Debug, Error, PartialEq)]
pub enum NeuralError {
    #[error("training diverged at epoch {epoch} (loss is not finite); try a step size below {step_size}")]
    Diverged { epoch: usize, step_size: f64 },
    #[error("invalid network config: {0}")]
    Config(String),
    #[error("network expects {expected} inputs, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("design matrix has {x} rows but target has {y}")]
    LengthMismatch { x: usize, y: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub step_size: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: vec![64],
            epochs: 100,
            step_size: 1e-2,
            batch_size: 64,
            seed: 0,
        }
    }
}

impl MlpConfig {
    fn validate(&self) -> Result<(), NeuralError> {
        if self.hidden.contains(&0) {
            return Err(NeuralError::Config("hidden layer widths must be positive".into()));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(NeuralError::Config(format!(
                "step size must be positive, got {}",
                self.step_size
            )));
        }
        if self.batch_size == 0 {
            return Err(NeuralError::Config("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Weights are `outputs × inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layer_sizes: Vec<usize>,
    pub layers: Vec<DenseLayer>,
    pub config: MlpConfig,
}

impl MlpModel {
    /// Glorot-uniform weights `U(±√(6/(fan_in+fan_out)))`, zero biases.
    pub fn init<R: Rng>(input_dim: usize, config: &MlpConfig, rng: &mut R) -> MlpModel {
        let mut layer_sizes = vec![input_dim];
        layer_sizes.extend(&config.hidden);
        layer_sizes.push(1);
        let layers = layer_sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                DenseLayer {
                    weights: Array2::from_shape_fn((fan_out, fan_in), |_| rng.random_range(-limit..=limit)),
                    bias: Array1::zeros(fan_out),
                }
            })
            .collect();
        MlpModel {
            layer_sizes,
            layers,
            config: config.clone(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// All parameters, layer by layer, weights (row-major) before biases.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn set_params_flat(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.n_params());
        let mut it = params.iter();
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w = *it.next().unwrap());
            l.bias.iter_mut().for_each(|b| *b = *it.next().unwrap());
        }
    }

    /// Pre-activations of every layer; the last one is the output.
    fn forward(&self, x: ArrayView2<'_, f64>) -> Vec<Array2<f64>> {
        let mut zs = Vec::with_capacity(self.layers.len());
        let mut a = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let z = a.dot(&l.weights.t()) + &l.bias;
            a = if i < last { z.mapv(relu) } else { z.clone() };
            zs.push(z);
        }
        zs
    }
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

fn check_width(model: &MlpModel, x: ArrayView2<'_, f64>) -> Result<(), NeuralError> {
    if x.ncols() != model.input_dim() {
        return Err(NeuralError::WidthMismatch {
            expected: model.input_dim(),
            got: x.ncols(),
        });
    }
    Ok(())
}

pub fn predict_mlp(model: &MlpModel, x: ArrayView2<'_, f64>) -> Result<Array1<f64>, NeuralError> {
    check_width(model, x)?;
    let zs = model.forward(x);
    Ok(zs.last().expect("at least one layer").column(0).to_owned())
}

/// Mean squared error on `(x, y)` and its gradient by backpropagation, laid
/// out like the model's layers.
pub fn loss_and_gradient(model: &MlpModel, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> (f64, Vec<DenseLayer>) {
    let b = x.nrows() as f64;
    let zs = model.forward(x);
    let out = zs.last().unwrap().column(0).to_owned();
    let err = &out - &y;
    let loss = err.dot(&err) / b;

    let mut grads: Vec<DenseLayer> = Vec::with_capacity(model.layers.len());
    // dL/dz for the output layer.
    let mut delta: Array2<f64> = (err * (2.0 / b)).insert_axis(Axis(1));
    for i in (0..model.layers.len()).rev() {
        let input = if i == 0 { x.to_owned() } else { zs[i - 1].mapv(relu) };
        grads.push(DenseLayer {
            weights: delta.t().dot(&input),
            bias: delta.sum_axis(Axis(0)),
        });
        if i > 0 {
            let back = delta.dot(&model.layers[i].weights);
            delta = back * zs[i - 1].mapv(|z| if z > 0.0 { 1.0 } else { 0.0 });
        }
    }
    grads.reverse();
    (loss, grads)
}

#[derive(Debug, Clone)]
pub struct MlpFit {
    pub model: MlpModel,
    /// Full training MSE after each epoch.
    pub loss_history: Vec<f64>,
}

/// Train with mini-batch gradient descent. Batch order is reshuffled every
/// epoch from the seeded stream, except in full-batch mode where rows keep
/// their order.
pub fn fit_mlp(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, config: &MlpConfig) -> Result<MlpFit, NeuralError> {
    config.validate()?;
    if x.nrows() != y.len() {
        return Err(NeuralError::LengthMismatch {
            x: x.nrows(),
            y: y.len(),
        });
    }
    if x.nrows() == 0 {
        return Err(NeuralError::Config("no training rows".into()));
    }
    warn_if_unstandardized(x, "network training may be slow or unstable");
    let mut rng = rng_from_seed(config.seed);
    let mut model = MlpModel::init(x.ncols(), config, &mut rng);
    let n = x.nrows();
    let full_batch = config.batch_size >= n;
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        if !full_batch {
            order.shuffle(&mut rng);
        }
        for chunk in order.chunks(config.batch_size) {
            let (bx, by) = if full_batch {
                (x.to_owned(), y.to_owned())
            } else {
                (x.select(Axis(0), chunk), y.select(Axis(0), chunk))
            };
            let (_, grads) = loss_and_gradient(&model, bx.view(), by.view());
            for (l, g) in model.layers.iter_mut().zip(&grads) {
                l.weights.scaled_add(-config.step_size, &g.weights);
                l.bias.scaled_add(-config.step_size, &g.bias);
            }
        }
        let pred = predict_mlp(&model, x)?;
        let loss = (&pred - &y).mapv(|v| v * v).mean().unwrap();
        if !loss.is_finite() {
            return Err(NeuralError::Diverged {
                epoch,
                step_size: config.step_size,
            });
        }
        history.push(loss);
    }
    Ok(MlpFit {
        model,
        loss_history: history,
    })
}

/// A gradient flattened like
/// [`MlpModel::params_flat`].
pub fn flatten(layers: &[DenseLayer]) -> Vec<f64> {
    let mut out = Vec::new();
    for l in layers {
        out.extend(l.weights.iter());
        out.extend(l.bias.iter());
    }
    out
}
