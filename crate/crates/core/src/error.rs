use thiserror::Error;

use crate::{data, evaluation, linear, neural, planning, preprocess, synth, tree, tuning};

/// Crate-level error; every module error converts into it.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] data::DataError),
    #[error(transparent)]
    Synth(#[from] synth::SynthError),
    #[error(transparent)]
    Preprocess(#[from] preprocess::PreprocessError),
    #[error(transparent)]
    Linear(#[from] linear::LinearError),
    #[error(transparent)]
    Tree(#[from] tree::TreeError),
    #[error(transparent)]
    Neural(#[from] neural::NeuralError),
    #[error(transparent)]
    Tuning(#[from] tuning::TuneError),
    #[error(transparent)]
    Evaluation(#[from] evaluation::EvalError),
    #[error(transparent)]
    Planning(#[from] planning::PlanError),
    #[error("model error: {0}")]
    Model(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
