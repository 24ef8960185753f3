//! Availability-date prediction for purchase orders.
//!
//! The crate covers the whole modelling path: order records and their CSV
//! format ([`data`]), a synthetic order generator with known ground truth
//! ([`synth`]), encoding and splitting ([`preprocess`]), seven regression
//! families ([`linear`], [`tree`], [`neural`]) behind one [`model::TrainedModel`]
//! contract, cross-validated random grid search ([`tuning`]), metrics and plot
//! payloads ([`evaluation`]) and the planning-date protocol ([`planning`]).

pub mod data;
pub mod evaluation;
pub mod linear;
pub mod model;
pub mod neural;
pub mod planning;
pub mod preprocess;
pub mod seed;
pub mod synth;
pub mod tree;
pub mod tuning;

mod error;

pub use error::{Error, Result};
