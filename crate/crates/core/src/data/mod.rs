//! Order records, the dataset container, the CSV exchange format and the
//! feature schema shared by every downstream stage.

mod csv_io;
mod order;
mod schema;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use csv_io::{
    read_orders, read_orders_path, write_orders, write_orders_path, DiagnosticKind, Ingested, RowDiagnostic,
};
pub use order::{
    days_between, derive_target, validate_order, DateOffsets, ProductOrder, Violation, LOCATION_SEPARATOR,
};
pub use schema::{
    order_feature_defs, order_raw_row, FeatureDef, FeatureKind, FeatureSchema, FeatureSpec, MissingPolicy, RawValue,
};

#[cfg(test)]
pub(crate) use order::sample_order;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("order {0} has no availability date")]
    TargetUnavailable(String),
    #[error("order {order_id} is invalid: {reason}")]
    InvalidRecord { order_id: String, reason: String },
    #[error("duplicate order id {0}")]
    DuplicateOrderId(String),
    #[error("dataset is empty")]
    Empty,
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Synthetic,
    Ingested,
}

/// An ordered collection of orders with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    orders: Vec<ProductOrder>,
    provenance: Provenance,
}

impl Dataset {
    pub fn new(orders: Vec<ProductOrder>, provenance: Provenance) -> Result<Self, DataError> {
        let mut seen = HashSet::with_capacity(orders.len());
        for o in &orders {
            if !seen.insert(o.order_id.as_str()) {
                return Err(DataError::DuplicateOrderId(o.order_id.clone()));
            }
        }
        Ok(Dataset { orders, provenance })
    }

    pub fn orders(&self) -> &[ProductOrder] {
        &self.orders
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    /// Targets for every order, failing on the first unlabeled one.
    pub fn targets(&self) -> Result<Vec<i64>, DataError> {
        self.orders.iter().map(derive_target).collect()
    }

    pub fn into_orders(self) -> Vec<ProductOrder> {
        self.orders
    }
}
