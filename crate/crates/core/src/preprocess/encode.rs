use std::io::Write;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PreprocessError;
use crate::data::{
    derive_target, order_feature_defs, order_raw_row, FeatureKind, FeatureSchema, MissingPolicy, ProductOrder, RawValue,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ColumnOrigin {
    Category(String),
    Numeric,
    MissingIndicator,
}

/// Where an encoded column came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub feature: String,
    pub origin: ColumnOrigin,
}

impl ColumnMeta {
    /// Header used in CSV exports.
    pub fn label(&self) -> String {
        match &self.origin {
            ColumnOrigin::Category(v) => format!("{}={}", self.feature, v),
            ColumnOrigin::Numeric => self.feature.clone(),
            ColumnOrigin::MissingIndicator => format!("{}__missing", self.feature),
        }
    }

    pub fn is_numeric(&self) -> bool {
        self.origin == ColumnOrigin::Numeric
    }
}

/// Column layout implied by a schema: per feature, one column per vocabulary
/// entry, or the value column followed by an optional missing indicator.
pub fn column_meta(schema: &FeatureSchema) -> Vec<ColumnMeta> {
    let mut meta = Vec::new();
    for f in &schema.features {
        let feature = f.def.name.clone();
        match f.def.kind {
            FeatureKind::Categorical => {
                meta.extend(f.vocabulary.iter().map(|v| ColumnMeta {
                    feature: feature.clone(),
                    origin: ColumnOrigin::Category(v.clone()),
                }));
            }
            FeatureKind::Numerical => {
                meta.push(ColumnMeta {
                    feature: feature.clone(),
                    origin: ColumnOrigin::Numeric,
                });
                if f.def.missing == MissingPolicy::MedianWithIndicator {
                    meta.push(ColumnMeta {
                        feature,
                        origin: ColumnOrigin::MissingIndicator,
                    });
                }
            }
        }
    }
    meta
}

/// Hex SHA-256 of the column layout. Models carry it so they can refuse
/// matrices with a different layout.
pub fn fingerprint(meta: &[ColumnMeta]) -> String {
    let bytes = serde_json::to_vec(meta).expect("column meta serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// Encoded features without targets, as needed at prediction time.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub matrix: Array2<f64>,
    pub column_meta: Vec<ColumnMeta>,
    /// Categorical cells whose value is not in the training vocabulary.
    pub unseen_count: usize,
}

pub fn encode_features(schema: &FeatureSchema, rows: &[Vec<RawValue>]) -> Result<FeatureMatrix, PreprocessError> {
    let meta = column_meta(schema);
    let mut matrix = Array2::<f64>::zeros((rows.len(), meta.len()));
    let mut unseen = 0usize;
    for (i, row) in rows.iter().enumerate() {
        let mut col = 0usize;
        let mut out = matrix.row_mut(i);
        for (j, f) in schema.features.iter().enumerate() {
            match (&row[j], f.def.kind) {
                (RawValue::Category(v), FeatureKind::Categorical) => {
                    match f.vocabulary.binary_search(v) {
                        Ok(pos) => out[col + pos] = 1.0,
                        Err(_) => unseen += 1,
                    }
                    col += f.vocabulary.len();
                }
                (RawValue::Number(v), FeatureKind::Numerical) => {
                    let value = match (v, f.def.missing) {
                        (Some(v), MissingPolicy::MedianWithIndicator) => {
                            out[col + 1] = 0.0;
                            *v
                        }
                        (None, MissingPolicy::MedianWithIndicator) => {
                            out[col + 1] = 1.0;
                            f.impute_value.unwrap_or(0.0)
                        }
                        (Some(v), MissingPolicy::Forbid) => *v,
                        (None, MissingPolicy::Forbid) => f64::NAN,
                    };
                    if !value.is_finite() {
                        return Err(PreprocessError::NonFinite { row: i, column: col });
                    }
                    out[col] = value;
                    col += if f.def.missing == MissingPolicy::MedianWithIndicator {
                        2
                    } else {
                        1
                    };
                }
                (cell, kind) => panic!("feature {} expects {kind:?}, got {cell:?}", f.def.name),
            }
        }
    }
    if unseen > 0 {
        log::debug!("{unseen} categorical cells outside the training vocabulary");
    }
    Ok(FeatureMatrix {
        matrix,
        column_meta: meta,
        unseen_count: unseen,
    })
}

/// Design matrix, targets and layout metadata for labeled rows.
#[derive(Debug, Clone)]
pub struct EncodedDataset {
    matrix: Array2<f64>,
    targets: Array1<f64>,
    column_meta: Vec<ColumnMeta>,
    schema: FeatureSchema,
    row_ids: Vec<String>,
    unseen_count: usize,
}

/// One-hot encode `rows` under a schema learned on training rows.
pub fn one_hot_encode(
    schema: &FeatureSchema,
    rows: &[Vec<RawValue>],
    targets: Vec<f64>,
    row_ids: Vec<String>,
) -> Result<EncodedDataset, PreprocessError> {
    assert_eq!(rows.len(), targets.len());
    assert_eq!(rows.len(), row_ids.len());
    let fm = encode_features(schema, rows)?;
    if let Some(i) = targets.iter().position(|t| !t.is_finite()) {
        return Err(PreprocessError::NonFinite {
            row: i,
            column: fm.column_meta.len(),
        });
    }
    Ok(EncodedDataset {
        matrix: fm.matrix,
        targets: Array1::from(targets),
        column_meta: fm.column_meta,
        schema: schema.clone(),
        row_ids,
        unseen_count: fm.unseen_count,
    })
}

/// Encode labeled orders, learning the schema on `train_rows` only.
pub fn encode_orders(orders: &[ProductOrder], train_rows: &[usize]) -> Result<EncodedDataset, PreprocessError> {
    let raw: Vec<Vec<RawValue>> = orders.iter().map(order_raw_row).collect();
    let schema = FeatureSchema::learn(&order_feature_defs(), train_rows.iter().map(|&i| raw[i].as_slice()));
    let targets = orders
        .iter()
        .enumerate()
        .map(|(row, o)| {
            derive_target(o)
                .map(|t| t as f64)
                .map_err(|source| PreprocessError::Target { row, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let ids = orders.iter().map(|o| o.order_id.clone()).collect();
    one_hot_encode(&schema, &raw, targets, ids)
}

impl EncodedDataset {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn targets(&self) -> &Array1<f64> {
        &self.targets
    }

    pub fn column_meta(&self) -> &[ColumnMeta] {
        &self.column_meta
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn unseen_count(&self) -> usize {
        self.unseen_count
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn fingerprint(&self) -> String {
        fingerprint(&self.column_meta)
    }

    /// Rows `idx` in the given order. The unseen counter is not carried over.
    pub fn select_rows(&self, idx: &[usize]) -> EncodedDataset {
        EncodedDataset {
            matrix: self.matrix.select(Axis(0), idx),
            targets: self.targets.select(Axis(0), idx),
            column_meta: self.column_meta.clone(),
            schema: self.schema.clone(),
            row_ids: idx.iter().map(|&i| self.row_ids[i].clone()).collect(),
            unseen_count: 0,
        }
    }

    /// Replace targets; used to probe leakage.
    pub fn with_targets(mut self, targets: Array1<f64>) -> EncodedDataset {
        assert_eq!(targets.len(), self.targets.len());
        self.targets = targets;
        self
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.matrix.view()
    }

    /// CSV export: `order_id`, one column per encoded column, then `target`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["order_id".to_string()];
        header.extend(self.column_meta.iter().map(ColumnMeta::label));
        header.push("target".into());
        wtr.write_record(&header)?;
        for (i, id) in self.row_ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            rec.extend(self.matrix.row(i).iter().map(|v| v.to_string()));
            rec.push(self.targets[i].to_string());
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}
