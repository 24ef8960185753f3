use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ProductOrder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Categorical,
    Numerical,
}

/// What to do with a missing numerical value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// The feature is never missing.
    Forbid,
    /// Impute the training median and add a 0/1 missing-indicator column.
    MedianWithIndicator,
}

/// A feature before anything has been learned from data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDef {
    pub name: String,
    pub kind: FeatureKind,
    pub missing: MissingPolicy,
}

impl FeatureDef {
    pub fn categorical(name: &str) -> Self {
        FeatureDef {
            name: name.into(),
            kind: FeatureKind::Categorical,
            missing: MissingPolicy::Forbid,
        }
    }

    pub fn numerical(name: &str) -> Self {
        FeatureDef {
            name: name.into(),
            kind: FeatureKind::Numerical,
            missing: MissingPolicy::Forbid,
        }
    }

    pub fn numerical_with_missing(name: &str) -> Self {
        FeatureDef {
            missing: MissingPolicy::MedianWithIndicator,
            ..Self::numerical(name)
        }
    }
}

/// A single raw cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RawValue {
    Category(String),
    Number(Option<f64>),
}

/// A feature with its learned state: a sorted vocabulary for categoricals,
/// the imputation median for numericals that may be missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub def: FeatureDef,
    pub vocabulary: Vec<String>,
    pub impute_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<FeatureSpec>,
}

impl FeatureSchema {
    /// Learn vocabularies and medians from training rows only.
    ///
    /// # Panics
    /// If a row is shorter than `defs` or a cell has the wrong kind.
    pub fn learn<'a, I>(defs: &[FeatureDef], rows: I) -> FeatureSchema
    where
        I: IntoIterator<Item = &'a [RawValue]>,
    {
        let mut vocab: Vec<BTreeSet<String>> = vec![BTreeSet::new(); defs.len()];
        let mut observed: Vec<Vec<f64>> = vec![Vec::new(); defs.len()];
        for row in rows {
            for (j, def) in defs.iter().enumerate() {
                match (&row[j], def.kind) {
                    (RawValue::Category(c), FeatureKind::Categorical) => {
                        if !vocab[j].contains(c) {
                            vocab[j].insert(c.clone());
                        }
                    }
                    (RawValue::Number(v), FeatureKind::Numerical) => {
                        if let Some(v) = v {
                            if def.missing == MissingPolicy::MedianWithIndicator {
                                observed[j].push(*v);
                            }
                        }
                    }
                    (cell, kind) => panic!("feature {} expects {kind:?}, got {cell:?}", def.name),
                }
            }
        }
        let features = defs
            .iter()
            .zip(vocab)
            .zip(observed)
            .map(|((def, vocab), mut obs)| FeatureSpec {
                impute_value: (def.missing == MissingPolicy::MedianWithIndicator)
                    .then(|| median(&mut obs).unwrap_or(0.0)),
                vocabulary: vocab.into_iter().collect(),
                def: def.clone(),
            })
            .collect();
        FeatureSchema { features }
    }

    pub fn feature_names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.def.name.as_str())
    }
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// The ten order features, in encoding order.
pub fn order_feature_defs() -> Vec<FeatureDef> {
    vec![
        FeatureDef::categorical("part_number"),
        FeatureDef::categorical("supplier_code"),
        FeatureDef::categorical("supplier_location"),
        FeatureDef::numerical("product_cost"),
        FeatureDef::numerical("product_amount"),
        FeatureDef::categorical("product_details"),
        FeatureDef::numerical_with_missing("contract_delivery_time"),
        FeatureDef::numerical("latest_need_by_days"),
        FeatureDef::numerical("latest_promised_days"),
        FeatureDef::numerical("approval_days"),
    ]
}

/// Raw cells of an order, aligned with [`order_feature_defs`].
pub fn order_raw_row(order: &ProductOrder) -> Vec<RawValue> {
    let off = order.date_offsets();
    vec![
        RawValue::Category(order.part_number.clone()),
        RawValue::Category(order.supplier_code.clone()),
        RawValue::Category(order.supplier_location()),
        RawValue::Number(Some(order.product_cost)),
        RawValue::Number(Some(f64::from(order.product_amount))),
        RawValue::Category(order.product_details.clone()),
        RawValue::Number(order.contract_delivery_time.map(f64::from)),
        RawValue::Number(Some(off.need_by_days as f64)),
        RawValue::Number(Some(off.promised_days as f64)),
        RawValue::Number(Some(off.approval_days as f64)),
    ]
}
