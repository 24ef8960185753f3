use serde::{Deserialize, Serialize};

use super::{ForestModel, GbmModel, RegressionTree};
use crate::preprocess::ColumnMeta;

pub trait TreeEnsemble {
    fn members(&self) -> &[RegressionTree];
}

impl TreeEnsemble for ForestModel {
    fn members(&self) -> &[RegressionTree] {
        &self.trees
    }
}

impl TreeEnsemble for GbmModel {
    fn members(&self) -> &[RegressionTree] {
        &self.stages
    }
}

/// Mean decrease in impurity per encoded column, each split weighted by the
/// fraction of the tree's samples reaching it, averaged over trees.
pub fn column_importance<E: TreeEnsemble + ?Sized>(model: &E, n_columns: usize) -> Vec<f64> {
    let trees = model.members();
    let mut imp = vec![0.0; n_columns];
    for t in trees {
        let root = t.nodes[0].n_samples as f64;
        for node in &t.nodes {
            if let Some(s) = node.split {
                imp[s.column] += node.n_samples as f64 / root * node.impurity_decrease;
            }
        }
    }
    if !trees.is_empty() {
        imp.iter_mut().for_each(|v| *v /= trees.len() as f64);
    }
    imp
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    /// `(source feature, percentage)` in column-layout order.
    pub features: Vec<(String, f64)>,
    /// The model never split; every percentage is zero.
    pub no_splits: bool,
}

impl FeatureImportance {
    pub fn ranked(&self) -> Vec<(String, f64)> {
        let mut r = self.features.clone();
        r.sort_by(|a, b| b.1.total_cmp(&a.1));
        r
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["feature", "percentage"])?;
        for (f, p) in self.ranked() {
            wtr.write_record([f, p.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Importance aggregated from encoded columns back to their source features
/// and normalized to percentages.
pub fn feature_importance<E: TreeEnsemble + ?Sized>(model: &E, column_meta: &[ColumnMeta]) -> FeatureImportance {
    let cols = column_importance(model, column_meta.len());
    let mut features: Vec<(String, f64)> = Vec::new();
    for (meta, v) in column_meta.iter().zip(cols) {
        match features.iter_mut().find(|(f, _)| *f == meta.feature) {
            Some(entry) => entry.1 += v,
            None => features.push((meta.feature.clone(), v)),
        }
    }
    let total: f64 = features.iter().map(|f| f.1).sum();
    let no_splits = total.is_nan() || total <= 0.0;
    if no_splits {
        features.iter_mut().for_each(|f| f.1 = 0.0);
    } else {
        features.iter_mut().for_each(|f| f.1 = 100.0 * f.1 / total);
    }
    FeatureImportance { features, no_splits }
}
