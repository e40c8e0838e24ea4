use serde::{Deserialize, Serialize};

use crate::data::{FeatureSet, Label, Scaler};
use crate::error::{Error, Result};

/// One prototype sample restricted to the model's features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prototype {
    pub sample_id: usize,
    pub label: Label,
    /// Raw (unscaled) values, aligned with the model's feature set.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub train_error: usize,
    pub iterations: usize,
    pub seed: u64,
    pub distance: String,
    pub n: usize,
    pub p: usize,
    /// Unix seconds; only set when stamping is requested so model files
    /// stay reproducible by default.
    pub created_at: Option<u64>,
}

/// A trained classifier: two prototypes compared over a sparse feature set.
///
/// `same` is the prototype that shares the winning pivot's class and wins
/// distance ties.
#[derive(Debug, Clone, PartialEq)]
pub struct NlModel {
    /// Indices into the training schema, ascending.
    pub features: FeatureSet,
    pub feature_names: Vec<String>,
    pub same: Prototype,
    pub opposite: Prototype,
    /// Min-max ranges of the model features when trained on scaled input.
    pub scaler: Option<Scaler>,
    /// Raw label strings for classes 0 and 1.
    pub class_names: [String; 2],
    pub meta: ModelMeta,
}

impl NlModel {
    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.features.len();
        if m < 2 {
            return Err(Error::Model(format!("model needs at least 2 features, has {m}")));
        }
        if self.features.as_slice().windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Model("feature indices must be strictly ascending".into()));
        }
        self.features
            .check_bounds(self.meta.p)
            .map_err(|e| Error::Model(e.to_string()))?;
        if self.feature_names.len() != m {
            return Err(Error::Model(format!(
                "{} feature names for {m} features",
                self.feature_names.len()
            )));
        }
        for proto in [&self.same, &self.opposite] {
            if proto.values.len() != m {
                return Err(Error::Model(format!(
                    "prototype {} has {} values for {m} features",
                    proto.sample_id,
                    proto.values.len()
                )));
            }
            if proto.label > 1 {
                return Err(Error::Model(format!("prototype label {} is not 0 or 1", proto.label)));
            }
            if proto.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Model("prototype values must be finite".into()));
            }
        }
        if self.same.label == self.opposite.label {
            return Err(Error::Model("prototypes must have distinct labels".into()));
        }
        if let Some(sc) = &self.scaler {
            if sc.len() != m || sc.max.len() != m {
                return Err(Error::Model(format!("scaler covers {} features, model has {m}", sc.len())));
            }
            if sc.min.iter().zip(&sc.max).any(|(lo, hi)| lo.partial_cmp(hi).is_none_or(|o| o.is_gt())) {
                return Err(Error::Model("scaler min exceeds max".into()));
            }
        }
        Ok(())
    }

    /// Projects a row onto the model features, in the space distances are
    /// measured in. Accepts full-width rows (length `p`) or rows already
    /// restricted to the model features.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let raw: Vec<f64> = if x.len() == self.meta.p {
            self.features.iter().map(|j| x[j]).collect()
        } else if x.len() == self.features.len() {
            x.to_vec()
        } else {
            return Err(Error::DimensionMismatch {
                expected: self.meta.p,
                found: x.len(),
            });
        };
        Ok(self.to_metric_space(&raw))
    }

    pub(crate) fn to_metric_space(&self, raw: &[f64]) -> Vec<f64> {
        match &self.scaler {
            Some(sc) => raw.iter().enumerate().map(|(k, &v)| sc.scale(k, v)).collect(),
            None => raw.to_vec(),
        }
    }

    /// Label string of class `label`.
    pub fn class_name(&self, label: Label) -> &str {
        &self.class_names[label as usize]
    }
}
