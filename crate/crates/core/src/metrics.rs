use serde::Serialize;

use crate::data::{Dataset, Label};
use crate::error::{Error, Result};
use crate::model::NlModel;

/// Binary confusion counts with label 1 as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn correct(&self) -> usize {
        self.tp + self.tn
    }
}

pub fn confusion(truth: &[Label], predicted: &[Label]) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: predicted.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&y, &yhat) in truth.iter().zip(predicted) {
        match (y, yhat) {
            (1, 1) => cm.tp += 1,
            (0, 1) => cm.fp += 1,
            (0, 0) => cm.tn += 1,
            _ => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    match cm.total() {
        0 => Err(Error::InvalidArgument("accuracy of an empty evaluation".into())),
        total => Ok(cm.correct() as f64 / total as f64),
    }
}

pub fn error_rate(cm: &ConfusionMatrix) -> Result<f64> {
    match cm.total() {
        0 => Err(Error::InvalidArgument("error rate of an empty evaluation".into())),
        total => Ok((total - cm.correct()) as f64 / total as f64),
    }
}

/// `2tp / (2tp + fp + fn)`, or 0 when nothing is positive in either vector.
pub fn f_measure(cm: &ConfusionMatrix) -> Result<f64> {
    if cm.total() == 0 {
        return Err(Error::InvalidArgument("f-measure of an empty evaluation".into()));
    }
    let denom = 2 * cm.tp + cm.fp + cm.fn_;
    Ok(if denom == 0 {
        0.0
    } else {
        (2 * cm.tp) as f64 / denom as f64
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sparsity {
    /// `|M| / p`.
    pub feature_ratio: f64,
    /// `2 / n`.
    pub sample_ratio: f64,
}

pub fn sparsity_report(model: &NlModel, ds: &Dataset) -> Sparsity {
    Sparsity {
        feature_ratio: model.num_features() as f64 / ds.p() as f64,
        sample_ratio: 2.0 / ds.n() as f64,
    }
}
