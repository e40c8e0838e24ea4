//! Nearest-prototype prediction and plain-text explanations.

use std::fmt::Write as _;

use serde::Serialize;

use crate::data::{Dataset, Label};
use crate::distance::squared;
use crate::error::{Error, Result};
use crate::model::NlModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub label: Label,
    /// Distance to the `same` prototype.
    pub d_same: f64,
    /// Distance to the `opposite` prototype.
    pub d_opposite: f64,
}

/// Euclidean distance between two full-width vectors over `features`.
pub fn distance(a: &[f64], b: &[f64], features: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if let Some(&j) = features.iter().find(|&&j| j >= a.len()) {
        return Err(Error::FeatureOutOfRange { index: j, p: a.len() });
    }
    Ok(crate::distance::squared_on(a, b, features).sqrt())
}

fn decide(model: &NlModel, q: &[f64], ps: &[f64], po: &[f64]) -> Prediction {
    let ds2 = squared(q, ps);
    let do2 = squared(q, po);
    let label = if do2 < ds2 {
        model.opposite.label
    } else {
        model.same.label
    };
    Prediction {
        label,
        d_same: ds2.sqrt(),
        d_opposite: do2.sqrt(),
    }
}

/// Classifies one row (full width or restricted to the model features).
/// Exact ties go to the `same` prototype.
pub fn predict_one(model: &NlModel, x: &[f64]) -> Result<Prediction> {
    let q = model.project(x)?;
    let ps = model.to_metric_space(&model.same.values);
    let po = model.to_metric_space(&model.opposite.values);
    Ok(decide(model, &q, &ps, &po))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchPrediction {
    pub predictions: Vec<Prediction>,
    /// Misclassified rows, counted against the dataset's labels.
    pub errors: usize,
}

impl BatchPrediction {
    pub fn labels(&self) -> Vec<Label> {
        self.predictions.iter().map(|p| p.label).collect()
    }
}

/// Predicts every row of `ds`, which must share the training schema.
pub fn predict_batch(model: &NlModel, ds: &Dataset) -> Result<BatchPrediction> {
    if ds.p() != model.meta.p {
        return Err(Error::DimensionMismatch {
            expected: model.meta.p,
            found: ds.p(),
        });
    }
    let predictions = predict_rows(model, ds.rows())?;
    let errors = predictions
        .iter()
        .zip(ds.labels())
        .filter(|(p, &y)| p.label != y)
        .count();
    Ok(BatchPrediction { predictions, errors })
}

/// Predicts rows of any accepted width.
pub fn predict_rows<'a>(
    model: &NlModel,
    rows: impl IntoIterator<Item = &'a [f64]>,
) -> Result<Vec<Prediction>> {
    let ps = model.to_metric_space(&model.same.values);
    let po = model.to_metric_space(&model.opposite.values);
    rows.into_iter()
        .map(|x| Ok(decide(model, &model.project(x)?, &ps, &po)))
        .collect()
}

/// Four significant digits, for the display column.
fn sig4(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let digits = 4 - 1 - v.abs().log10().floor() as i32;
    if (0..=12).contains(&digits) {
        format!("{v:.*}", digits as usize)
    } else {
        format!("{v:.3e}")
    }
}

/// Renders the model as a rule card, and with `x` also the decision for
/// that row.
pub fn explain(model: &NlModel, x: Option<&[f64]>) -> Result<String> {
    let mut out = String::new();
    let (s, o) = (&model.same, &model.opposite);
    let name_s = model.class_name(s.label);
    let name_o = model.class_name(o.label);
    let w = model
        .feature_names
        .iter()
        .map(String::len)
        .max()
        .unwrap_or(7)
        .max(7);

    let _ = writeln!(
        out,
        "Prototype of class {name_s} ({}): sample {}",
        s.label, s.sample_id
    );
    let _ = writeln!(
        out,
        "Prototype of class {name_o} ({}): sample {}",
        o.label, o.sample_id
    );
    let _ = writeln!(
        out,
        "Rule: over the {} features below, a case closer to sample {} than to sample {} is labeled {name_o}; otherwise {name_s}.",
        model.num_features(),
        o.sample_id,
        s.sample_id
    );
    if model.scaler.is_some() {
        let _ = writeln!(out, "Distances are measured after min-max scaling.");
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<w$}  {:>12}  {:>12}  full precision",
        "feature",
        format!("sample {}", s.sample_id),
        format!("sample {}", o.sample_id),
    );
    for (k, name) in model.feature_names.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:<w$}  {:>12}  {:>12}  {} | {}",
            name,
            sig4(s.values[k]),
            sig4(o.values[k]),
            s.values[k],
            o.values[k]
        );
    }

    if let Some(x) = x {
        let q = model.project(x)?;
        let ps = model.to_metric_space(&s.values);
        let po = model.to_metric_space(&o.values);
        let pred = decide(model, &q, &ps, &po);
        let raw: Vec<f64> = if x.len() == model.meta.p {
            model.features.iter().map(|j| x[j]).collect()
        } else {
            x.to_vec()
        };
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<w$}  {:>12}  {:>12}  {:>12}",
            "feature", "value", "|x-o|-|x-s|", "favors"
        );
        for (k, name) in model.feature_names.iter().enumerate() {
            let contribution = (q[k] - po[k]).abs() - (q[k] - ps[k]).abs();
            let favors = if contribution > 0.0 {
                name_s
            } else if contribution < 0.0 {
                name_o
            } else {
                "-"
            };
            let _ = writeln!(
                out,
                "{:<w$}  {:>12}  {:>12}  {:>12}",
                name,
                sig4(raw[k]),
                sig4(contribution),
                favors
            );
        }
        let _ = writeln!(
            out,
            "distance {} to prototype of class {name_s} (sample {})",
            pred.d_same, s.sample_id
        );
        let _ = writeln!(
            out,
            "distance {} to prototype of class {name_o} (sample {})",
            pred.d_opposite, o.sample_id
        );
        let _ = writeln!(
            out,
            "Decision: {} ({})",
            model.class_name(pred.label),
            pred.label
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureSet, Scaler};
    use crate::model::{ModelMeta, Prototype};

    fn iris_rule() -> NlModel {
        NlModel {
            features: FeatureSet::new([2, 3]),
            feature_names: vec!["petal_length".into(), "petal_width".into()],
            same: Prototype {
                sample_id: 5,
                label: 0,
                values: vec![1.4, 0.2],
            },
            opposite: Prototype {
                sample_id: 6,
                label: 1,
                values: vec![3.3, 1.0],
            },
            scaler: None,
            class_names: ["setosa".into(), "versicolor".into()],
            meta: ModelMeta {
                train_error: 0,
                iterations: 1,
                seed: 42,
                distance: "euclidean".into(),
                n: 80,
                p: 4,
                created_at: None,
            },
        }
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&[1.0, 2.0], &[1.0, 2.0], &[0, 1]).unwrap(), 0.0);
        assert_eq!(distance(&[0.0, 0.0], &[3.0, 4.0], &[0, 1]).unwrap(), 5.0);
        let d = distance(&[1.5], &[1.4], &[0]).unwrap();
        assert!((d - 0.1).abs() < 1e-12);
        assert!(distance(&[1.0], &[1.0, 2.0], &[0]).is_err());
        assert!(distance(&[1.0], &[1.0], &[1]).is_err());
    }

    #[test]
    fn iris_style_rule() {
        let m = iris_rule();
        let p = predict_one(&m, &[5.0, 3.4, 1.5, 0.2]).unwrap();
        assert_eq!(p.label, 0);
        assert!(p.d_same < p.d_opposite);
        // restricted-width input
        assert_eq!(predict_one(&m, &[1.5, 0.2]).unwrap().label, 0);
        assert!(predict_one(&m, &[1.5, 0.2, 3.0]).is_err());
    }

    #[test]
    fn tie_goes_to_same() {
        let mut m = iris_rule();
        m.same.values = vec![1.0, 0.0];
        m.opposite.values = vec![3.0, 2.0];
        let p = predict_one(&m, &[2.0, 1.0]).unwrap();
        assert_eq!(p.d_same, p.d_opposite);
        assert_eq!(p.label, 0);
    }

    #[test]
    fn prototypes_classify_themselves() {
        let m = iris_rule();
        assert_eq!(predict_one(&m, &m.same.values).unwrap().label, 0);
        let p = predict_one(&m, &m.opposite.values).unwrap();
        assert_eq!(p.label, 1);
        assert_eq!(p.d_opposite, 0.0);
    }

    #[test]
    fn scaled_model_measures_in_unit_range() {
        let mut m = iris_rule();
        m.scaler = Some(Scaler {
            min: vec![1.0, 0.0],
            max: vec![5.0, 2.0],
        });
        let p = predict_one(&m, &[1.4, 0.2]).unwrap();
        assert_eq!(p.d_same, 0.0);
        let expected = ((1.9f64 / 4.0).powi(2) + (0.8f64 / 2.0).powi(2)).sqrt();
        assert!((p.d_opposite - expected).abs() < 1e-12);
    }

    #[test]
    fn batch_counts_errors() {
        let m = iris_rule();
        let ds = Dataset::from_rows(
            &[
                vec![5.0, 3.0, 1.4, 0.2],
                vec![6.0, 3.0, 4.0, 1.3],
                vec![6.0, 3.0, 4.0, 1.3],
            ],
            vec![0, 1, 0],
        )
        .unwrap();
        let b = predict_batch(&m, &ds).unwrap();
        assert_eq!(b.labels(), vec![0, 1, 1]);
        assert_eq!(b.errors, 1);
        let narrow = Dataset::from_rows(&[vec![1.0, 2.0]], vec![0]).unwrap();
        assert!(predict_batch(&m, &narrow).is_err());
    }

    #[test]
    fn explain_card() {
        let m = iris_rule();
        let card = explain(&m, None).unwrap();
        assert!(card.contains("sample 5"));
        assert!(card.contains("sample 6"));
        assert!(card.contains("setosa"));
        assert_eq!(card.lines().filter(|l| l.starts_with("petal_")).count(), 2);

        let with_x = explain(&m, Some(&m.same.values)).unwrap();
        assert!(with_x.contains("distance 0 to prototype of class setosa"));
        assert!(with_x.contains("Decision: setosa (0)"));
    }

    #[test]
    fn four_significant_digits() {
        assert_eq!(sig4(1.4), "1.400");
        assert_eq!(sig4(0.012346), "0.01235");
        assert_eq!(sig4(1234.5678), "1235");
        assert_eq!(sig4(0.0), "0");
        assert_eq!(sig4(123456.0), "1.235e5");
    }
}
