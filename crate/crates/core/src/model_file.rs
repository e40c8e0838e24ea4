//! On-disk model format.
//!
//! Models are written as canonical JSON: object keys sorted, floats in
//! shortest round-trip form, two-space indentation and a trailing newline.
//! Loading and re-saving a file therefore reproduces it byte for byte.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{FeatureSet, Label, Scaler};
use crate::error::{Error, Result};
use crate::model::{ModelMeta, NlModel, Prototype};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrototypeRecord {
    /// `same` wins distance ties; `opposite` is the other class.
    pub role: String,
    pub sample_id: usize,
    pub label: Label,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u32,
    pub distance: String,
    pub scaled: bool,
    pub scaler: Option<Scaler>,
    pub feature_indices: Vec<usize>,
    pub feature_names: Vec<String>,
    pub class_names: [String; 2],
    pub prototypes: [PrototypeRecord; 2],
    pub metadata: ModelMeta,
}

impl From<&NlModel> for ModelFile {
    fn from(m: &NlModel) -> Self {
        let record = |role: &str, p: &Prototype| PrototypeRecord {
            role: role.to_string(),
            sample_id: p.sample_id,
            label: p.label,
            values: p.values.clone(),
        };
        ModelFile {
            format_version: FORMAT_VERSION,
            distance: m.meta.distance.clone(),
            scaled: m.scaler.is_some(),
            scaler: m.scaler.clone(),
            feature_indices: m.features.as_slice().to_vec(),
            feature_names: m.feature_names.clone(),
            class_names: m.class_names.clone(),
            prototypes: [record("same", &m.same), record("opposite", &m.opposite)],
            metadata: m.meta.clone(),
        }
    }
}

impl TryFrom<ModelFile> for NlModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<NlModel> {
        if f.format_version != FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported format version {} (expected {FORMAT_VERSION})",
                f.format_version
            )));
        }
        if f.distance != f.metadata.distance || f.distance != crate::distance::METRIC_NAME {
            return Err(Error::Model(format!("unsupported distance `{}`", f.distance)));
        }
        if f.scaled != f.scaler.is_some() {
            return Err(Error::Model("`scaled` disagrees with `scaler`".into()));
        }
        let [a, b] = f.prototypes;
        if a.role != "same" || b.role != "opposite" {
            return Err(Error::Model("prototypes must be listed as [same, opposite]".into()));
        }
        let proto = |r: PrototypeRecord| Prototype {
            sample_id: r.sample_id,
            label: r.label,
            values: r.values,
        };
        let model = NlModel {
            features: FeatureSet::new(f.feature_indices.iter().copied()),
            feature_names: f.feature_names,
            same: proto(a),
            opposite: proto(b),
            scaler: f.scaler,
            class_names: f.class_names,
            meta: f.metadata,
        };
        if model.features.len() != f.feature_indices.len() {
            return Err(Error::Model("duplicate feature indices".into()));
        }
        model.validate()?;
        Ok(model)
    }
}

/// Canonical JSON text for `model`.
pub fn to_canonical_json(model: &NlModel) -> Result<String> {
    // serde_json::Value keeps object keys in a BTreeMap, so round-tripping
    // through it sorts every level of the document.
    let value = serde_json::to_value(ModelFile::from(model))?;
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    Ok(text)
}

pub fn from_json(text: &str) -> Result<NlModel> {
    let file: ModelFile = serde_json::from_str(text)?;
    NlModel::try_from(file)
}

pub fn save(model: &NlModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_canonical_json(model)?).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<NlModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> NlModel {
        NlModel {
            features: FeatureSet::new([0, 3]),
            feature_names: vec!["a".into(), "d".into()],
            same: Prototype {
                sample_id: 7,
                label: 1,
                values: vec![0.1, 1e-7],
            },
            opposite: Prototype {
                sample_id: 2,
                label: 0,
                values: vec![1.0, -3.25],
            },
            scaler: Some(Scaler {
                min: vec![0.0, -4.0],
                max: vec![2.0, 1.0 / 3.0],
            }),
            class_names: ["B".into(), "M".into()],
            meta: ModelMeta {
                train_error: 3,
                iterations: 2,
                seed: u64::MAX,
                distance: "euclidean".into(),
                n: 10,
                p: 4,
                created_at: None,
            },
        }
    }

    #[test]
    fn keys_are_sorted() {
        let text = to_canonical_json(&model()).unwrap();
        let top: Vec<&str> = text
            .lines()
            .filter(|l| l.starts_with("  \"") )
            .map(|l| l.trim().split('"').nth(1).unwrap())
            .collect();
        let mut sorted = top.clone();
        sorted.sort_unstable();
        assert_eq!(top, sorted);
        assert!(text.ends_with("}\n"));
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let text = to_canonical_json(&model()).unwrap();
        let back = from_json(&text).unwrap();
        assert_eq!(back, model());
        assert_eq!(to_canonical_json(&back).unwrap(), text);
    }

    #[test]
    fn rejects_malformed() {
        assert!(from_json("{").is_err());
        let mut bad = model();
        bad.opposite.label = 1;
        let text = to_canonical_json(&bad).unwrap();
        assert!(matches!(from_json(&text), Err(Error::Model(_))));
        let text = to_canonical_json(&model()).unwrap().replace("\"euclidean\"", "\"cosine\"");
        assert!(matches!(from_json(&text), Err(Error::Model(_))));
    }
}
