//! Tabular binary-classification datasets: CSV ingestion, min-max scaling
//! and stratified partitioning.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Binary class label after mapping raw values onto `{0, 1}`.
pub type Label = u8;

/// Sorted, duplicate-free set of feature indices into the original schema.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureSet(Vec<usize>);

impl FeatureSet {
    pub fn all(p: usize) -> Self {
        FeatureSet((0..p).collect())
    }

    pub fn new(indices: impl IntoIterator<Item = usize>) -> Self {
        let set: BTreeSet<usize> = indices.into_iter().collect();
        FeatureSet(set.into_iter().collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn is_subset_of(&self, other: &FeatureSet) -> bool {
        self.0.iter().all(|&j| other.contains(j))
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    /// Checks every index is below `p`.
    pub fn check_bounds(&self, p: usize) -> Result<()> {
        match self.0.last() {
            Some(&j) if j >= p => Err(Error::FeatureOutOfRange { index: j, p }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, j) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, "}}")
    }
}

/// An immutable n×p matrix of finite reals with binary labels.
///
/// Construction only checks structural validity. Training additionally
/// requires [`Dataset::check_trainable`] (two samples per class, two
/// features), which [`load_csv`] enforces by default.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    n: usize,
    p: usize,
    labels: Vec<Label>,
    feature_names: Vec<String>,
    sample_ids: Vec<usize>,
    class_names: [String; 2],
    label_name: String,
}

impl Dataset {
    /// Builds a dataset from row-major values. Feature names default to
    /// `f0..f{p-1}` and sample ids to row indices.
    pub fn new(values: Vec<f64>, p: usize, labels: Vec<Label>) -> Result<Self> {
        if p == 0 {
            return Err(Error::TooFewFeatures {
                found: 0,
                required: 1,
            });
        }
        if !values.len().is_multiple_of(p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: values.len() % p,
            });
        }
        let n = values.len() / p;
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::InvalidArgument(format!("label {bad} is not 0 or 1")));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite value at row {}, feature {}",
                pos / p,
                pos % p
            )));
        }
        Ok(Dataset {
            values,
            n,
            p,
            labels,
            feature_names: (0..p).map(|j| format!("f{j}")).collect(),
            sample_ids: (0..n).collect(),
            class_names: ["0".to_string(), "1".to_string()],
            label_name: "label".to_string(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<Label>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: bad.len(),
            });
        }
        Dataset::new(rows.concat(), p, labels)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                found: names.len(),
            });
        }
        self.feature_names = names;
        Ok(self)
    }

    pub fn with_sample_ids(mut self, ids: Vec<usize>) -> Result<Self> {
        if ids.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: ids.len(),
            });
        }
        self.sample_ids = ids;
        Ok(self)
    }

    pub fn with_class_names(mut self, names: [String; 2]) -> Self {
        self.class_names = names;
        self
    }

    pub fn with_label_name(mut self, name: impl Into<String>) -> Self {
        self.label_name = name.into();
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.p)
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p + j]
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn sample_ids(&self) -> &[usize] {
        &self.sample_ids
    }

    /// Raw label strings for classes 0 and 1.
    pub fn class_names(&self) -> &[String; 2] {
        &self.class_names
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&y| y == 1).count();
        [self.n - ones, ones]
    }

    pub fn class_indices(&self, class: Label) -> Vec<usize> {
        (0..self.n).filter(|&i| self.labels[i] == class).collect()
    }

    /// Checks the preconditions of training: `p >= 2` and at least two
    /// samples in each class.
    pub fn check_trainable(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::TooFewFeatures {
                found: self.p,
                required: 2,
            });
        }
        for (class, &count) in self.class_counts().iter().enumerate() {
            if count < 2 {
                return Err(Error::ClassSize {
                    class: class as Label,
                    count,
                    required: 2,
                });
            }
        }
        Ok(())
    }

    /// Rows at `indices`, in that order. Names, ids and class names carry over.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut values = Vec::with_capacity(indices.len() * self.p);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Dataset {
            values,
            n: indices.len(),
            p: self.p,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            sample_ids: indices.iter().map(|&i| self.sample_ids[i]).collect(),
            class_names: self.class_names.clone(),
            label_name: self.label_name.clone(),
        }
    }

    /// Writes the dataset as CSV with the label column last, using the raw
    /// class names.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(&self.label_name);
        w.write_record(&header)?;
        for i in 0..self.n {
            let mut record: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            record.push(self.class_names[self.labels[i] as usize].clone());
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Which CSV column holds the label.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    Index(usize),
    Name(String),
}

impl LabelColumn {
    /// Parses a CLI value: a header name, or a 0-based index when no header
    /// matches.
    pub fn parse(spec: &str) -> Self {
        match spec.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(spec.to_string()),
        }
    }

    fn resolve(&self, header: &[String]) -> Result<usize> {
        match self {
            LabelColumn::Last => header
                .len()
                .checked_sub(1)
                .ok_or_else(|| Error::MissingColumn("<last>".into())),
            LabelColumn::Name(name) => header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn(name.clone())),
            LabelColumn::Index(i) => {
                // a header that literally reads "3" wins over index 3
                if let Some(pos) = header.iter().position(|h| *h == i.to_string()) {
                    return Ok(pos);
                }
                if *i < header.len() {
                    Ok(*i)
                } else {
                    Err(Error::MissingColumn(i.to_string()))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    pub label: LabelColumn,
    /// Reuse a known label mapping (e.g. a model's) instead of deriving one
    /// from the file. Required when the file may hold a single class.
    pub class_names: Option<[String; 2]>,
    /// Skip the training preconditions (class sizes, `p >= 2`).
    pub skip_train_checks: bool,
}

/// Header plus raw string cells of a CSV file.
#[derive(Debug, Clone, Default)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
        let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            rows.push(record.iter().map(|c| c.trim().to_string()).collect());
        }
        Ok(RawTable { header, rows })
    }

    /// Parses the named columns as reals, in the order given.
    pub fn numeric_columns(&self, names: &[String]) -> Result<Vec<Vec<f64>>> {
        let missing: Vec<String> = names
            .iter()
            .filter(|n| !self.header.contains(n))
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingFeatures(missing));
        }
        let cols: Vec<usize> = names
            .iter()
            .map(|n| self.header.iter().position(|h| h == n).unwrap())
            .collect();
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                cols.iter()
                    .map(|&c| parse_cell(row, r, c, &self.header))
                    .collect()
            })
            .collect()
    }
}

fn parse_cell(row: &[String], r: usize, c: usize, header: &[String]) -> Result<f64> {
    let cell = row.get(c).map(String::as_str).unwrap_or("");
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            row: r + 1,
            column: header[c].clone(),
            value: cell.to_string(),
        }),
    }
}

/// Loads a labeled CSV with default options (label in the last column,
/// label mapping derived from the file, training checks on).
pub fn load_csv(path: impl AsRef<Path>, label: LabelColumn) -> Result<Dataset> {
    load_csv_with(
        path,
        &CsvOptions {
            label,
            ..CsvOptions::default()
        },
    )
}

pub fn load_csv_with(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let table = RawTable::read(path)?;
    dataset_from_table(&table, opts)
}

pub fn dataset_from_table(table: &RawTable, opts: &CsvOptions) -> Result<Dataset> {
    let label_col = opts.label.resolve(&table.header)?;
    let feature_cols: Vec<usize> = (0..table.header.len()).filter(|&c| c != label_col).collect();
    if feature_cols.is_empty() && !opts.skip_train_checks {
        return Err(Error::TooFewFeatures {
            found: 0,
            required: 2,
        });
    }

    let raw_labels: Vec<&str> = table
        .rows
        .iter()
        .map(|r| r.get(label_col).map(String::as_str).unwrap_or(""))
        .collect();
    let class_names = match &opts.class_names {
        Some(names) => names.clone(),
        None => {
            let distinct: BTreeSet<&str> = raw_labels.iter().copied().collect();
            if distinct.len() != 2 {
                return Err(Error::LabelCardinality {
                    found: distinct.len(),
                    values: distinct.into_iter().map(String::from).collect(),
                });
            }
            let mut it = distinct.into_iter();
            [it.next().unwrap().to_string(), it.next().unwrap().to_string()]
        }
    };
    let labels = raw_labels
        .iter()
        .map(|&raw| {
            class_names
                .iter()
                .position(|c| c == raw)
                .map(|k| k as Label)
                .ok_or_else(|| Error::UnknownLabel {
                    label: raw.to_string(),
                    known: class_names.clone(),
                })
        })
        .collect::<Result<Vec<_>>>()?;

    let p = feature_cols.len();
    let mut values = Vec::with_capacity(table.rows.len() * p);
    for (r, row) in table.rows.iter().enumerate() {
        for &c in &feature_cols {
            values.push(parse_cell(row, r, c, &table.header)?);
        }
    }
    let names = feature_cols.iter().map(|&c| table.header[c].clone()).collect();
    let ds = Dataset::new(values, p, labels)?
        .with_feature_names(names)?
        .with_class_names(class_names)
        .with_label_name(table.header[label_col].clone());
    if !opts.skip_train_checks {
        ds.check_trainable()?;
    }
    Ok(ds)
}

/// Per-feature min/max captured from a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Scaler {
    pub fn fit(ds: &Dataset) -> Scaler {
        let mut min = ds.row(0).to_vec();
        let mut max = min.clone();
        for row in ds.rows().skip(1) {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Scaler { min, max }
    }

    pub fn len(&self) -> usize {
        self.min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.min.is_empty()
    }

    /// Features whose training range is a single point.
    pub fn constant_features(&self) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.min[j] == self.max[j]).collect()
    }

    /// Maps `v` of feature `j` into `[0, 1]` relative to the fitted range.
    /// Constant features map to 0.
    #[inline]
    pub fn scale(&self, j: usize, v: f64) -> f64 {
        let range = self.max[j] - self.min[j];
        if range == 0.0 {
            0.0
        } else {
            (v - self.min[j]) / range
        }
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.p() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: ds.p(),
            });
        }
        let mut out = ds.clone();
        let p = ds.p();
        for (k, v) in out.values.iter_mut().enumerate() {
            *v = self.scale(k % p, *v);
        }
        Ok(out)
    }

    /// The scaler restricted to `features`, re-indexed densely.
    pub fn restrict(&self, features: &FeatureSet) -> Scaler {
        Scaler {
            min: features.iter().map(|j| self.min[j]).collect(),
            max: features.iter().map(|j| self.max[j]).collect(),
        }
    }
}

pub fn minmax_fit(ds: &Dataset) -> Scaler {
    Scaler::fit(ds)
}

pub fn minmax_apply(sc: &Scaler, ds: &Dataset) -> Result<Dataset> {
    sc.apply(ds)
}

/// Disjoint stratified folds covering every sample index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    /// Indices outside fold `f`, ascending.
    pub fn train_indices(&self, f: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|&(g, _)| g != f)
            .flat_map(|(_, fold)| fold.iter().copied())
            .collect();
        idx.sort_unstable();
        idx
    }
}

/// Shuffles each class with the split stream, then deals its members
/// round-robin across folds. Class 1 starts dealing where class 0 stopped
/// so fold sizes stay within one of each other.
pub fn stratified_folds(ds: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    let counts = ds.class_counts();
    for (class, &count) in counts.iter().enumerate() {
        if count < k {
            return Err(Error::ClassSize {
                class: class as Label,
                count,
                required: k,
            });
        }
    }
    let mut rng = stream_rng(seed, Stream::Split);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for class in 0..2 {
        let mut members = ds.class_indices(class);
        members.shuffle(&mut rng);
        for i in members {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(FoldPlan { k, seed, folds })
}

/// Stratified split returning `(train, test)`. Each class contributes
/// `round(count * test_fraction)` samples to the test part.
pub fn train_test_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut rng = stream_rng(seed, Stream::Split);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 0..2 {
        let mut members = ds.class_indices(class);
        members.shuffle(&mut rng);
        let n_test = (members.len() as f64 * test_fraction).round() as usize;
        let n_train = members.len() - n_test;
        if n_train < 2 {
            return Err(Error::ClassSize {
                class,
                count: n_train,
                required: 2,
            });
        }
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.subset(&train), ds.subset(&test)))
}
