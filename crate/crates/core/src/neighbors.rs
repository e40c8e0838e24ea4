//! Class-constrained nearest-neighbor queries over a feature subset.
//!
//! Two modes are available. `Exact` scans every constraint-satisfying row.
//! `Lsh` hashes rows with p-stable (Gaussian) projections and only scans
//! rows that share at least one bucket with the query, falling back to the
//! exact scan when no such row exists.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureSet};
use crate::distance::squared_on;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Above this many samples the `Auto` mode switches from exact to LSH.
pub const AUTO_EXACT_MAX_N: usize = 2000;

/// Multiplier applied to the median nearest-neighbor distance when the
/// bucket width is chosen automatically.
const AUTO_WIDTH_FACTOR: f64 = 4.0;
const AUTO_WIDTH_PROBES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Exact,
    Lsh,
}

impl fmt::Display for SearchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SearchMode::Exact => f.write_str("exact"),
            SearchMode::Lsh => f.write_str("lsh"),
        }
    }
}

/// Requested mode; `Auto` resolves on dataset size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModeChoice {
    #[default]
    Auto,
    Fixed(SearchMode),
}

impl ModeChoice {
    pub fn resolve(self, n: usize) -> SearchMode {
        match self {
            ModeChoice::Fixed(m) => m,
            ModeChoice::Auto if n <= AUTO_EXACT_MAX_N => SearchMode::Exact,
            ModeChoice::Auto => SearchMode::Lsh,
        }
    }
}

impl FromStr for ModeChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(ModeChoice::Auto),
            "exact" => Ok(ModeChoice::Fixed(SearchMode::Exact)),
            "lsh" => Ok(ModeChoice::Fixed(SearchMode::Lsh)),
            other => Err(Error::InvalidArgument(format!(
                "unknown neighbor mode `{other}` (expected exact, lsh or auto)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LshParams {
    pub tables: usize,
    pub hashes_per_table: usize,
    /// `None` picks a width from the data at build time.
    pub bucket_width: Option<f64>,
}

impl Default for LshParams {
    fn default() -> Self {
        LshParams {
            tables: 8,
            hashes_per_table: 4,
            bucket_width: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NeighborConfig {
    pub mode: ModeChoice,
    pub lsh: LshParams,
}

/// Which rows a query may return, relative to the query's own label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassConstraint {
    Same,
    Opposite,
}

impl ClassConstraint {
    #[inline]
    fn admits(self, query_label: u8, candidate_label: u8) -> bool {
        match self {
            ClassConstraint::Same => query_label == candidate_label,
            ClassConstraint::Opposite => query_label != candidate_label,
        }
    }
}

/// Brute-force class-constrained nearest neighbor of row `i` over
/// `features`. Ties go to the lowest index.
pub fn exact_nearest(
    ds: &Dataset,
    i: usize,
    constraint: ClassConstraint,
    features: &FeatureSet,
) -> Result<usize> {
    scan(ds, i, constraint, features.as_slice(), 0..ds.n())
        .map(|(j, _)| j)
        .ok_or(Error::NoNeighbor { index: i })
}

/// Minimum over `candidates` (ascending order assumed for tie-breaking),
/// returning the index and the number of distances evaluated.
fn scan(
    ds: &Dataset,
    i: usize,
    constraint: ClassConstraint,
    features: &[usize],
    candidates: impl Iterator<Item = usize>,
) -> Option<(usize, u64)> {
    let query = ds.row(i);
    let label = ds.label(i);
    let mut best: Option<(usize, f64)> = None;
    let mut scanned = 0u64;
    for j in candidates {
        if j == i || !constraint.admits(label, ds.label(j)) {
            continue;
        }
        scanned += 1;
        let d = squared_on(query, ds.row(j), features);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((j, d));
        }
    }
    best.map(|(j, _)| (j, scanned))
}

struct LshTable {
    /// `hashes_per_table` projection vectors of length |M|, row-major.
    projections: Vec<f64>,
    offsets: Vec<f64>,
    /// Bucket id of every dataset row.
    bucket_of: Vec<u32>,
    /// Members of each bucket, ascending.
    buckets: Vec<Vec<usize>>,
}

impl LshTable {
    fn build(
        ds: &Dataset,
        features: &[usize],
        hashes: usize,
        width: f64,
        rng: &mut impl Rng,
    ) -> LshTable {
        let dim = features.len();
        let projections: Vec<f64> = (0..hashes * dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let offsets: Vec<f64> = (0..hashes).map(|_| rng.random::<f64>() * width).collect();

        let mut ids: HashMap<Vec<i64>, u32> = HashMap::new();
        let mut buckets: Vec<Vec<usize>> = Vec::new();
        let mut bucket_of = Vec::with_capacity(ds.n());
        for i in 0..ds.n() {
            let row = ds.row(i);
            let key: Vec<i64> = (0..hashes)
                .map(|h| {
                    let a = &projections[h * dim..(h + 1) * dim];
                    let dot: f64 = a.iter().zip(features).map(|(w, &j)| w * row[j]).sum();
                    ((dot + offsets[h]) / width).floor() as i64
                })
                .collect();
            let next = buckets.len() as u32;
            let id = *ids.entry(key).or_insert(next);
            if id == next {
                buckets.push(Vec::new());
            }
            buckets[id as usize].push(i);
            bucket_of.push(id);
        }
        LshTable {
            projections,
            offsets,
            bucket_of,
            buckets,
        }
    }
}

struct LshTables {
    width: f64,
    tables: Vec<LshTable>,
}

/// Query counters. Totals do not depend on query order, so they are
/// identical across thread counts.
#[derive(Default)]
struct Counters {
    queries: AtomicU64,
    scanned: AtomicU64,
    exact_equivalent: AtomicU64,
    fallbacks: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct QueryStats {
    pub queries: u64,
    /// Distances evaluated.
    pub scanned: u64,
    /// Distances an exact scan would have evaluated for the same queries.
    pub exact_equivalent: u64,
    /// Queries whose buckets held no admissible row.
    pub fallbacks: u64,
}

impl QueryStats {
    /// Fraction of exact-scan distance evaluations avoided.
    pub fn skip_ratio(&self) -> f64 {
        if self.exact_equivalent == 0 {
            0.0
        } else {
            1.0 - self.scanned as f64 / self.exact_equivalent as f64
        }
    }
}

/// Immutable neighbor index over a dataset restricted to a feature subset.
pub struct NeighborIndex<'a> {
    ds: &'a Dataset,
    features: FeatureSet,
    mode: SearchMode,
    seed: u64,
    lsh: Option<LshTables>,
    class_sizes: [u64; 2],
    counters: Counters,
}

impl<'a> NeighborIndex<'a> {
    pub fn build(
        ds: &'a Dataset,
        features: FeatureSet,
        mode: SearchMode,
        params: &LshParams,
        seed: u64,
    ) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::EmptyFeatureSet);
        }
        features.check_bounds(ds.p())?;
        let lsh = match mode {
            SearchMode::Exact => None,
            SearchMode::Lsh => Some(build_lsh(ds, &features, params, seed)?),
        };
        let [c0, c1] = ds.class_counts();
        Ok(NeighborIndex {
            ds,
            features,
            mode,
            seed,
            lsh,
            class_sizes: [c0 as u64, c1 as u64],
            counters: Counters::default(),
        })
    }

    pub fn exact(ds: &'a Dataset, features: FeatureSet) -> Result<Self> {
        NeighborIndex::build(ds, features, SearchMode::Exact, &LshParams::default(), 0)
    }

    pub fn mode(&self) -> SearchMode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn features(&self) -> &FeatureSet {
        &self.features
    }

    /// Bucket width in use, when hashing.
    pub fn bucket_width(&self) -> Option<f64> {
        self.lsh.as_ref().map(|l| l.width)
    }

    pub fn nearest_same_class(&self, i: usize) -> Result<usize> {
        self.nearest(i, ClassConstraint::Same)
    }

    pub fn nearest_opposite_class(&self, i: usize) -> Result<usize> {
        self.nearest(i, ClassConstraint::Opposite)
    }

    pub fn nearest(&self, i: usize, constraint: ClassConstraint) -> Result<usize> {
        let label = self.ds.label(i) as usize;
        let admissible = match constraint {
            ClassConstraint::Same => self.class_sizes[label].saturating_sub(1),
            ClassConstraint::Opposite => self.class_sizes[1 - label],
        };
        self.counters.queries.fetch_add(1, Ordering::Relaxed);
        self.counters
            .exact_equivalent
            .fetch_add(admissible, Ordering::Relaxed);

        let features = self.features.as_slice();
        let found = match &self.lsh {
            None => scan(self.ds, i, constraint, features, 0..self.ds.n()),
            Some(lsh) => {
                let mut candidates: Vec<usize> = lsh
                    .tables
                    .iter()
                    .flat_map(|t| t.buckets[t.bucket_of[i] as usize].iter().copied())
                    .collect();
                candidates.sort_unstable();
                candidates.dedup();
                match scan(self.ds, i, constraint, features, candidates.into_iter()) {
                    Some(hit) => Some(hit),
                    None => {
                        self.counters.fallbacks.fetch_add(1, Ordering::Relaxed);
                        scan(self.ds, i, constraint, features, 0..self.ds.n())
                    }
                }
            }
        };
        let (j, scanned) = found.ok_or(Error::NoNeighbor { index: i })?;
        self.counters.scanned.fetch_add(scanned, Ordering::Relaxed);
        Ok(j)
    }

    pub fn stats(&self) -> QueryStats {
        QueryStats {
            queries: self.counters.queries.load(Ordering::Relaxed),
            scanned: self.counters.scanned.load(Ordering::Relaxed),
            exact_equivalent: self.counters.exact_equivalent.load(Ordering::Relaxed),
            fallbacks: self.counters.fallbacks.load(Ordering::Relaxed),
        }
    }

    /// Bucket ids of row `i`, one per table. Empty in exact mode.
    pub fn bucket_ids(&self, i: usize) -> Vec<u32> {
        self.lsh
            .as_ref()
            .map(|l| l.tables.iter().map(|t| t.bucket_of[i]).collect())
            .unwrap_or_default()
    }

    /// Projection coefficients and offsets of every table, flattened.
    pub fn hash_parameters(&self) -> Vec<f64> {
        self.lsh
            .as_ref()
            .map(|l| {
                l.tables
                    .iter()
                    .flat_map(|t| t.projections.iter().chain(&t.offsets).copied())
                    .collect()
            })
            .unwrap_or_default()
    }
}

pub fn build_index<'a>(
    ds: &'a Dataset,
    active_features: FeatureSet,
    mode: SearchMode,
    params: &LshParams,
    seed: u64,
) -> Result<NeighborIndex<'a>> {
    NeighborIndex::build(ds, active_features, mode, params, seed)
}

fn build_lsh(ds: &Dataset, features: &FeatureSet, params: &LshParams, seed: u64) -> Result<LshTables> {
    if params.tables == 0 || params.hashes_per_table == 0 {
        return Err(Error::InvalidArgument(
            "LSH needs at least one table and one hash per table".into(),
        ));
    }
    let width = match params.bucket_width {
        Some(w) if w > 0.0 && w.is_finite() => w,
        Some(w) => {
            return Err(Error::InvalidArgument(format!(
                "bucket width must be positive, got {w}"
            )))
        }
        None => auto_width(ds, features),
    };
    let mut rng = stream_rng(seed, Stream::Lsh);
    let tables = (0..params.tables)
        .map(|_| LshTable::build(ds, features.as_slice(), params.hashes_per_table, width, &mut rng))
        .collect();
    Ok(LshTables { width, tables })
}

/// A multiple of the median nearest-neighbor distance over evenly spaced
/// probe rows.
fn auto_width(ds: &Dataset, features: &FeatureSet) -> f64 {
    let n = ds.n();
    let probes = n.min(AUTO_WIDTH_PROBES);
    let mut dists: Vec<f64> = (0..probes)
        .filter_map(|k| {
            let i = k * n / probes;
            let row = ds.row(i);
            (0..n)
                .filter(|&j| j != i)
                .map(|j| squared_on(row, ds.row(j), features.as_slice()))
                .filter(|&d| d > 0.0)
                .min_by(f64::total_cmp)
                .map(f64::sqrt)
        })
        .collect();
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(f64::total_cmp);
    AUTO_WIDTH_FACTOR * dists[dists.len() / 2]
}
