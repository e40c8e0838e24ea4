//! Two-prototype training with recursive feature pruning.
//!
//! One *level* visits every training sample as a pivot, pairs it with its
//! nearest same-class and opposite-class neighbors, keeps the features on
//! which the pivot is strictly closer to the same-class neighbor, and
//! scores the resulting prototype pair on the whole training set. The best
//! pair's kept features become the active set of the next level. Training
//! stops once the winning feature set equals the active set.

use std::time::{Duration, Instant};

use log::{debug, info};
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{Dataset, FeatureSet, Scaler};
use crate::distance::{squared_on, METRIC_NAME};
use crate::error::{Error, Result};
use crate::model::{ModelMeta, NlModel, Prototype};
use crate::neighbors::{LshParams, ModeChoice, NeighborConfig, NeighborIndex, SearchMode};

/// Hard limit on recursion depth; the effective cap is `min(p, this)`.
pub const MAX_LEVELS: usize = 64;

/// Pivot with its nearest same-class and opposite-class neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Triplet {
    pub pivot: usize,
    pub same: usize,
    pub opposite: usize,
}

/// Per-feature comparison of a pivot against its two neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureComparison {
    /// `|x_s - x_i|` per active feature.
    pub same_gap: Vec<f64>,
    /// `|x_o - x_i|` per active feature.
    pub opposite_gap: Vec<f64>,
    /// `opposite_gap - same_gap`; positive entries survive.
    pub margin: Vec<f64>,
    pub kept: FeatureSet,
}

/// Compares full-width rows `pivot`, `same` and `opposite` on `features`.
/// The gap vectors are aligned with `features`; `kept` holds original
/// feature indices.
pub fn compare_features(
    pivot: &[f64],
    same: &[f64],
    opposite: &[f64],
    features: &FeatureSet,
) -> FeatureComparison {
    let mut same_gap = Vec::with_capacity(features.len());
    let mut opposite_gap = Vec::with_capacity(features.len());
    let mut margin = Vec::with_capacity(features.len());
    let mut kept = Vec::new();
    for j in features.iter() {
        let vs = (same[j] - pivot[j]).abs();
        let vo = (opposite[j] - pivot[j]).abs();
        let v = vo - vs;
        if v > 0.0 {
            kept.push(j);
        }
        same_gap.push(vs);
        opposite_gap.push(vo);
        margin.push(v);
    }
    FeatureComparison {
        same_gap,
        opposite_gap,
        margin,
        kept: FeatureSet::new(kept),
    }
}

/// Counts rows of `ds` misclassified by nearest-prototype prediction with
/// prototypes `same` and `opposite` (row indices of `ds`) over `features`.
/// A row equidistant from both prototypes takes the label of `same`.
pub fn evaluate_candidate(ds: &Dataset, same: usize, opposite: usize, features: &FeatureSet) -> usize {
    let f = features.as_slice();
    let (ps, po) = (ds.row(same), ds.row(opposite));
    let (ys, yo) = (ds.label(same), ds.label(opposite));
    (0..ds.n())
        .filter(|&i| {
            let x = ds.row(i);
            let predicted = if squared_on(x, po, f) < squared_on(x, ps, f) {
                yo
            } else {
                ys
            };
            predicted != ds.label(i)
        })
        .count()
}

/// A scored prototype pair proposed by one pivot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidatePrototype {
    pub triplet: Triplet,
    pub features: FeatureSet,
    pub error: usize,
}

impl CandidatePrototype {
    pub fn same(&self) -> usize {
        self.triplet.same
    }

    pub fn opposite(&self) -> usize {
        self.triplet.opposite
    }

    pub fn pivot(&self) -> usize {
        self.triplet.pivot
    }
}

/// Result of one pass over all pivots.
#[derive(Debug, Clone)]
pub struct LevelOutcome {
    pub best: Option<CandidatePrototype>,
    /// Largest kept set seen at this level, including skipped pivots.
    pub max_kept: usize,
}

/// Runs one level over `ds` restricted to the index's active features.
///
/// Pivots are scored in parallel. The winner is the candidate with the
/// smallest error, and among equal errors the smallest pivot index, which
/// is the candidate an ascending sequential scan with a strict `<` test
/// would keep.
pub fn train_level(ds: &Dataset, ix: &NeighborIndex<'_>) -> Result<LevelOutcome> {
    let features = ix.features();
    let scored: Vec<(usize, Option<CandidatePrototype>)> = (0..ds.n())
        .into_par_iter()
        .map(|i| -> Result<(usize, Option<CandidatePrototype>)> {
            let same = ix.nearest_same_class(i)?;
            let opposite = ix.nearest_opposite_class(i)?;
            let cmp = compare_features(ds.row(i), ds.row(same), ds.row(opposite), features);
            let kept_len = cmp.kept.len();
            if kept_len <= 1 {
                return Ok((kept_len, None));
            }
            let error = evaluate_candidate(ds, same, opposite, &cmp.kept);
            Ok((
                kept_len,
                Some(CandidatePrototype {
                    triplet: Triplet {
                        pivot: i,
                        same,
                        opposite,
                    },
                    features: cmp.kept,
                    error,
                }),
            ))
        })
        .collect::<Result<_>>()?;

    let max_kept = scored.iter().map(|(k, _)| *k).max().unwrap_or(0);
    let best = scored
        .into_iter()
        .filter_map(|(_, c)| c)
        .min_by_key(|c| (c.error, c.pivot()));
    Ok(LevelOutcome { best, max_kept })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub neighbors: NeighborConfig,
    pub seed: u64,
    /// Worker threads; `None` uses the ambient rayon pool.
    pub threads: Option<usize>,
    /// Fit a min-max scaler on the training set and train on scaled values.
    pub scale: bool,
    pub max_levels: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            neighbors: NeighborConfig::default(),
            seed: 42,
            threads: None,
            scale: false,
            max_levels: MAX_LEVELS,
        }
    }
}

impl TrainConfig {
    pub fn with_mode(mut self, mode: SearchMode) -> Self {
        self.neighbors.mode = ModeChoice::Fixed(mode);
        self
    }

    pub fn with_lsh(mut self, lsh: LshParams) -> Self {
        self.neighbors.lsh = lsh;
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelRecord {
    pub active_features: usize,
    pub kept_features: usize,
    pub best_error: usize,
    pub pivot: usize,
    pub same: usize,
    pub opposite: usize,
    #[serde(serialize_with = "serialize_secs")]
    pub elapsed: Duration,
    pub lsh_skip_ratio: f64,
}

fn serialize_secs<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainStats {
    pub mode: SearchMode,
    pub levels: Vec<LevelRecord>,
}

impl TrainStats {
    pub fn iterations(&self) -> usize {
        self.levels.len()
    }
}

/// Trains a model on `ds`.
pub fn nl_train(ds: &Dataset, config: &TrainConfig) -> Result<(NlModel, TrainStats)> {
    ds.check_trainable()?;
    match config.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            pool.install(|| train_inner(ds, config))
        }
        None => train_inner(ds, config),
    }
}

fn train_inner(ds: &Dataset, config: &TrainConfig) -> Result<(NlModel, TrainStats)> {
    let scaler = config.scale.then(|| Scaler::fit(ds));
    let scaled;
    let work = match &scaler {
        Some(sc) => {
            scaled = sc.apply(ds)?;
            &scaled
        }
        None => ds,
    };

    let mode = config.neighbors.mode.resolve(ds.n());
    let cap = ds.p().min(config.max_levels).max(1);
    let mut active = FeatureSet::all(ds.p());
    let mut winner: Option<CandidatePrototype> = None;
    let mut levels = Vec::new();

    while levels.len() < cap {
        let started = Instant::now();
        let ix = NeighborIndex::build(work, active.clone(), mode, &config.neighbors.lsh, config.seed)?;
        let outcome = train_level(work, &ix)?;
        let Some(best) = outcome.best else {
            if winner.is_none() {
                return Err(Error::NoCandidate {
                    max_kept: outcome.max_kept,
                });
            }
            debug!("level {} produced no candidate; keeping previous winner", levels.len());
            break;
        };
        let stats = ix.stats();
        levels.push(LevelRecord {
            active_features: active.len(),
            kept_features: best.features.len(),
            best_error: best.error,
            pivot: best.pivot(),
            same: best.same(),
            opposite: best.opposite(),
            elapsed: started.elapsed(),
            lsh_skip_ratio: stats.skip_ratio(),
        });
        info!(
            "level {}: |M| {} -> {}, error {}, pivot {}",
            levels.len(),
            active.len(),
            best.features.len(),
            best.error,
            best.pivot()
        );
        let converged = best.features == active;
        active = best.features.clone();
        winner = Some(best);
        if converged {
            break;
        }
    }

    let winner = winner.expect("at least one level ran");
    let model = build_model(ds, &winner, scaler.as_ref(), config, levels.len());
    Ok((model, TrainStats { mode, levels }))
}

fn build_model(
    ds: &Dataset,
    winner: &CandidatePrototype,
    scaler: Option<&Scaler>,
    config: &TrainConfig,
    iterations: usize,
) -> NlModel {
    let features = winner.features.clone();
    let proto = |i: usize| Prototype {
        sample_id: ds.sample_ids()[i],
        label: ds.label(i),
        values: features.iter().map(|j| ds.value(i, j)).collect(),
    };
    NlModel {
        feature_names: features.iter().map(|j| ds.feature_names()[j].clone()).collect(),
        same: proto(winner.same()),
        opposite: proto(winner.opposite()),
        scaler: scaler.map(|s| s.restrict(&features)),
        class_names: ds.class_names().clone(),
        meta: ModelMeta {
            train_error: winner.error,
            iterations,
            seed: config.seed,
            distance: METRIC_NAME.to_string(),
            n: ds.n(),
            p: ds.p(),
            created_at: None,
        },
        features,
    }
}
