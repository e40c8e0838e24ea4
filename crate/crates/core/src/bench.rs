//! Stratified k-fold benchmark: train on k-1 folds, score the held-out
//! fold, and report accuracy, F1, sparsity, iterations and timings.

use std::fmt::Write as _;
use std::time::Instant;

use log::warn;
use serde::Serialize;

use crate::data::{stratified_folds, Dataset};
use crate::error::Result;
use crate::metrics::{accuracy, confusion, f_measure, sparsity_report, ConfusionMatrix};
use crate::model_file::to_canonical_json;
use crate::predict::predict_batch;
use crate::train::{nl_train, TrainConfig};

const PREDICT_REPEATS: usize = 3;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub folds: usize,
    pub seed: u64,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldMetrics {
    pub accuracy: f64,
    pub f1: f64,
    pub confusion: ConfusionMatrix,
    pub train_error: usize,
    pub num_features: usize,
    pub feature_indices: Vec<usize>,
    pub prototype_ids: [usize; 2],
    pub iterations: usize,
    pub feature_ratio: f64,
    pub sample_ratio: f64,
    pub model_bytes: usize,
    pub train_seconds: f64,
    pub predict_seconds_per_sample: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldRecord {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub test_indices: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<FoldMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl MeanStd {
    fn of(values: &[f64]) -> Option<MeanStd> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(MeanStd {
            mean,
            std: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub succeeded: usize,
    pub failed: usize,
    pub accuracy: Option<MeanStd>,
    pub f1: Option<MeanStd>,
    pub num_features: Option<MeanStd>,
    pub iterations: Option<MeanStd>,
    pub feature_ratio: Option<MeanStd>,
    pub sample_ratio: Option<MeanStd>,
    pub train_seconds: Option<MeanStd>,
    pub predict_seconds_per_sample: Option<MeanStd>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub seed: u64,
    pub scaled: bool,
    pub folds: Vec<FoldRecord>,
    pub summary: Summary,
}

impl BenchReport {
    pub fn succeeded(&self) -> impl Iterator<Item = &FoldMetrics> {
        self.folds.iter().filter_map(|f| f.metrics.as_ref())
    }

    /// Copy with every wall-clock field zeroed, for determinism checks.
    pub fn without_timings(&self) -> BenchReport {
        let mut r = self.clone();
        for m in r.folds.iter_mut().filter_map(|f| f.metrics.as_mut()) {
            m.train_seconds = 0.0;
            m.predict_seconds_per_sample = 0.0;
        }
        r.summary.train_seconds = None;
        r.summary.predict_seconds_per_sample = None;
        r
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>4} {:>6} {:>6} {:>8} {:>8} {:>7} {:>5} {:>4} {:>10} {:>10} {:>12}",
            "fold", "train", "test", "acc", "f1", "errors", "|M|", "L", "train_s", "pred_us", "bytes"
        );
        for f in &self.folds {
            match (&f.metrics, &f.error) {
                (Some(m), _) => {
                    let _ = writeln!(
                        out,
                        "{:>4} {:>6} {:>6} {:>8.4} {:>8.4} {:>7} {:>5} {:>4} {:>10.4} {:>10.3} {:>12}",
                        f.fold,
                        f.n_train,
                        f.n_test,
                        m.accuracy,
                        m.f1,
                        m.train_error,
                        m.num_features,
                        m.iterations,
                        m.train_seconds,
                        m.predict_seconds_per_sample * 1e6,
                        m.model_bytes
                    );
                }
                (None, err) => {
                    let _ = writeln!(
                        out,
                        "{:>4} {:>6} {:>6}  failed: {}",
                        f.fold,
                        f.n_train,
                        f.n_test,
                        err.as_deref().unwrap_or("unknown")
                    );
                }
            }
        }
        let s = &self.summary;
        if let (Some(acc), Some(f1)) = (s.accuracy, s.f1) {
            let _ = writeln!(
                out,
                "mean accuracy {:.4} (std {:.4}, best {:.4}), mean f1 {:.4} (std {:.4})",
                acc.mean, acc.std, acc.max, f1.mean, f1.std
            );
        }
        if let (Some(fr), Some(sr)) = (s.feature_ratio, s.sample_ratio) {
            let _ = writeln!(
                out,
                "feature ratio {:.4}, sample ratio {:.5}",
                fr.mean, sr.mean
            );
        }
        let _ = writeln!(out, "{} of {} folds succeeded", s.succeeded, self.k);
        out
    }
}

fn run_fold(train: &Dataset, test: &Dataset, config: &TrainConfig) -> Result<FoldMetrics> {
    let started = Instant::now();
    let (model, stats) = nl_train(train, config)?;
    let train_seconds = started.elapsed().as_secs_f64();

    let mut timings = Vec::with_capacity(PREDICT_REPEATS);
    let mut batch = None;
    for _ in 0..PREDICT_REPEATS {
        let t = Instant::now();
        batch = Some(predict_batch(&model, test)?);
        timings.push(t.elapsed().as_secs_f64());
    }
    timings.sort_by(f64::total_cmp);
    let batch = batch.expect("at least one repeat");

    let cm = confusion(test.labels(), &batch.labels())?;
    let sparsity = sparsity_report(&model, train);
    Ok(FoldMetrics {
        accuracy: accuracy(&cm)?,
        f1: f_measure(&cm)?,
        confusion: cm,
        train_error: model.meta.train_error,
        num_features: model.num_features(),
        feature_indices: model.features.as_slice().to_vec(),
        prototype_ids: [model.same.sample_id, model.opposite.sample_id],
        iterations: stats.iterations(),
        feature_ratio: sparsity.feature_ratio,
        sample_ratio: sparsity.sample_ratio,
        model_bytes: to_canonical_json(&model)?.len(),
        train_seconds,
        predict_seconds_per_sample: timings[timings.len() / 2] / test.n().max(1) as f64,
    })
}

/// Runs the benchmark. Fold plan errors are returned; a fold whose
/// training fails is recorded and the run continues.
pub fn bench_run(ds: &Dataset, config: &BenchConfig) -> Result<BenchReport> {
    let plan = stratified_folds(ds, config.folds, config.seed)?;
    let mut folds = Vec::with_capacity(plan.k);
    for (f, test_idx) in plan.folds.iter().enumerate() {
        let train = ds.subset(&plan.train_indices(f));
        let test = ds.subset(test_idx);
        let outcome = run_fold(&train, &test, &config.train);
        if let Err(e) = &outcome {
            warn!("fold {f} failed: {e}");
        }
        folds.push(FoldRecord {
            fold: f,
            n_train: train.n(),
            n_test: test.n(),
            test_indices: test_idx.clone(),
            error: outcome.as_ref().err().map(ToString::to_string),
            metrics: outcome.ok(),
        });
    }

    let ok: Vec<&FoldMetrics> = folds.iter().filter_map(|f| f.metrics.as_ref()).collect();
    let stat = |g: fn(&FoldMetrics) -> f64| MeanStd::of(&ok.iter().map(|m| g(m)).collect::<Vec<_>>());
    let summary = Summary {
        succeeded: ok.len(),
        failed: folds.len() - ok.len(),
        accuracy: stat(|m| m.accuracy),
        f1: stat(|m| m.f1),
        num_features: stat(|m| m.num_features as f64),
        iterations: stat(|m| m.iterations as f64),
        feature_ratio: stat(|m| m.feature_ratio),
        sample_ratio: stat(|m| m.sample_ratio),
        train_seconds: stat(|m| m.train_seconds),
        predict_seconds_per_sample: stat(|m| m.predict_seconds_per_sample),
    };
    Ok(BenchReport {
        n: ds.n(),
        p: ds.p(),
        k: plan.k,
        seed: config.seed,
        scaled: config.train.scale,
        folds,
        summary,
    })
}
