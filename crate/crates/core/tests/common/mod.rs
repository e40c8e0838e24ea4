//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the library's search or scoring code.

#![allow(dead_code)]

use std::path::PathBuf;

use natural_learning::{Dataset, Label};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn toy() -> Dataset {
    Dataset::from_rows(
        &[
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.75, 0.0, 0.75, 0.5],
            vec![0.25, 0.25, 0.0, 0.5],
            vec![0.5, 1.0, 0.25, 1.0],
        ],
        vec![0, 0, 1, 1],
    )
    .unwrap()
}

/// Random dataset with at least two samples per class and values on a
/// coarse grid, so exact distance ties actually occur.
pub fn random_dataset(rng: &mut ChaCha20Rng, n: usize, p: usize) -> Dataset {
    loop {
        let labels: Vec<Label> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let ones = labels.iter().filter(|&&y| y == 1).count();
        if ones < 2 || n - ones < 2 {
            continue;
        }
        let values = (0..n * p).map(|_| rng.random_range(0..8) as f64 / 4.0).collect();
        return Dataset::new(values, p, labels).unwrap();
    }
}

/// Continuous-valued dataset with a weak class signal.
pub fn random_continuous(rng: &mut ChaCha20Rng, n: usize, p: usize) -> Dataset {
    loop {
        let labels: Vec<Label> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let ones = labels.iter().filter(|&&y| y == 1).count();
        if ones < 2 || n - ones < 2 {
            continue;
        }
        let mut values = Vec::with_capacity(n * p);
        for &y in &labels {
            for j in 0..p {
                let shift = if j % 3 == 0 { y as f64 * 0.8 } else { 0.0 };
                values.push(rng.random::<f64>() * 2.0 - 1.0 + shift);
            }
        }
        return Dataset::new(values, p, labels).unwrap();
    }
}

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn sq(ds: &Dataset, a: usize, b: usize, features: &[usize]) -> f64 {
    let mut acc = 0.0;
    for &j in features {
        let d = ds.value(a, j) - ds.value(b, j);
        acc += d * d;
    }
    acc
}

/// Plain O(n) scan for the nearest row to `i` with (`same` = true) the same
/// label or the opposite label, excluding `i`. Lowest index wins ties.
pub fn brute_nearest(ds: &Dataset, i: usize, same: bool, features: &[usize]) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for j in 0..ds.n() {
        if j == i || (ds.label(j) == ds.label(i)) != same {
            continue;
        }
        let d = sq(ds, i, j, features);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, j));
        }
    }
    best.map(|(_, j)| j)
}

/// Misclassified rows with prototypes `s` (wins ties) and `o`.
pub fn brute_errors(ds: &Dataset, s: usize, o: usize, features: &[usize]) -> usize {
    (0..ds.n())
        .filter(|&i| {
            let pred = if sq(ds, i, o, features) < sq(ds, i, s, features) {
                ds.label(o)
            } else {
                ds.label(s)
            };
            pred != ds.label(i)
        })
        .count()
}

/// Quadruple loop over ordered cross-class pairs and feature bitmasks.
/// Returns the minimal error.
pub fn brute_oracle_error(ds: &Dataset) -> usize {
    let p = ds.p();
    let mut best = usize::MAX;
    for s in 0..ds.n() {
        for o in 0..ds.n() {
            if ds.label(s) == ds.label(o) {
                continue;
            }
            for mask in 1u32..(1 << p) {
                let features: Vec<usize> = (0..p).filter(|j| mask & (1 << j) != 0).collect();
                best = best.min(brute_errors(ds, s, o, &features));
            }
        }
    }
    best
}

/// Outcome of the sequential reference trainer.
#[derive(Debug, Clone, PartialEq)]
pub struct RefModel {
    pub same: usize,
    pub opposite: usize,
    pub features: Vec<usize>,
    pub error: usize,
    pub levels: usize,
}

/// Straight-line reference trainer: ascending pivots, strict `<` on the
/// error, exact neighbors, no parallelism. `None` when level 0 has no
/// candidate.
pub fn reference_train(ds: &Dataset) -> Option<RefModel> {
    let mut active: Vec<usize> = (0..ds.p()).collect();
    let mut winner: Option<RefModel> = None;
    let cap = ds.p().min(64);
    let mut levels = 0;
    while levels < cap {
        let mut level_best: Option<RefModel> = None;
        for i in 0..ds.n() {
            let s = brute_nearest(ds, i, true, &active)?;
            let o = brute_nearest(ds, i, false, &active)?;
            let kept: Vec<usize> = active
                .iter()
                .copied()
                .filter(|&j| {
                    let vs = (ds.value(s, j) - ds.value(i, j)).abs();
                    let vo = (ds.value(o, j) - ds.value(i, j)).abs();
                    vo - vs > 0.0
                })
                .collect();
            if kept.len() <= 1 {
                continue;
            }
            let error = brute_errors(ds, s, o, &kept);
            if level_best.as_ref().is_none_or(|b| error < b.error) {
                level_best = Some(RefModel {
                    same: s,
                    opposite: o,
                    features: kept,
                    error,
                    levels: 0,
                });
            }
        }
        let Some(mut best) = level_best else {
            break;
        };
        levels += 1;
        best.levels = levels;
        let converged = best.features == active;
        active = best.features.clone();
        winner = Some(best);
        if converged {
            break;
        }
    }
    winner
}
