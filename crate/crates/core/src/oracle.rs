//! Exhaustive reference search: every cross-class prototype pair against
//! every feature subset in a size range. Exponential in `p`, so it is
//! guarded and meant for verification on small inputs.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{Dataset, FeatureSet};
use crate::distance::squared_on;
use crate::error::{Error, Result};

/// Largest feature count the oracle accepts.
pub const MAX_FEATURES: usize = 12;

/// Default work budget, in single-row evaluations: the cost of a full
/// search over a balanced 20-sample, 12-feature dataset.
pub const DEFAULT_WORK_BUDGET: u64 = 2 * 10 * 10 * ((1 << 12) - 1) * 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    pub min_subset: usize,
    pub max_subset: usize,
    pub work_budget: u64,
}

impl OracleConfig {
    pub fn new(min_subset: usize, max_subset: usize) -> Self {
        OracleConfig {
            min_subset,
            max_subset,
            work_budget: DEFAULT_WORK_BUDGET,
        }
    }

    /// Every subset size from 1 to `p`.
    pub fn full(p: usize) -> Self {
        OracleConfig::new(1, p)
    }
}

/// Optimal prototype pair and subset. `s` wins distance ties, as the
/// `same` prototype does in a trained model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleResult {
    pub s: usize,
    pub o: usize,
    pub subset: FeatureSet,
    pub error: usize,
    /// Number of (pair, subset) solutions sharing the optimal error and
    /// subset size.
    pub ties: usize,
}

fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Subsets of `0..p` of size `k`, lexicographic.
fn combinations(p: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k == 0 || k > p {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(pos) = (0..k).rev().find(|&t| cur[t] < p - k + t) else {
            return out;
        };
        cur[pos] += 1;
        for t in pos + 1..k {
            cur[t] = cur[t - 1] + 1;
        }
    }
}

/// Work estimate (row evaluations) for `oracle_search` on `ds`.
pub fn search_cost(ds: &Dataset, min_subset: usize, max_subset: usize) -> u64 {
    let [c0, c1] = ds.class_counts();
    let pairs = 2 * c0 as u64 * c1 as u64;
    let subsets: u64 = (min_subset..=max_subset).map(|k| binomial(ds.p(), k)).sum();
    pairs.saturating_mul(subsets).saturating_mul(ds.n() as u64)
}

/// Finds the pair and subset with the fewest training errors; among those
/// the smallest subset, then the lexicographically smallest `(s, o, subset)`.
/// `s` and `o` range over all ordered pairs with distinct labels, so either
/// class may hold the tie-winning prototype.
pub fn oracle_search(ds: &Dataset, config: &OracleConfig) -> Result<OracleResult> {
    let p = ds.p();
    if p > MAX_FEATURES {
        return Err(Error::OracleGuard(format!(
            "{p} features exceeds the limit of {MAX_FEATURES}"
        )));
    }
    if config.min_subset < 1 || config.min_subset > config.max_subset || config.max_subset > p {
        return Err(Error::InvalidArgument(format!(
            "subset sizes must satisfy 1 <= min ({}) <= max ({}) <= p ({p})",
            config.min_subset, config.max_subset
        )));
    }
    let [c0, c1] = ds.class_counts();
    if c0 == 0 || c1 == 0 {
        return Err(Error::ClassSize {
            class: if c0 == 0 { 0 } else { 1 },
            count: 0,
            required: 1,
        });
    }
    let cost = search_cost(ds, config.min_subset, config.max_subset);
    if cost > config.work_budget {
        return Err(Error::OracleGuard(format!(
            "n={}, p={}, subset sizes {}..={} need {cost} row evaluations, budget is {} \
             (about n <= 20 with p <= 12 for a full search)",
            ds.n(),
            p,
            config.min_subset,
            config.max_subset,
            config.work_budget
        )));
    }

    let pairs: Vec<(usize, usize)> = (0..ds.n())
        .flat_map(|s| (0..ds.n()).map(move |o| (s, o)))
        .filter(|&(s, o)| ds.label(s) != ds.label(o))
        .collect();
    let subsets: Vec<Vec<usize>> = (config.min_subset..=config.max_subset)
        .flat_map(|k| combinations(p, k))
        .collect();

    // per subset: (error, s, o, ties at that error)
    let per_subset: Vec<(usize, usize, usize, usize)> = subsets
        .par_iter()
        .map(|subset| {
            let mut best = (usize::MAX, 0, 0, 0);
            for &(s, o) in &pairs {
                let e = count_errors(ds, s, o, subset);
                if e < best.0 {
                    best = (e, s, o, 1);
                } else if e == best.0 {
                    best.3 += 1;
                }
            }
            best
        })
        .collect();

    let (k, &(error, s, o, _)) = per_subset
        .iter()
        .enumerate()
        .min_by(|(ka, a), (kb, b)| {
            (a.0, subsets[*ka].len(), a.1, a.2, &subsets[*ka]).cmp(&(
                b.0,
                subsets[*kb].len(),
                b.1,
                b.2,
                &subsets[*kb],
            ))
        })
        .expect("at least one subset");
    let size = subsets[k].len();
    let ties = per_subset
        .iter()
        .zip(&subsets)
        .filter(|(r, sub)| r.0 == error && sub.len() == size)
        .map(|(r, _)| r.3)
        .sum();
    Ok(OracleResult {
        s,
        o,
        subset: FeatureSet::new(subsets[k].iter().copied()),
        error,
        ties,
    })
}

fn count_errors(ds: &Dataset, s: usize, o: usize, subset: &[usize]) -> usize {
    let (ps, po) = (ds.row(s), ds.row(o));
    let (ys, yo) = (ds.label(s), ds.label(o));
    ds.rows()
        .zip(ds.labels())
        .filter(|(x, &y)| {
            let pred = if squared_on(x, po, subset) < squared_on(x, ps, subset) {
                yo
            } else {
                ys
            };
            pred != y
        })
        .count()
}
