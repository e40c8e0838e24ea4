//! Release acceptance checks. Each test is one criterion and prints a
//! one-line summary of what it measured.
//!
//! `NL_MNIST01_CSV` may point at an MNIST CSV with a `label` column; rows
//! labeled 0 or 1 are used and the check is skipped when it is unset.

mod common;

use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use natural_learning::data::{dataset_from_table, CsvOptions, RawTable};
use natural_learning::model::ModelMeta;
use natural_learning::train::compare_features;
use natural_learning::{
    bench_run, load_csv, nl_train, oracle_search, predict_batch, sparsity_report, train_test_split,
    BenchConfig, BenchReport, ClassConstraint, Dataset, FeatureSet, LabelColumn, LshParams, NeighborIndex,
    NlModel, OracleConfig, Prototype, SearchMode, TrainConfig,
};

use common::*;

fn report(name: &str, detail: impl AsRef<str>) {
    println!("[acceptance] {name}: {}", detail.as_ref());
}

/// Structural checks every trained model must satisfy.
fn check_sparsity(model: &NlModel, train: &Dataset) {
    let m = model.num_features();
    assert!(m >= 2, "|M| = {m}");
    assert_ne!(model.same.label, model.opposite.label);
    assert_eq!(model.same.values.len(), m);
    assert_eq!(model.opposite.values.len(), m);
    let s = sparsity_report(model, train);
    assert_eq!(s.sample_ratio, 2.0 / train.n() as f64);
    assert_eq!(s.feature_ratio, m as f64 / train.p() as f64);
}

struct WdbcRun {
    report: BenchReport,
    elapsed: Duration,
}

fn wdbc(scale: bool) -> &'static WdbcRun {
    static UNSCALED: OnceLock<WdbcRun> = OnceLock::new();
    static SCALED: OnceLock<WdbcRun> = OnceLock::new();
    let cell = if scale { &SCALED } else { &UNSCALED };
    cell.get_or_init(|| {
        let ds = load_csv(data_path("wdbc.csv"), LabelColumn::parse("diagnosis")).unwrap();
        assert_eq!((ds.n(), ds.p()), (569, 30));
        let config = BenchConfig {
            folds: 10,
            seed: 42,
            train: TrainConfig {
                scale,
                ..TrainConfig::default()
            },
        };
        let started = Instant::now();
        let report = bench_run(&ds, &config).unwrap();
        WdbcRun {
            report,
            elapsed: started.elapsed(),
        }
    })
}

struct RandomRun {
    nl_error: usize,
    oracle_error: usize,
    reevaluated: usize,
    levels: usize,
    p: usize,
}

/// NL and oracle on 200 small random instances; `None` where NL has no
/// candidate at the first level.
fn random_runs() -> &'static Vec<Option<RandomRun>> {
    static RUNS: OnceLock<Vec<Option<RandomRun>>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let mut rng = rng(5);
        (0..200)
            .map(|k| {
                let n = 6 + k % 7;
                let p = 2 + (k / 7) % 4;
                let ds = if k % 2 == 0 {
                    random_dataset(&mut rng, n, p)
                } else {
                    random_continuous(&mut rng, n, p)
                };
                let (model, stats) = match nl_train(&ds, &TrainConfig::default()) {
                    Ok(r) => r,
                    Err(natural_learning::Error::NoCandidate { .. }) => return None,
                    Err(e) => panic!("instance {k}: {e}"),
                };
                check_sparsity(&model, &ds);
                let oracle = oracle_search(&ds, &OracleConfig::full(p)).unwrap();
                Some(RandomRun {
                    nl_error: model.meta.train_error,
                    oracle_error: oracle.error,
                    reevaluated: predict_batch(&model, &ds).unwrap().errors,
                    levels: stats.iterations(),
                    p,
                })
            })
            .collect()
    })
}

#[test]
fn toy_golden() {
    let ds = toy();
    let all = FeatureSet::all(4);
    let cmp = compare_features(ds.row(0), ds.row(1), ds.row(2), &all);
    assert_eq!(cmp.margin[0], -0.5);
    assert!(!cmp.kept.contains(0));
    assert_eq!(cmp.margin[2], 0.75);
    assert!(cmp.kept.contains(2));

    let (model, stats) = nl_train(&ds, &TrainConfig::default()).unwrap();
    assert_eq!(stats.iterations(), 2);
    let last = stats.levels.last().unwrap();
    assert_eq!(last.kept_features, last.active_features, "feature set still changing");
    let mut ids = [model.same.sample_id, model.opposite.sample_id];
    ids.sort_unstable();
    assert_eq!(ids, [1, 2]);
    assert_eq!(model.meta.train_error, 0);
    check_sparsity(&model, &ds);
    report(
        "toy",
        format!(
            "PASS L={} prototypes {:?} features {} (F1 margin -0.5 pruned, F3 margin 0.75 kept)",
            stats.iterations(),
            ids,
            model.features
        ),
    );
}

#[test]
fn iris_oracle_rule() {
    let ds = load_csv(data_path("iris_setosa_versicolour.csv"), LabelColumn::Last).unwrap();
    assert_eq!(ds.class_names(), &["setosa".to_string(), "versicolor".to_string()]);
    let (train, test) = train_test_split(&ds, 0.2, 42).unwrap();
    assert_eq!((train.n(), test.n()), (80, 20));

    let started = Instant::now();
    let result = oracle_search(&train, &OracleConfig::new(1, 2)).unwrap();
    let elapsed = started.elapsed();

    // The optimum is the fewest-feature zero-error rule; its tie-break
    // pick need not be the petal-length rule, so look for one among the
    // optimal solutions.
    assert_eq!((result.error, result.subset.len()), (0, 1));
    let petal = FeatureSet::new([2]);
    let mut rules = Vec::new();
    for s in (0..train.n()).filter(|&i| train.label(i) == 0) {
        for o in (0..train.n()).filter(|&i| train.label(i) == 1) {
            for (a, b) in [(s, o), (o, s)] {
                if brute_errors(&train, a, b, petal.as_slice()) == result.error {
                    rules.push(rule_model(&train, a, b, &petal));
                }
            }
        }
    }
    let picked = rule_model(&train, result.s, result.o, &result.subset);
    let perfect: Vec<&NlModel> = rules
        .iter()
        .filter(|m| predict_batch(m, &test).unwrap().errors == 0)
        .collect();
    let straddling = perfect
        .iter()
        .filter(|m| {
            let (setosa, versicolor) = by_class(m);
            setosa.values[0] <= 1.9 && versicolor.values[0] >= 3.0
        })
        .count();
    let near_gap = perfect
        .iter()
        .filter(|m| {
            let (setosa, versicolor) = by_class(m);
            setosa.values[0] == 1.4 && versicolor.values[0] == 3.3
        })
        .count();
    let first = perfect.first().expect("a perfect petal-length rule");
    let (setosa, versicolor) = by_class(first);
    let pass = !perfect.is_empty() && straddling == perfect.len() && elapsed < Duration::from_secs(10);
    report(
        "iris",
        format!(
            "{} {} optimal single-feature rules (tie-break pick: {:?}, test errors {}); \
             {} petal_length rules with zero training error, {} with 100% test accuracy, all straddling 1.9..3.0: {}, {} pairing 1.4 with 3.3; \
             first: setosa sample {} = {}, versicolor sample {} = {}; {:.2?}",
            if pass { "PASS" } else { "FAIL" },
            result.ties,
            picked.feature_names,
            predict_batch(&picked, &test).unwrap().errors,
            rules.len(),
            perfect.len(),
            straddling == perfect.len(),
            near_gap,
            setosa.sample_id,
            setosa.values[0],
            versicolor.sample_id,
            versicolor.values[0],
            elapsed
        ),
    );
    assert!(!perfect.is_empty());
    // the class gap in petal length runs from 1.9 to 3.0
    assert_eq!(straddling, perfect.len());
    assert!(elapsed < Duration::from_secs(10));
}

fn rule_model(train: &Dataset, s: usize, o: usize, features: &FeatureSet) -> NlModel {
    let proto = |i: usize| Prototype {
        sample_id: train.sample_ids()[i],
        label: train.label(i),
        values: features.iter().map(|j| train.value(i, j)).collect(),
    };
    NlModel {
        feature_names: features.iter().map(|j| train.feature_names()[j].clone()).collect(),
        features: features.clone(),
        same: proto(s),
        opposite: proto(o),
        scaler: None,
        class_names: train.class_names().clone(),
        meta: ModelMeta {
            train_error: brute_errors(train, s, o, features.as_slice()),
            iterations: 1,
            seed: 42,
            distance: "euclidean".into(),
            n: train.n(),
            p: train.p(),
            created_at: None,
        },
    }
}

fn by_class(m: &NlModel) -> (&Prototype, &Prototype) {
    if m.same.label == 0 {
        (&m.same, &m.opposite)
    } else {
        (&m.opposite, &m.same)
    }
}

#[test]
fn wdbc_ten_fold() {
    let scaled = wdbc(true);
    let s = &scaled.report.summary;
    report(
        "wdbc (scaled, informational)",
        format!(
            "mean acc {:.4}, best {:.4}, |M| {:?}",
            s.accuracy.unwrap().mean,
            s.accuracy.unwrap().max,
            scaled.report.succeeded().map(|m| m.num_features).collect::<Vec<_>>()
        ),
    );

    let run = wdbc(false);
    let r = &run.report;
    let ds = load_csv(data_path("wdbc.csv"), LabelColumn::parse("diagnosis")).unwrap();
    let plan = natural_learning::stratified_folds(&ds, 10, 42).unwrap();
    for (f, fold) in r.folds.iter().enumerate() {
        let m = fold.metrics.as_ref().expect("every fold trains");
        assert_eq!(m.prototype_ids.len(), 2);
        assert_eq!(m.sample_ratio, 2.0 / (569 - plan.folds[f].len()) as f64);
    }
    let acc = r.summary.accuracy.unwrap();
    let sizes: Vec<usize> = r.succeeded().map(|m| m.num_features).collect();
    let sizes_ok = sizes.iter().all(|&m| (2..=15).contains(&m));
    let pass = acc.mean >= 0.90 && acc.max >= 0.96 && sizes_ok && run.elapsed < Duration::from_secs(120);
    report(
        "wdbc",
        format!(
            "{} mean acc {:.4} (>= 0.90), best {:.4} (>= 0.96), |M| per fold {:?} (2..=15), {:.2?}",
            if pass { "PASS" } else { "FAIL" },
            acc.mean,
            acc.max,
            sizes,
            run.elapsed
        ),
    );
    assert!(acc.mean >= 0.90, "mean accuracy {}", acc.mean);
    assert!(acc.max >= 0.96, "best fold {}", acc.max);
    assert!(run.elapsed < Duration::from_secs(120));
    assert!(sizes_ok, "fold feature counts {sizes:?} outside 2..=15");
}

#[test]
fn mnist_zero_vs_one() {
    let Ok(path) = std::env::var("NL_MNIST01_CSV") else {
        report("mnist", "SKIP (NL_MNIST01_CSV not set)");
        return;
    };
    let mut table = RawTable::read(&path).unwrap();
    let col = table.header.iter().position(|h| h == "label").expect("`label` column");
    let mut taken = [0usize; 2];
    table.rows.retain(|row| match row[col].as_str() {
        "0" if taken[0] < 1000 => {
            taken[0] += 1;
            true
        }
        "1" if taken[1] < 1000 => {
            taken[1] += 1;
            true
        }
        _ => false,
    });
    let ds = dataset_from_table(
        &table,
        &CsvOptions {
            label: LabelColumn::parse("label"),
            ..CsvOptions::default()
        },
    )
    .unwrap();
    let (train, test) = train_test_split(&ds, 0.2, 42).unwrap();
    let (model, stats) = nl_train(&train, &TrainConfig::default()).unwrap();
    check_sparsity(&model, &train);
    assert!(stats.iterations() <= train.p().min(64));
    let errors = predict_batch(&model, &test).unwrap().errors;
    let acc = 1.0 - errors as f64 / test.n() as f64;
    report(
        "mnist",
        format!(
            "n {} test acc {:.4} (>= 0.98), |M| {} (<= 30), L {}",
            ds.n(),
            acc,
            model.num_features(),
            stats.iterations()
        ),
    );
    assert!(acc >= 0.98);
    assert!(model.num_features() <= 30);
}

#[test]
fn oracle_lower_bound() {
    let started = Instant::now();
    let runs = random_runs();
    let trained: Vec<&RandomRun> = runs.iter().flatten().collect();
    let below = trained.iter().filter(|r| r.oracle_error <= r.nl_error).count();
    let consistent = trained.iter().filter(|r| r.reevaluated == r.nl_error).count();
    report(
        "oracle bound",
        format!(
            "{} instances, {} trained ({} without a first-level candidate); oracle <= NL in {}/{}, re-evaluation exact in {}/{}; {:.2?}",
            runs.len(),
            trained.len(),
            runs.len() - trained.len(),
            below,
            trained.len(),
            consistent,
            trained.len(),
            started.elapsed()
        ),
    );
    assert!(!trained.is_empty());
    assert_eq!(below, trained.len());
    assert_eq!(consistent, trained.len());
}

#[test]
fn exact_neighbor_equivalence() {
    let mut rng = rng(6);
    let (mut queries, mut hits, mut mismatches) = (0usize, 0usize, 0usize);
    for k in 0..50 {
        let n = 20 + (k * 97) % 481;
        let p = 2 + k % 15;
        let ds = random_continuous(&mut rng, n, p);
        let features = FeatureSet::all(p);
        let exact = NeighborIndex::exact(&ds, features.clone()).unwrap();
        let lsh = NeighborIndex::build(&ds, features.clone(), SearchMode::Lsh, &LshParams::default(), 42)
            .unwrap();
        let all: Vec<usize> = (0..p).collect();
        for i in 0..n {
            for (constraint, same) in [(ClassConstraint::Same, true), (ClassConstraint::Opposite, false)] {
                let want = brute_nearest(&ds, i, same, &all).unwrap();
                if exact.nearest(i, constraint).unwrap() != want {
                    mismatches += 1;
                }
                let got = lsh.nearest(i, constraint).unwrap();
                let d = |j: usize| natural_learning::distance(ds.row(i), ds.row(j), &all).unwrap();
                queries += 1;
                if got == want || d(got) == d(want) {
                    hits += 1;
                }
            }
        }
    }
    let recall = hits as f64 / queries as f64;
    report(
        "nearest neighbors",
        format!(
            "{queries} queries over 50 instances; exact mismatches {mismatches}; LSH recall@1 {recall:.4} (>= 0.90)"
        ),
    );
    assert_eq!(mismatches, 0);
    assert!(recall >= 0.90);
}

#[test]
fn thread_count_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = rng(7);
    let mut identical = 0;
    for k in 0..20 {
        let n = 30 + 10 * k;
        let p = 3 + k % 8;
        let ds = random_continuous(&mut rng, n, p);
        let csv = dir.path().join(format!("d{k}.csv"));
        ds.write_csv(&csv).unwrap();
        let mut files = Vec::new();
        for threads in ["1", "8"] {
            let out = dir.path().join(format!("m{k}_{threads}.json"));
            let status = Command::new(env!("CARGO_BIN_EXE_nl"))
                .args(["--threads", threads, "train", "--input"])
                .arg(&csv)
                .arg("--output")
                .arg(&out)
                .output()
                .unwrap();
            match status.status.code() {
                Some(0) => files.push(Some(std::fs::read(&out).unwrap())),
                Some(2) => files.push(None),
                c => panic!("train exited with {c:?}: {}", String::from_utf8_lossy(&status.stderr)),
            }
        }
        assert_eq!(files[0], files[1], "dataset {k}");
        identical += 1;
    }
    report("determinism", format!("{identical}/20 datasets byte-identical with 1 and 8 threads"));
}

#[test]
fn iteration_bound() {
    let runs = random_runs();
    let worst_random = runs
        .iter()
        .flatten()
        .map(|r| {
            assert!(r.levels <= r.p.min(64), "L {} with p {}", r.levels, r.p);
            r.levels
        })
        .max()
        .unwrap();
    let mut wdbc_levels = Vec::new();
    for scale in [false, true] {
        for m in wdbc(scale).report.succeeded() {
            assert!(m.iterations <= 20, "WDBC fold L {}", m.iterations);
            wdbc_levels.push(m.iterations);
        }
    }
    report(
        "iteration bound",
        format!(
            "max L on random instances {worst_random}; max L on WDBC {} (<= 20)",
            wdbc_levels.iter().max().unwrap()
        ),
    );
}

#[test]
fn sparsity_contract() {
    let runs = random_runs();
    let checked = runs.iter().flatten().count();
    for scale in [false, true] {
        for m in wdbc(scale).report.succeeded() {
            assert!(m.num_features >= 2);
            assert_ne!(m.prototype_ids[0], m.prototype_ids[1]);
        }
    }
    let ds = load_csv(data_path("wdbc.csv"), LabelColumn::parse("diagnosis")).unwrap();
    let (model, _) = nl_train(&ds, &TrainConfig::default()).unwrap();
    check_sparsity(&model, &ds);
    assert_eq!(sparsity_report(&model, &ds).sample_ratio, 2.0 / 569.0);
    report(
        "sparsity",
        format!(
            "{} random models and 20 WDBC fold models have 2 prototypes and |M| >= 2; full WDBC model |M| {} sample ratio {}",
            checked,
            model.num_features(),
            2.0 / 569.0
        ),
    );
}
