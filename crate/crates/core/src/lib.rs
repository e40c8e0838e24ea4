//! Sparse two-prototype binary classification.
//!
//! A trained model is two training samples, one per class, compared over a
//! small subset of features: a query takes the label of whichever prototype
//! is closer. Training searches for the pair by pairing every sample with
//! its nearest same-class and opposite-class neighbors, pruning features
//! that pull the sample toward the wrong class, and recursing on the
//! surviving features of the best-scoring pair.
//!
//! ```
//! use natural_learning::{nl_train, predict_one, Dataset, TrainConfig};
//!
//! let ds = Dataset::from_rows(
//!     &[
//!         vec![0.0, 0.0, 1.0, 0.0],
//!         vec![0.75, 0.0, 0.75, 0.5],
//!         vec![0.25, 0.25, 0.0, 0.5],
//!         vec![0.5, 1.0, 0.25, 1.0],
//!     ],
//!     vec![0, 0, 1, 1],
//! )?;
//! let (model, stats) = nl_train(&ds, &TrainConfig::default())?;
//! assert_eq!(stats.iterations(), 2);
//! assert_eq!(predict_one(&model, ds.row(3))?.label, 1);
//! # Ok::<(), natural_learning::Error>(())
//! ```

pub mod bench;
pub mod cli;
pub mod data;
pub mod distance;
pub mod error;
pub mod metrics;
pub mod model;
pub mod model_file;
pub mod neighbors;
pub mod oracle;
pub mod predict;
pub mod rng;
pub mod train;

pub use bench::{bench_run, BenchConfig, BenchReport};
pub use data::{
    load_csv, minmax_apply, minmax_fit, stratified_folds, train_test_split, Dataset, FeatureSet,
    FoldPlan, Label, LabelColumn, Scaler,
};
pub use error::{Error, Result};
pub use metrics::{accuracy, confusion, f_measure, sparsity_report, ConfusionMatrix};
pub use model::{NlModel, Prototype};
pub use neighbors::{
    build_index, exact_nearest, ClassConstraint, LshParams, ModeChoice, NeighborIndex, SearchMode,
};
pub use oracle::{oracle_search, OracleConfig, OracleResult};
pub use predict::{distance, explain, predict_batch, predict_one, Prediction};
pub use train::{
    compare_features, evaluate_candidate, nl_train, train_level, CandidatePrototype, TrainConfig,
    TrainStats, Triplet,
};
