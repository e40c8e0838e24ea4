//! `nl` command-line interface.
//!
//! Exit codes: 0 success, 1 usage or contract error, 2 training failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, LevelFilter};
use serde_json::json;

use crate::bench::{bench_run, BenchConfig};
use crate::data::{dataset_from_table, load_csv, CsvOptions, LabelColumn, RawTable};
use crate::error::{Error, Result};
use crate::metrics::{accuracy, confusion, f_measure};
use crate::model_file;
use crate::neighbors::{LshParams, ModeChoice, NeighborConfig};
use crate::oracle::{oracle_search, OracleConfig};
use crate::predict::{explain, predict_rows};
use crate::train::{nl_train, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_TRAINING: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "nl", version, about = "Sparse two-prototype binary classifier")]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "NL_THREADS")]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = LogLevel::Error)]
    log_level: LogLevel,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LogLevel {
    Error,
    Info,
    Debug,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model and write it as JSON.
    Train(TrainArgs),
    /// Write per-row predictions as CSV.
    Predict(PredictArgs),
    /// Print accuracy, F1 and the confusion matrix as JSON.
    Evaluate(EvaluateArgs),
    /// Stratified k-fold benchmark.
    Bench(BenchArgs),
    /// Print a model card, optionally with the decision for one row.
    Explain(ExplainArgs),
    /// Exhaustive pair/subset search on a small dataset.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
struct NeighborArgs {
    /// Neighbor search: exact, lsh, or auto (exact up to 2000 samples).
    #[arg(long = "nn", default_value = "auto")]
    mode: String,
    #[arg(long, default_value_t = 8)]
    lsh_tables: usize,
    #[arg(long, default_value_t = 4)]
    lsh_hashes: usize,
    /// Bucket width (default: derived from nearest-neighbor distances).
    #[arg(long)]
    lsh_width: Option<f64>,
}

impl NeighborArgs {
    fn config(&self) -> Result<NeighborConfig> {
        Ok(NeighborConfig {
            mode: self.mode.parse::<ModeChoice>()?,
            lsh: LshParams {
                tables: self.lsh_tables,
                hashes_per_table: self.lsh_hashes,
                bucket_width: self.lsh_width,
            },
        })
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    input: PathBuf,
    /// Label column: header name or 0-based index (default: last column).
    #[arg(long)]
    label: Option<String>,
    /// Min-max scale features before training.
    #[arg(long)]
    scale: bool,
    #[command(flatten)]
    nn: NeighborArgs,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
    /// Record the creation time in the model metadata.
    #[arg(long)]
    stamp: bool,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Label column; when given, the error count is printed.
    #[arg(long)]
    label: Option<String>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    label: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportFormat {
    Table,
    Json,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    label: Option<String>,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    scale: bool,
    #[command(flatten)]
    nn: NeighborArgs,
    /// Stdout format.
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    format: ReportFormat,
    /// Also write the JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExplainArgs {
    #[arg(long)]
    model: PathBuf,
    /// CSV whose first data row is explained; columns matched by name.
    #[arg(long)]
    sample: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    label: Option<String>,
    #[arg(long, default_value_t = 1)]
    min_subset: usize,
    /// Default: number of features.
    #[arg(long)]
    max_subset: Option<usize>,
}

fn label_column(spec: &Option<String>) -> LabelColumn {
    spec.as_deref().map(LabelColumn::parse).unwrap_or_default()
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NoCandidate { .. } => EXIT_TRAINING,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.log_level {
        LogLevel::Error => LevelFilter::Error,
        LogLevel::Info => LevelFilter::Info,
        LogLevel::Debug => LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        pool = pool.num_threads(t.max(1));
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return EXIT_USAGE;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Explain(a) => cmd_explain(a),
        Command::Oracle(a) => cmd_oracle(a),
    }
}

fn cmd_train(a: TrainArgs) -> Result<i32> {
    let ds = load_csv(&a.input, label_column(&a.label))?;
    let config = TrainConfig {
        neighbors: a.nn.config()?,
        seed: a.seed,
        scale: a.scale,
        ..TrainConfig::default()
    };
    let (mut model, stats) = nl_train(&ds, &config)?;
    if a.stamp {
        model.meta.created_at = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
    }
    model_file::save(&model, &a.output)?;
    info!("wrote {}", a.output.display());
    println!(
        "levels {}, |M| {}, train_error {}/{}, mode {}",
        stats.iterations(),
        model.num_features(),
        model.meta.train_error,
        ds.n(),
        stats.mode
    );
    println!("features: {}", model.feature_names.join(", "));
    println!(
        "prototypes: sample {} ({}), sample {} ({})",
        model.same.sample_id,
        model.class_name(model.same.label),
        model.opposite.sample_id,
        model.class_name(model.opposite.label)
    );
    Ok(EXIT_OK)
}

fn cmd_predict(a: PredictArgs) -> Result<i32> {
    let model = model_file::load(&a.model)?;
    let table = RawTable::read(&a.input)?;
    let out = File::create(&a.output).map_err(|e| Error::io(&a.output, e))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sample_id", "predicted_label", "d_s", "d_o"])?;
    if table.header.is_empty() && table.rows.is_empty() {
        w.flush().map_err(|e| Error::io(&a.output, e))?;
        return Ok(EXIT_OK);
    }

    let rows = table.numeric_columns(&model.feature_names)?;
    let predictions = predict_rows(&model, rows.iter().map(Vec::as_slice))?;
    for (i, p) in predictions.iter().enumerate() {
        w.write_record([
            i.to_string(),
            p.label.to_string(),
            p.d_same.to_string(),
            p.d_opposite.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&a.output, e))?;

    if let Some(label) = &a.label {
        let ds = dataset_from_table(
            &table,
            &CsvOptions {
                label: LabelColumn::parse(label),
                class_names: Some(model.class_names.clone()),
                skip_train_checks: true,
            },
        )?;
        let errors = predictions
            .iter()
            .zip(ds.labels())
            .filter(|(p, &y)| p.label != y)
            .count();
        println!("errors {errors} of {}", predictions.len());
    }
    Ok(EXIT_OK)
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<i32> {
    let model = model_file::load(&a.model)?;
    let table = RawTable::read(&a.input)?;
    let ds = dataset_from_table(
        &table,
        &CsvOptions {
            label: LabelColumn::parse(&a.label),
            class_names: Some(model.class_names.clone()),
            skip_train_checks: true,
        },
    )?;
    let rows = table.numeric_columns(&model.feature_names)?;
    let predicted: Vec<u8> = predict_rows(&model, rows.iter().map(Vec::as_slice))?
        .iter()
        .map(|p| p.label)
        .collect();
    let cm = confusion(ds.labels(), &predicted)?;
    let report = json!({
        "n": cm.total(),
        "errors": cm.total() - cm.correct(),
        "accuracy": accuracy(&cm)?,
        "f1": f_measure(&cm)?,
        "confusion": cm,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(EXIT_OK)
}

fn cmd_bench(a: BenchArgs) -> Result<i32> {
    let ds = load_csv(&a.input, label_column(&a.label))?;
    let config = BenchConfig {
        folds: a.folds,
        seed: a.seed,
        train: TrainConfig {
            neighbors: a.nn.config()?,
            seed: a.seed,
            scale: a.scale,
            ..TrainConfig::default()
        },
    };
    let report = bench_run(&ds, &config)?;
    let text = serde_json::to_string_pretty(&report)?;
    if let Some(path) = &a.json {
        let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
        writeln!(f, "{text}").map_err(|e| Error::io(path, e))?;
    }
    match a.format {
        ReportFormat::Table => print!("{}", report.table()),
        ReportFormat::Json => println!("{text}"),
    }
    Ok(if report.summary.succeeded > 0 {
        EXIT_OK
    } else {
        EXIT_TRAINING
    })
}

fn cmd_explain(a: ExplainArgs) -> Result<i32> {
    let model = model_file::load(&a.model)?;
    let row = match &a.sample {
        None => None,
        Some(path) => {
            let table = RawTable::read(path)?;
            let rows = table.numeric_columns(&model.feature_names)?;
            let first = rows
                .into_iter()
                .next()
                .ok_or_else(|| Error::InvalidArgument(format!("{} has no data rows", path.display())))?;
            Some(first)
        }
    };
    print!("{}", explain(&model, row.as_deref())?);
    Ok(EXIT_OK)
}

fn cmd_oracle(a: OracleArgs) -> Result<i32> {
    let ds = load_csv(&a.input, label_column(&a.label))?;
    let config = OracleConfig::new(a.min_subset, a.max_subset.unwrap_or(ds.p()));
    let result = oracle_search(&ds, &config)?;
    let report = json!({
        "s": result.s,
        "o": result.o,
        "s_sample_id": ds.sample_ids()[result.s],
        "o_sample_id": ds.sample_ids()[result.o],
        "s_label": ds.label(result.s),
        "o_label": ds.label(result.o),
        "subset": result.subset,
        "subset_names": result.subset.iter().map(|j| ds.feature_names()[j].clone()).collect::<Vec<_>>(),
        "error": result.error,
        "ties": result.ties,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(EXIT_OK)
}
