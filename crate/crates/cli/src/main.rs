//! `isopref` command-line driver.

mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use isopref::cv::split_fraction;
use isopref::io::{ingest_csv, load_model, read_criteria, save_model, Ingested, Rejection};
use isopref::metrics::{
    bootstrap_ci, irreducible_error, metric_report, preference_misalignment, EmpiricalDistribution,
    MetricReport,
};
use isopref::mismatch::{demo_bias_table, feasibility_checks, write_bias_csv};
use isopref::rng::derive_seed;
use isopref::synth::{run_experiment, write_experiment_csv, UtilityFamily};
use isopref::{cross_validate, Lambda, LambdaGrid, PreferenceFn};
use serde::Serialize;

use config::{DataConfig, SynthConfig};

#[derive(Parser)]
#[command(name = "isopref", version, about = "Fit monotone preference functions to ratings")]
struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Master seed; overrides the config file
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a ratings file, choose lambda on the training part, report on the test part
    Fit(FitArgs),
    /// Score criteria vectors with a saved model
    Predict(PredictArgs),
    /// Report a saved model's errors on a labeled file
    Evaluate(EvaluateArgs),
    /// Run the synthetic benchmark
    Synth(SynthArgs),
    /// Linear-model bias on the counterexample matrices
    Mismatch(MismatchArgs),
    /// Bootstrap interval for the irreducible error of a ratings file
    Bootstrap(BootstrapArgs),
}

#[derive(Args)]
struct DataArgs {
    /// TOML file with the column layout and score scales
    #[arg(long)]
    config: PathBuf,

    /// Ratings CSV
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,

    /// Comma-separated lambdas, `inf` allowed
    #[arg(long)]
    lambda_grid: Option<String>,

    /// Training fraction
    #[arg(long)]
    split: Option<f64>,

    /// Where to save the fitted model
    #[arg(long)]
    model: Option<PathBuf>,

    /// Where to write the JSON report (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,

    /// CSV with the model's criteria columns
    #[arg(long)]
    input: PathBuf,

    #[arg(long, default_value_t = ',')]
    delimiter: char,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,

    #[arg(long)]
    model: PathBuf,

    /// Second model to compare against on the file's criteria vectors
    #[arg(long)]
    other: Option<PathBuf>,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// TOML experiment config; missing keys take the defaults
    #[arg(long)]
    config: Option<PathBuf>,

    /// Comma-separated families: linear, leontief, cobb_douglas
    #[arg(long, value_delimiter = ',')]
    families: Option<Vec<UtilityFamily>>,

    #[arg(long)]
    trials: Option<usize>,

    /// Comma-separated sample sizes
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,

    #[arg(long)]
    lambda_grid: Option<String>,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MismatchArgs {
    /// Matrix sizes; each runs every construction that accepts it
    #[arg(long = "m", value_delimiter = ',', default_value = "3,4,6,8,9,12")]
    ms: Vec<u32>,

    #[arg(long)]
    out: Option<PathBuf>,

    /// Also write the ordering feasibility checks to this CSV
    #[arg(long)]
    checks: Option<PathBuf>,
}

#[derive(Args)]
struct BootstrapArgs {
    #[command(flatten)]
    data: DataArgs,

    #[arg(long, default_value_t = 1000)]
    resamples: usize,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct RiskEntry {
    lambda: Lambda,
    sse: f64,
}

#[derive(Serialize)]
struct FitReport {
    #[serde(flatten)]
    metrics: MetricReport,
    chosen_lambda: Lambda,
    n_train: usize,
    seed: u64,
    split: f64,
    lambda_grid: String,
    /// Sum of squared errors on the validation part of the training data
    validation_sse: Vec<RiskEntry>,
    rejections: Vec<Rejection>,
}

#[derive(Serialize)]
struct EvaluateReport {
    #[serde(flatten)]
    metrics: MetricReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    preference_misalignment: Option<f64>,
    rejections: Vec<Rejection>,
}

#[derive(Serialize)]
struct BootstrapReport {
    statistic: &'static str,
    estimate: f64,
    lower: f64,
    upper: f64,
    resamples: usize,
    n: usize,
    seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(e.to_string().trim()),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&format!("{e:#}")),
    }
}

fn fail(msg: &str) -> ExitCode {
    eprintln!("{}", serde_json::json!({ "error": msg }));
    ExitCode::FAILURE
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        ensure!(n > 0, "--threads must be positive");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot start thread pool")?;
    }
    match cli.command {
        Command::Fit(a) => fit(a, cli.seed),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Synth(a) => synth(a, cli.seed),
        Command::Mismatch(a) => mismatch(a),
        Command::Bootstrap(a) => bootstrap(a, cli.seed),
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn ingest(args: &DataArgs) -> Result<(DataConfig, Ingested)> {
    let cfg: DataConfig = config::load(&args.config)?;
    let ingested = ingest_csv(&args.data, &cfg.ingest)
        .with_context(|| format!("cannot ingest {}", args.data.display()))?;
    Ok((cfg, ingested))
}

fn fit(args: FitArgs, seed: Option<u64>) -> Result<()> {
    let (cfg, ingested) = ingest(&args.data)?;
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let split = args.split.or(cfg.split).unwrap_or(0.8);
    let grid = match args.lambda_grid.as_deref().or(cfg.lambda_grid.as_deref()) {
        Some(s) => config::parse_grid(s)?,
        None => LambdaGrid::default(),
    };
    let (train, test) = split_fraction(&ingested.dataset, split, derive_seed(seed, &[0]))?;
    let cv = cross_validate(&train, &grid, derive_seed(seed, &[1]))?;
    let metrics = metric_report(&cv.final_model, &test)?;
    if let Some(path) = &args.model {
        save_model(path, &cv.final_model, cfg.ingest.criteria_columns.clone())
            .with_context(|| format!("cannot save model to {}", path.display()))?;
    }
    let report = FitReport {
        metrics,
        chosen_lambda: cv.chosen_lambda,
        n_train: train.len(),
        seed,
        split,
        lambda_grid: grid.to_string(),
        validation_sse: cv
            .validation_risks
            .iter()
            .map(|&(lambda, sse)| RiskEntry { lambda, sse })
            .collect(),
        rejections: ingested.rejections,
    };
    write_json(&report, args.out.as_deref())
}

fn predict(args: PredictArgs) -> Result<()> {
    let (model, columns) = load_model(&args.model)
        .with_context(|| format!("cannot load model {}", args.model.display()))?;
    ensure!(!columns.is_empty(), "model {} names no criteria columns", args.model.display());
    let file = File::open(&args.input)
        .with_context(|| format!("cannot open {}", args.input.display()))?;
    let rows = read_criteria(file, &columns, args.delimiter, model.spec())?;
    for r in &rows.rejections {
        eprintln!("{}", serde_json::json!({ "skipped": r.to_string() }));
    }
    let mut out = csv::Writer::from_writer(sink(args.out.as_deref())?);
    let mut header: Vec<&str> = vec!["line"];
    header.extend(columns.iter().map(String::as_str));
    header.extend(["prediction", "prediction_raw"]);
    out.write_record(&header)?;
    for (line, x) in &rows.rows {
        let y = model.value(x);
        let mut rec = vec![line.to_string()];
        rec.extend(x.coords().iter().map(u32::to_string));
        rec.push(y.to_string());
        rec.push(model.spec().unscale(y).to_string());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let (cfg, ingested) = ingest(&args.data)?;
    let (model, columns) = load_model(&args.model)
        .with_context(|| format!("cannot load model {}", args.model.display()))?;
    if model.spec() != ingested.dataset.spec() {
        bail!("model lattice does not match config {}", args.data.config.display());
    }
    if !columns.is_empty() && columns != cfg.ingest.criteria_columns {
        bail!("model columns {columns:?} differ from config columns {:?}", cfg.ingest.criteria_columns);
    }
    let metrics = metric_report(&model, &ingested.dataset)?;
    let preference_misalignment = match &args.other {
        Some(path) => {
            let (other, _) = load_model(path)
                .with_context(|| format!("cannot load model {}", path.display()))?;
            let p = EmpiricalDistribution::from_dataset(&ingested.dataset);
            Some(preference_misalignment(&model, &other, &p)?.value)
        }
        None => None,
    };
    let report = EvaluateReport {
        metrics,
        preference_misalignment,
        rejections: ingested.rejections,
    };
    write_json(&report, args.out.as_deref())
}

fn synth(args: SynthArgs, seed: Option<u64>) -> Result<()> {
    let file_cfg: SynthConfig = match &args.config {
        Some(p) => config::load(p)?,
        None => SynthConfig::default(),
    };
    let mut cfg = file_cfg.experiment()?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(sizes) = args.sizes {
        cfg.sample_sizes = sizes;
    }
    if let Some(g) = &args.lambda_grid {
        cfg.grid = config::parse_grid(g)?;
    }
    let families = args
        .families
        .or(file_cfg.families)
        .unwrap_or_else(|| UtilityFamily::ALL.to_vec());
    let mut rows = Vec::new();
    for family in families {
        rows.extend(run_experiment(&cfg, family)?);
    }
    let mut out = sink(args.out.as_deref())?;
    write_experiment_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn mismatch(args: MismatchArgs) -> Result<()> {
    let rows = demo_bias_table(&args.ms)?;
    let mut out = sink(args.out.as_deref())?;
    write_bias_csv(&rows, &mut out)?;
    out.flush()?;
    if let Some(path) = &args.checks {
        let mut w = csv::Writer::from_writer(sink(Some(path))?);
        for c in feasibility_checks()? {
            w.serialize(c)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn bootstrap(args: BootstrapArgs, seed: Option<u64>) -> Result<()> {
    let (cfg, ingested) = ingest(&args.data)?;
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let ds = &ingested.dataset;
    let estimate = irreducible_error(ds)?;
    let (lower, upper) = bootstrap_ci(irreducible_error, ds, args.resamples, seed)?;
    let report = BootstrapReport {
        statistic: "irreducible_error",
        estimate,
        lower,
        upper,
        resamples: args.resamples,
        n: ds.len(),
        seed,
    };
    write_json(&report, args.out.as_deref())
}
