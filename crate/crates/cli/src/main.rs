use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use guided_forest::data::{load_csv, load_feature_rows, simulate_dataset, write_csv, CsvSchema, LabelColumn, SyntheticSpec};
use guided_forest::eval::{run_benchmark, write_csv_report, BenchmarkConfig, Method, SplitPlan};
use guided_forest::forest::{read_model, write_model};
use guided_forest::pipeline::{
    final_seed, guide_seed, read_lambda_file, select_from_importance, select_with_custom_weights, selector_seed,
    train_guide,
};
use guided_forest::tree::default_mtry;
use guided_forest::{build_forest, Dataset, Error, ForestConfig, Mode, RegWeights};

#[derive(Parser, Debug)]
#[command(name = "grf", version, about = "Guided random forests: training, feature selection and benchmarking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a forest and write it as a model file.
    Train(TrainArgs),
    /// Select features with a guided (or custom-weighted) forest.
    Select(SelectArgs),
    /// Classify the rows of a CSV with a saved model.
    Predict(PredictArgs),
    /// Replicated train/test comparison of several methods.
    Evaluate(EvaluateArgs),
    /// Write the synthetic two-relevant-feature dataset as CSV.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Clone)]
struct ForestArgs {
    /// Master seed; per-stage seeds are derived from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    trees: usize,
    /// Features tried per node [default: floor(sqrt(n_features))].
    #[arg(long)]
    mtry: Option<usize>,
    /// Worker threads [default: available parallelism].
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 1)]
    min_leaf: usize,
    #[arg(long)]
    max_depth: Option<usize>,
    /// Constant weight for RRF.
    #[arg(long, default_value_t = 0.8)]
    rrf_lambda: f64,
}

#[derive(Args, Debug, Clone)]
struct CsvArgs {
    /// Label column: `last`, a zero-based index, or a header name.
    #[arg(long = "label-col", default_value = "last")]
    label_col: LabelColumn,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// The CSV has no header row.
    #[arg(long)]
    no_header: bool,
}

impl CsvArgs {
    fn schema(&self) -> Result<CsvSchema> {
        if !self.delimiter.is_ascii() {
            bail!("delimiter must be a single ASCII character");
        }
        Ok(CsvSchema { label_column: self.label_col.clone(), delimiter: self.delimiter as u8, header: !self.no_header })
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "rf")]
    mode: Mode,
    /// Guide weight for GRF/GRRF [default: 1 for GRF, 0.1 for GRRF].
    #[arg(long)]
    gamma: Option<f64>,
    /// Per-feature weights file, replacing the guide forest (GRF/GRRF).
    #[arg(long)]
    weights: Option<PathBuf>,
    #[command(flatten)]
    forest: ForestArgs,
    #[command(flatten)]
    csv: CsvArgs,
}

#[derive(Args, Debug)]
struct SelectArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// `grf` or `grrf`.
    #[arg(long, default_value = "grf")]
    mode: Mode,
    /// Guide weight [default: 1 for GRF, 0.1 for GRRF].
    #[arg(long)]
    gamma: Option<f64>,
    /// Per-feature weights file, replacing the guide forest.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Selected feature indices, one per line [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Weights file to write [default: <out>.lambda when --out is given].
    #[arg(long)]
    lambda_out: Option<PathBuf>,
    #[command(flatten)]
    forest: ForestArgs,
    #[command(flatten)]
    csv: CsvArgs,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// CSV with the model's features, optionally plus a label column.
    #[arg(long = "in")]
    input: PathBuf,
    /// Predictions CSV [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    csv: CsvArgs,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Dataset CSV; may be repeated.
    #[arg(long = "in")]
    inputs: Vec<PathBuf>,
    /// Also evaluate the synthetic dataset with this seed.
    #[arg(long)]
    synthetic: Option<u64>,
    #[arg(long, value_delimiter = ',', default_value = "grf-rf,grf,rf,grrf,grrf-rf")]
    methods: Vec<Method>,
    #[arg(long, default_value = "rf")]
    baseline: Method,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    #[arg(long, default_value_t = 2.0 / 3.0)]
    train_fraction: f64,
    /// Shuffle rows without stratifying by class.
    #[arg(long)]
    unstratified: bool,
    /// GRF guide weight (GRF, GRF-RF).
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// GRRF guide weight (GRRF, GRRF-RF).
    #[arg(long, default_value_t = 0.1)]
    grrf_gamma: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Text report [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-replicate CSV.
    #[arg(long)]
    csv_out: Option<PathBuf>,
    #[command(flatten)]
    forest: ForestArgs,
    #[command(flatten)]
    csv: CsvArgs,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 500)]
    rows: usize,
    #[arg(long, default_value_t = 500)]
    features: usize,
    /// The two features that define the class.
    #[arg(long, default_value = "0,20", value_parser = parse_pair)]
    relevant: (usize, usize),
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected two comma-separated indices, got {s:?}"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn forest_config(args: &ForestArgs, mode: Mode, gamma: Option<f64>) -> ForestConfig {
    ForestConfig {
        n_trees: args.trees,
        mode,
        gamma: gamma.unwrap_or_else(|| mode.default_gamma()),
        mtry: args.mtry,
        master_seed: args.seed,
        min_leaf_size: args.min_leaf,
        max_depth: args.max_depth,
        rrf_lambda: args.rrf_lambda,
        workers: args.workers,
    }
}

fn resolved_workers(workers: Option<usize>, n_trees: usize) -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    workers.unwrap_or(available).min(n_trees.max(1)).max(1)
}

/// One line with every setting that affects the result.
fn log_config(command: &str, config: &ForestConfig, n_features: usize, extra: &[(&str, String)]) {
    let mtry = config.mtry.unwrap_or_else(|| default_mtry(n_features));
    let depth = config.max_depth.map_or("none".to_string(), |d| d.to_string());
    let mut line = format!(
        "config: command={command} mode={} gamma={} trees={} mtry={mtry} min_leaf={} max_depth={depth} \
         rrf_lambda={} workers={} seed={} guide_seed={} selector_seed={} final_seed={}",
        config.mode,
        config.gamma,
        config.n_trees,
        config.min_leaf_size,
        config.rrf_lambda,
        resolved_workers(config.workers, config.n_trees),
        config.master_seed,
        guide_seed(config),
        selector_seed(config),
        final_seed(config),
    );
    for (key, value) in extra {
        line.push_str(&format!(" {key}={value}"));
    }
    eprintln!("{line}");
}

fn load(path: &Path, csv: &CsvArgs) -> Result<Dataset> {
    load_csv(path, &csv.schema()?).with_context(|| format!("loading {}", path.display()))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Fails before any forest is grown, rather than after the guide.
fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::GammaOutOfRange(gamma).into());
    }
    Ok(())
}

fn lambda_text(weights: &RegWeights) -> String {
    weights.lambda().iter().map(|v| format!("{v:?}\n")).collect()
}

fn train(args: TrainArgs) -> Result<()> {
    let data = load(&args.input, &args.csv)?;
    let config = forest_config(&args.forest, args.mode, args.gamma);
    check_gamma(config.gamma)?;
    log_config(
        "train",
        &config,
        data.n_features(),
        &[("in", args.input.display().to_string()), ("out", args.out.display().to_string())],
    );
    let forest = match (args.mode, &args.weights) {
        (Mode::Rf | Mode::Rrf, Some(_)) => bail!("--weights applies only to grf and grrf"),
        (Mode::Rf | Mode::Rrf, None) => build_forest(&data, &config, None)?,
        (Mode::Grf | Mode::Grrf, Some(path)) => {
            let weights = read_lambda_file(path, data.n_features())?;
            build_forest(&data, &config, Some(&weights))?
        }
        (Mode::Grf | Mode::Grrf, None) => {
            let guide = train_guide(&data, &config)?;
            select_from_importance(&data, &guide.importance(), config.gamma, &config)?.1
        }
    };
    write_model(&args.out, &forest)?;
    let oob = forest.oob_error().map_or("n/a".to_string(), |e| format!("{e:.4}"));
    println!("trained {} trees ({}), {} features used, oob error {oob}", forest.trees().len(), forest.mode(), forest.feature_set().len());
    Ok(())
}

fn select(args: SelectArgs) -> Result<()> {
    if !matches!(args.mode, Mode::Grf | Mode::Grrf) {
        bail!("select supports --mode grf or grrf, got {}", args.mode);
    }
    let data = load(&args.input, &args.csv)?;
    let config = forest_config(&args.forest, args.mode, args.gamma);
    check_gamma(config.gamma)?;
    let weights_source = args.weights.as_ref().map_or("guide".to_string(), |p| p.display().to_string());
    log_config("select", &config, data.n_features(), &[("in", args.input.display().to_string()), ("weights", weights_source)]);
    let result = match &args.weights {
        Some(path) => {
            let weights = read_lambda_file(path, data.n_features())?;
            select_with_custom_weights(&data, &weights, &config)?
        }
        None => {
            let guide = train_guide(&data, &config)?;
            select_from_importance(&data, &guide.importance(), config.gamma, &config)?.0
        }
    };

    println!("selected {} of {} features", result.selected_features.len(), data.n_features());
    let mut out = output(args.out.as_deref())?;
    for f in &result.selected_features {
        writeln!(out, "{f}")?;
    }
    out.flush()?;
    let lambda_path = args.lambda_out.clone().or_else(|| args.out.as_ref().map(|p| {
        let mut s = p.clone().into_os_string();
        s.push(".lambda");
        PathBuf::from(s)
    }));
    if let Some(path) = lambda_path {
        std::fs::write(&path, lambda_text(&result.weights)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn predict(args: PredictArgs) -> Result<()> {
    let forest = read_model(&args.model)?;
    let (rows, labels) = load_feature_rows(&args.input, &args.csv.schema()?, forest.n_features())?;
    eprintln!(
        "config: command=predict model={} in={} mode={} trees={} seed={}",
        args.model.display(),
        args.input.display(),
        forest.mode(),
        forest.trees().len(),
        forest.config().master_seed,
    );
    let predicted = forest.predict(&rows)?;
    let names = forest.class_names();
    let mut out = output(args.out.as_deref())?;
    writeln!(out, "row,predicted")?;
    for (i, &p) in predicted.iter().enumerate() {
        writeln!(out, "{i},{}", names[p])?;
    }
    out.flush()?;
    if let Some(labels) = labels {
        let wrong = predicted.iter().zip(&labels).filter(|(&p, l)| names[p] != **l).count();
        eprintln!("error rate {:.4} ({wrong}/{})", wrong as f64 / labels.len().max(1) as f64, labels.len());
    }
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let mut datasets = Vec::new();
    for path in &args.inputs {
        let name = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        datasets.push((name, load(path, &args.csv)?));
    }
    if let Some(seed) = args.synthetic {
        datasets.push((format!("synthetic-{seed}"), simulate_dataset(&SyntheticSpec::with_seed(seed))?));
    }
    if datasets.is_empty() {
        bail!("nothing to evaluate: give --in and/or --synthetic");
    }
    let config = BenchmarkConfig {
        forest: forest_config(&args.forest, Mode::Rf, None),
        grf_gamma: args.gamma,
        grrf_gamma: args.grrf_gamma,
        plan: SplitPlan {
            replicate_count: args.replicates,
            train_fraction: args.train_fraction,
            stratified: !args.unstratified,
            base_seed: args.forest.seed,
        },
        alpha: args.alpha,
    };
    let methods: Vec<String> = args.methods.iter().map(|m| m.to_string()).collect();
    let names: Vec<&str> = datasets.iter().map(|(n, _)| n.as_str()).collect();
    log_config(
        "evaluate",
        &config.forest,
        datasets[0].1.n_features(),
        &[
            ("datasets", names.join(",")),
            ("methods", methods.join(",")),
            ("baseline", args.baseline.to_string()),
            ("replicates", args.replicates.to_string()),
            ("train_fraction", args.train_fraction.to_string()),
            ("stratified", (!args.unstratified).to_string()),
            ("grf_gamma", args.gamma.to_string()),
            ("grrf_gamma", args.grrf_gamma.to_string()),
            ("alpha", args.alpha.to_string()),
        ],
    );
    let report = run_benchmark(&datasets, &args.methods, args.baseline, &config)?;
    let mut out = output(args.out.as_deref())?;
    out.write_all(report.to_text().as_bytes())?;
    out.flush()?;
    if let Some(path) = &args.csv_out {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_csv_report(BufWriter::new(file), &report)?;
    }
    for d in &report.datasets {
        if let Some(why) = &d.failure {
            eprintln!("warning: dataset {} failed: {why}", d.name);
        }
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let spec = SyntheticSpec {
        n_rows: args.rows,
        n_features: args.features,
        relevant_features: args.relevant,
        seed: args.seed,
        ..Default::default()
    };
    eprintln!(
        "config: command=simulate seed={} rows={} features={} relevant={},{} range={:?} out={}",
        spec.seed,
        spec.n_rows,
        spec.n_features,
        spec.relevant_features.0,
        spec.relevant_features.1,
        spec.value_range,
        args.out.display()
    );
    let data = simulate_dataset(&spec)?;
    write_csv(&args.out, &data)?;
    println!("wrote {} rows x {} features to {}", data.n_rows(), data.n_features(), args.out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => train(a),
        Command::Select(a) => select(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Simulate(a) => simulate(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // library errors already embed their source in the message
            let mut line = e.to_string();
            for cause in e.chain().skip(1).map(|c| c.to_string()) {
                if !line.ends_with(&cause) {
                    line = format!("{line}: {cause}");
                }
            }
            eprintln!("error: {line}");
            ExitCode::FAILURE
        }
    }
}
