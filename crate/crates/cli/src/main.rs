use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use jointcnn::harness::{
    config_for_checkpoint, evaluation_report, load_for_checkpoint, prepare, run_sweep,
    test_partition, train, write_charts, write_outputs, EvalReport, SweepAxis, TrainConfig,
    REPORT_FILE, RESOLVED_CONFIG_FILE,
};
use jointcnn::network::Checkpoint;
use jointcnn::{Error, Result};

/// Skeleton activity recognition with a joint-time convolutional network.
#[derive(Parser)]
#[command(name = "jointcnn", version, arg_required_else_help = true)]
struct Cli {
    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    /// Log debug detail.
    #[arg(short, long, global = true, conflicts_with = "quiet")]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalise, split and cache a recording tree.
    Ingest(IngestArgs),
    /// Train one model and evaluate it on the held-out split.
    Train(RunArgs),
    /// Score a stored checkpoint on a corpus.
    Evaluate(EvaluateArgs),
    /// Train one model per stride or noise level.
    Sweep(SweepArgs),
    /// Render charts from report.json files.
    Report(ReportArgs),
}

/// Overrides layered over the config file; unset flags keep its values.
#[derive(Args)]
struct ConfigArgs {
    /// key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Recording tree or prepared cache.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    label_map: Option<PathBuf>,
    #[arg(long)]
    frames: Option<usize>,
    /// Frame normalisation: repetition, truncation, pad-terminal, pad-special[:value].
    #[arg(long)]
    normalization: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Split all samples at once instead of per class.
    #[arg(long)]
    global_split: bool,
    /// Any config key, repeatable: --set epochs=10.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct TrainFlags {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    keep_prob: Option<f64>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Skip per-channel standardisation.
    #[arg(long)]
    no_standardize: bool,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    train: TrainFlags,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Recording tree or prepared cache.
    #[arg(long)]
    corpus: PathBuf,
    /// Directory for report.json and the confusion chart.
    #[arg(long)]
    out: PathBuf,
    /// Score only the checkpoint's held-out split of the corpus.
    #[arg(long)]
    test_only: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// stride or sigma.
    #[arg(long)]
    axis: String,
    /// Comma-separated values; defaults to strides 2..7 or sigmas 0.1..0.5.
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// confusion-heatmap or axis-line-chart.
    #[arg(long)]
    kind: String,
    /// report.json files, run directories or sweep directories.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn resolve(args: &ConfigArgs, train: Option<&TrainFlags>) -> Result<TrainConfig> {
    let mut c = TrainConfig::default();
    if let Some(path) = &args.config {
        c.apply_text(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)?;
    }
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        c.set(k, v)?;
    }
    let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    let mut flags: Vec<(&str, Option<String>)> = vec![
        ("corpus", path(&args.corpus)),
        ("output", path(&args.out)),
        ("label_map", path(&args.label_map)),
        ("frames", args.frames.map(|v| v.to_string())),
        ("normalization", args.normalization.clone()),
        ("seed", args.seed.map(|v| v.to_string())),
        ("train_fraction", args.train_fraction.map(|v| v.to_string())),
        ("stratified", args.global_split.then(|| "false".into())),
    ];
    if let Some(t) = train {
        flags.extend([
            ("epochs", t.epochs.map(|v| v.to_string())),
            ("batch_size", t.batch_size.map(|v| v.to_string())),
            ("learning_rate", t.learning_rate.map(|v| v.to_string())),
            ("keep_prob", t.keep_prob.map(|v| v.to_string())),
            ("stride", t.stride.map(|v| v.to_string())),
            ("sigma", t.sigma.map(|v| v.to_string())),
            ("standardize", t.no_standardize.then(|| "false".into())),
        ]);
    }
    for (k, v) in flags {
        if let Some(v) = v {
            c.set(k, &v)?;
        }
    }
    c.validate()?;
    Ok(c)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn ingest(args: &IngestArgs) -> Result<()> {
    let config = resolve(&args.config, None)?;
    let prepared = prepare(&config)?;
    prepared.write(&config.output)?;
    write_text(&config.output.join(RESOLVED_CONFIG_FILE), &config.to_text())?;
    println!(
        "cached {} samples ({} train, {} test) in {} classes to {}",
        prepared.samples.len(),
        prepared.partition.train.len(),
        prepared.partition.test.len(),
        prepared.classes.len(),
        config.output.display()
    );
    Ok(())
}

fn train_cmd(args: &RunArgs) -> Result<()> {
    let config = resolve(&args.config, Some(&args.train))?;
    let outcome = train(&config)?;
    write_outputs(&outcome, &config.output)?;
    write_charts(
        "confusion-heatmap",
        std::slice::from_ref(&outcome.report),
        &config.output,
    )?;
    println!(
        "accuracy {:.4}  fm {:.4}  ({} test samples) -> {}",
        outcome.report.accuracy,
        outcome.report.fm,
        outcome.report.test_samples(),
        config.output.display()
    );
    Ok(())
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let ck = Checkpoint::load(&args.checkpoint)?;
    let mut samples = load_for_checkpoint(&ck, &args.corpus)?;
    if args.test_only {
        samples = test_partition(&ck, samples)?;
    }
    let mut config = config_for_checkpoint(&ck)?;
    config.corpus = args.corpus.clone();
    config.output = args.out.clone();
    let report = evaluation_report(&ck, &samples, config)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    report.write(&args.out.join(REPORT_FILE))?;
    write_charts(
        "confusion-heatmap",
        std::slice::from_ref(&report),
        &args.out,
    )?;
    println!(
        "accuracy {:.4}  fm {:.4}  ({} samples)",
        report.accuracy,
        report.fm,
        report.test_samples()
    );
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let axis = SweepAxis::parse(&args.axis)?;
    let base = resolve(&args.run.config, Some(&args.run.train))?;
    let values = if args.values.is_empty() {
        axis.default_values()
    } else {
        args.values.clone()
    };
    let outcome = run_sweep(&base, axis, &values, &base.output)?;
    write_text(&base.output.join(RESOLVED_CONFIG_FILE), &base.to_text())?;
    for row in &outcome.rows {
        match (&row.accuracy, &row.error) {
            (Some(a), _) => println!(
                "{}={}  accuracy {a:.4}  fm {:.4}",
                row.axis,
                row.value,
                row.fm.unwrap_or(0.0)
            ),
            (None, Some(e)) => println!("{}={}  failed: {e}", row.axis, row.value),
            (None, None) => unreachable!("a summary row has either metrics or an error"),
        }
    }
    if outcome.reports.is_empty() {
        return Err(Error::Config("every sweep point failed".into()));
    }
    Ok(())
}

/// Expands run and sweep directories into their report.json files.
fn collect_reports(inputs: &[PathBuf]) -> Result<Vec<EvalReport>> {
    let mut paths = Vec::new();
    for input in inputs {
        if input.is_file() {
            paths.push(input.clone());
        } else if input.join(REPORT_FILE).is_file() {
            paths.push(input.join(REPORT_FILE));
        } else if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)
                .map_err(|e| Error::io(input, e))?
                .filter_map(|e| e.ok().map(|e| e.path().join(REPORT_FILE)))
                .filter(|p| p.is_file())
                .collect();
            found.sort();
            if found.is_empty() {
                return Err(Error::Config(format!(
                    "no {REPORT_FILE} under {}",
                    input.display()
                )));
            }
            paths.extend(found);
        } else {
            return Err(Error::Config(format!("{} does not exist", input.display())));
        }
    }
    paths.iter().map(|p| EvalReport::read(p)).collect()
}

fn report(args: &ReportArgs) -> Result<()> {
    let reports = collect_reports(&args.input)?;
    for path in write_charts(&args.kind, &reports, &args.out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => "warn",
        (_, true) => "debug",
        _ => "info",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Train(a) => train_cmd(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Sweep(a) => sweep(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
