//! `pipeline`: run the multi-omics classification pipeline end to end, or
//! one stage at a time against a shared artifact directory.
//!
//! Exit codes: 0 success, 2 configuration or validation error, 3 data
//! error, 4 numeric failure. The last stderr line is always a single
//! machine-parsable `pipeline: status=... key=value ...` record. Log
//! verbosity comes from the `PIPELINE_LOG` environment variable
//! (`error`, `warn`, `info`, `debug`, `trace`).

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use omicfuse::pipeline::{run_pipeline, run_stage, PipelineConfig};
use omicfuse::report::EvalReport;
use omicfuse::synth::{generate, write_dataset, SynthConfig};
use omicfuse::{Error, Result};

#[derive(Parser)]
#[command(
    name = "pipeline",
    version,
    about = "Deterministic multi-omics binary classification pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage end to end from a config file
    Run(RunArgs),
    /// Draw the train/test split and fit feature selection
    Select(StageArgs),
    /// Train one autoencoder per matrix on the selected features
    TrainAe(StageArgs),
    /// Encode each matrix and concatenate the latent blocks
    Fuse(StageArgs),
    /// Train the generator and balance the training classes
    Oversample(StageArgs),
    /// Train the classifier on the balanced latent table
    TrainClf(StageArgs),
    /// Score the held-out rows and write report, ROC table, and ROC plot
    Evaluate(StageArgs),
    /// Write a seeded synthetic benchmark cohort plus a starter config
    GenData(GenDataArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Pipeline configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Override the seed from the config file
    #[arg(long)]
    seed: Option<u64>,
    /// Run once per seed into <out>/seed-N and report mean metrics
    #[arg(long, value_delimiter = ',', conflicts_with = "seed")]
    seeds: Option<Vec<u64>>,
    /// Override the output directory from the config file
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StageArgs {
    /// Pipeline configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Override the seed from the config file
    #[arg(long)]
    seed: Option<u64>,
    /// Directory holding the artifacts of earlier stages (defaults to --out)
    #[arg(long = "in", value_name = "DIR")]
    input: Option<PathBuf>,
    /// Artifact directory to write (defaults to the config's output_dir)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenDataArgs {
    /// Directory for the generated TSV files and starter run.toml
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 300)]
    samples: usize,
    #[arg(long, default_value_t = 500)]
    features: usize,
    #[arg(long, default_value_t = 20)]
    informative: usize,
    /// Fraction of samples in the positive (minority) class
    #[arg(long, default_value_t = 0.1)]
    positive_fraction: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PIPELINE_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(record) => eprintln!("pipeline: status=ok {record}"),
        Err(e) => {
            let code = e.exit_code();
            eprintln!("error: {e}");
            eprintln!(
                "pipeline: status=error exit={code} kind={} stage={} message=\"{}\"",
                e.kind(),
                e.stage().unwrap_or("-"),
                escape(&e.to_string())
            );
            std::process::exit(code);
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ")
}

fn execute(command: Command) -> Result<String> {
    match command {
        Command::Run(args) => cmd_run(args),
        Command::Select(args) => cmd_stage("select", args),
        Command::TrainAe(args) => cmd_stage("train-ae", args),
        Command::Fuse(args) => cmd_stage("fuse", args),
        Command::Oversample(args) => cmd_stage("oversample", args),
        Command::TrainClf(args) => cmd_stage("train-clf", args),
        Command::Evaluate(args) => cmd_stage("evaluate", args),
        Command::GenData(args) => cmd_gen_data(args),
    }
}

fn load_config(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<PipelineConfig> {
    let mut config = PipelineConfig::load(path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(out) = out {
        config.output_dir = out;
    }
    Ok(config)
}

fn cmd_run(args: RunArgs) -> Result<String> {
    let config = load_config(&args.config, args.seed, args.out)?;
    if let Some(seeds) = args.seeds {
        return run_many(config, &seeds);
    }
    let started = Instant::now();
    let (report, _manifest) = run_pipeline(&config)?;
    print_report(&report, &config.output_dir);
    Ok(format!(
        "command=run seed={} out={} report={} elapsed_ms={}",
        config.seed,
        config.output_dir.display(),
        config.output_dir.join("report.json").display(),
        started.elapsed().as_millis()
    ))
}

#[derive(Serialize)]
struct SeedMetrics {
    seed: u64,
    accuracy: f64,
    precision: f64,
    recall: f64,
    f1: f64,
    auc: f64,
}

#[derive(Serialize)]
struct SeedsSummary {
    runs: Vec<SeedMetrics>,
    mean: SeedMetrics,
}

/// One full run per seed, then the arithmetic mean of the headline metrics.
fn run_many(base: PipelineConfig, seeds: &[u64]) -> Result<String> {
    if seeds.is_empty() {
        return Err(Error::Config("--seeds needs at least one value".into()));
    }
    let started = Instant::now();
    let base_out = base.output_dir.clone();
    let mut runs = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut config = base.clone();
        config.seed = seed;
        config.output_dir = base_out.join(format!("seed-{seed}"));
        let (report, _) = run_pipeline(&config)?;
        println!(
            "seed {seed}: accuracy {:.5}  precision {:.5}  recall {:.5}  f1 {:.5}  auc {:.5}",
            report.accuracy, report.precision, report.recall, report.f1, report.auc
        );
        runs.push(SeedMetrics {
            seed,
            accuracy: report.accuracy,
            precision: report.precision,
            recall: report.recall,
            f1: report.f1,
            auc: report.auc,
        });
    }
    let n = runs.len() as f64;
    let mean = SeedMetrics {
        seed: 0,
        accuracy: runs.iter().map(|r| r.accuracy).sum::<f64>() / n,
        precision: runs.iter().map(|r| r.precision).sum::<f64>() / n,
        recall: runs.iter().map(|r| r.recall).sum::<f64>() / n,
        f1: runs.iter().map(|r| r.f1).sum::<f64>() / n,
        auc: runs.iter().map(|r| r.auc).sum::<f64>() / n,
    };
    println!(
        "mean over {} seeds: accuracy {:.5}  precision {:.5}  recall {:.5}  f1 {:.5}  auc {:.5}",
        runs.len(),
        mean.accuracy,
        mean.precision,
        mean.recall,
        mean.f1,
        mean.auc
    );

    let summary = SeedsSummary { runs, mean };
    let summary_path = base_out.join("seeds_summary.json");
    let mut text = serde_json::to_string_pretty(&summary)
        .map_err(|e| Error::Config(format!("summary serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(&summary_path, text).map_err(|source| Error::Io {
        path: summary_path.clone(),
        source,
    })?;

    let list = seeds
        .iter()
        .map(u64::to_string)
        .collect::<Vec<_>>()
        .join(",");
    Ok(format!(
        "command=run seeds={list} out={} summary={} elapsed_ms={}",
        base_out.display(),
        summary_path.display(),
        started.elapsed().as_millis()
    ))
}

fn cmd_stage(name: &'static str, args: StageArgs) -> Result<String> {
    let config = load_config(&args.config, args.seed, args.out)?;
    let out_dir = config.output_dir.clone();
    let in_dir = args.input.unwrap_or_else(|| out_dir.clone());
    let started = Instant::now();
    let report = run_stage(name, &config, &in_dir, &out_dir)?;
    if let Some(report) = &report {
        print_report(report, &out_dir);
    }
    Ok(format!(
        "command={name} seed={} in={} out={} elapsed_ms={}",
        config.seed,
        in_dir.display(),
        out_dir.display(),
        started.elapsed().as_millis()
    ))
}

fn cmd_gen_data(args: GenDataArgs) -> Result<String> {
    let config = SynthConfig {
        samples: args.samples,
        features_per_matrix: args.features,
        informative_per_matrix: args.informative,
        positive_fraction: args.positive_fraction,
        seed: args.seed,
    };
    let dataset = generate(&config)?;
    std::fs::create_dir_all(&args.out).map_err(|source| Error::Io {
        path: args.out.clone(),
        source,
    })?;
    write_dataset(&args.out, &dataset, config.seed)?;

    let template_path = args.out.join("run.toml");
    let template = PipelineConfig::synthetic_benchmark().to_toml()?;
    std::fs::write(&template_path, template).map_err(|source| Error::Io {
        path: template_path.clone(),
        source,
    })?;

    println!(
        "wrote {} samples x {} features per matrix into {}",
        args.samples,
        args.features,
        args.out.display()
    );
    println!("starter config: {}", template_path.display());
    Ok(format!(
        "command=gen-data out={} samples={} features={} seed={}",
        args.out.display(),
        args.samples,
        args.features,
        args.seed
    ))
}

fn print_report(report: &EvalReport, out_dir: &std::path::Path) {
    println!(
        "test samples  {}  (train {}, synthetic {})",
        report.test_samples, report.train_samples, report.synthetic_samples
    );
    println!(
        "confusion     tp={} fn={} fp={} tn={}",
        report.counts.true_positive,
        report.counts.false_negative,
        report.counts.false_positive,
        report.counts.true_negative
    );
    println!("accuracy      {:.5}", report.accuracy);
    println!("precision     {:.5}", report.precision);
    println!("recall        {:.5}", report.recall);
    println!("f1            {:.5}", report.f1);
    println!("auc           {:.5}", report.auc);
    if !report.zero_denominator.is_empty() {
        println!(
            "zero denominators: {} (reported as 0)",
            report.zero_denominator.join(", ")
        );
    }
    println!("report        {}", out_dir.join("report.json").display());
}
