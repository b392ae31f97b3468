//! Command-line front end: pick an experiment kind, optionally load a JSON
//! config, run it, and emit the report. Exit status is zero exactly when
//! every in-report check passed.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use kwise_cli::config::{ExperimentConfig, ExperimentParams, OutputFormat};
use kwise_cli::report::{emit, render};
use kwise_cli::runner::run_experiment;

#[derive(Parser)]
#[command(name = "kwise-cli", version, about = "statistical-query simulation workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn planted hyperplane labelings from k-wise queries
    Learn(RunArgs),
    /// Correlation dimension of the hyperplane family and query lower bounds
    Dimension(RunArgs),
    /// Flat-distribution decision procedure and the k-wise estimator
    Reduce(RunArgs),
    /// Constraint-pattern to DNF reduction checks
    Cspdnf(RunArgs),
    /// Collision-probability estimation from unary queries
    Collision(RunArgs),
    /// Query-driven simulation of bounded-communication extraction
    Simulate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; defaults are used when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Directory to write the report into (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: json | csv
    #[arg(long)]
    format: Option<String>,
}

impl Command {
    fn kind(&self) -> &'static str {
        match self {
            Command::Learn(_) => "learn",
            Command::Dimension(_) => "dimension",
            Command::Reduce(_) => "reduce",
            Command::Cspdnf(_) => "cspdnf",
            Command::Collision(_) => "collision",
            Command::Simulate(_) => "simulate",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Learn(a)
            | Command::Dimension(a)
            | Command::Reduce(a)
            | Command::Cspdnf(a)
            | Command::Collision(a)
            | Command::Simulate(a) => a,
        }
    }
}

fn load_config(kind: &str, args: &RunArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let cfg = ExperimentConfig::from_json(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            if cfg.kind() != kind {
                bail!("config kind {:?} does not match subcommand {:?}", cfg.kind(), kind);
            }
            cfg
        }
        None => ExperimentConfig::new(0, ExperimentParams::default_for(kind)?),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(format) = &args.format {
        cfg.format = Some(match format.as_str() {
            "json" => OutputFormat::Json,
            "csv" => OutputFormat::Csv,
            other => bail!("unknown format {other:?} (expected json or csv)"),
        });
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.display().to_string());
    }
    Ok(cfg)
}

fn run() -> anyhow::Result<bool> {
    let cli = Cli::parse();
    let cfg = load_config(cli.command.kind(), cli.command.args())?;
    let report = run_experiment(&cfg)?;
    let format = cfg.format.unwrap_or(OutputFormat::Json);
    match &cfg.out {
        Some(dir) => {
            for path in emit(&report, format, PathBuf::from(dir).as_path())? {
                eprintln!("wrote {}", path.display());
            }
        }
        None => print!("{}", render(&report, format)),
    }
    for check in &report.payload.checks {
        eprintln!(
            "check {:<32} {} ({})",
            check.name,
            if check.passed { "ok" } else { "FAILED" },
            check.detail
        );
    }
    Ok(report.payload.all_checks_pass())
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
