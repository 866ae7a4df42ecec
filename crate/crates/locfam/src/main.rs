//! `locfam` command line: location-family estimation and diagnostics.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use locfam::cli::{parse_config, OutputFormat};
use locfam::Error;

#[derive(Parser)]
#[command(
    name = "locfam",
    about = "MLE and bias-reduced functional estimation in log-concave location families",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the location MLE on a CSV dataset.
    Fit(CommonArgs),
    /// Monte Carlo Fisher information of a builtin family.
    Fisher(CommonArgs),
    /// Bias-reduced functional estimate f_k on a CSV dataset.
    Estimate(CommonArgs),
    /// Risk/efficiency experiment grid; emits the CSV risk report.
    Experiment(CommonArgs),
    /// Evaluate an information lower-bound formula.
    Lowerbound(CommonArgs),
    /// Derivative validation and MLE concentration diagnostics.
    Diagnose(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config document for this subcommand.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long)]
    workers: Option<usize>,
    /// Output format: csv (experiment only) or jsonl.
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    match s {
        "csv" => Ok(OutputFormat::Csv),
        "jsonl" => Ok(OutputFormat::Jsonl),
        other => Err(format!("unknown format {other:?} (expected csv or jsonl)")),
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Fit(_) => "fit",
            Command::Fisher(_) => "fisher",
            Command::Estimate(_) => "estimate",
            Command::Experiment(_) => "experiment",
            Command::Lowerbound(_) => "lowerbound",
            Command::Diagnose(_) => "diagnose",
        }
    }
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Fit(a)
            | Command::Fisher(a)
            | Command::Estimate(a)
            | Command::Experiment(a)
            | Command::Lowerbound(a)
            | Command::Diagnose(a) => a,
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::ParseError(_) | Error::Validation(_) | Error::InvalidParameter(_) => 1,
        Error::Io(_) => 3,
        _ => 2,
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::UnsupportedSampler => "unsupported_sampler",
        Error::NonFinite(_) => "non_finite",
        Error::SingularFisher { .. } => "singular_fisher",
        Error::TableNotBuilt => "table_not_built",
        Error::InvalidParameter(_) => "invalid_parameter",
        Error::TooRough(_) => "too_rough",
        Error::MleFailure { .. } => "mle_failure",
        Error::AllReplicatesFailed(_) => "all_replicates_failed",
        Error::DegenerateSample => "degenerate_sample",
        Error::NonIntegrable(_) => "non_integrable",
        Error::SingularMatrix => "singular_matrix",
        Error::ParseError(_) => "parse_error",
        Error::Validation(_) => "validation",
        Error::Io(_) => "io",
    }
}

fn fail(err: Error) -> ExitCode {
    let code = exit_code_for(&err);
    let record = serde_json::json!({
        "error": {
            "code": code,
            "kind": error_kind(&err),
            "message": err.to_string(),
        }
    });
    eprintln!("{record}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = cli.command.args();

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => return fail(Error::Io(e)),
    };
    let mut config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    if config.subcommand_name() != cli.command.name() {
        return fail(Error::Validation(vec![format!(
            "config subcommand \"{}\" does not match invoked subcommand \"{}\"",
            config.subcommand_name(),
            cli.command.name()
        )]));
    }
    if let Some(seed) = args.seed {
        config.override_seed(seed);
    }
    if let Some(out) = &args.out {
        config.override_out(out.clone());
    }
    if let Some(format) = args.format {
        config.override_format(format);
    }

    let body = || match locfam::cli::run(&config) {
        Ok(outcome) => {
            if outcome.written_to.is_none() {
                print!("{}", outcome.payload);
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    };

    match args.workers {
        Some(workers) => {
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                Ok(p) => p,
                Err(e) => {
                    return fail(Error::InvalidParameter(format!(
                        "cannot build worker pool: {e}"
                    )))
                }
            };
            pool.install(body)
        }
        None => body(),
    }
}
