//! `nifflow`: build, analyze and use Neural Information Flow graphs.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{AnalysisArgs, EstimatorArgs, FileConfig, FormatArg, InputArgs, ModeArgs};

#[derive(Debug, Parser)]
#[command(
    name = "nifflow",
    version,
    about = "Neural Information Flow graphs for trained networks"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "NIFFLOW_THREADS")]
    threads: Option<usize>,
    /// TOML file with default values for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output on standard error (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the NIF graph of a model on a dataset.
    Build(BuildArgs),
    /// Build (or load) a graph and add centrality and communities.
    Analyze(AnalyzeArgs),
    /// Feature-by-class attribution matrix, with an optional K-S report
    /// against raw mutual information.
    Attribute(AttributeArgs),
    /// Per-pixel saliency map of one sample for one class.
    Saliency(SaliencyArgs),
    /// Accuracy while zeroing weights in ascending NIF order.
    Prune(PruneArgs),
    /// Estimator self-checks against closed-form values.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    inputs: InputArgs,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[command(flatten)]
    mode: ModeArgs,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Output path, `-` for standard output.
    #[arg(long)]
    out: String,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Graph JSON from `build`; replaces --model/--data.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[command(flatten)]
    inputs: InputArgs,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[command(flatten)]
    mode: ModeArgs,
    #[command(flatten)]
    analysis: AnalysisArgs,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Output path, `-` for standard output.
    #[arg(long)]
    out: String,
}

#[derive(Debug, Args)]
pub struct AttributeArgs {
    #[command(flatten)]
    inputs: InputArgs,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Attribution matrix CSV.
    #[arg(long)]
    out: String,
    /// JSON report with raw-MI attribution and the K-S comparison.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SaliencyArgs {
    #[command(flatten)]
    inputs: InputArgs,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Index of the explained sample in --data (falls back to the config file).
    #[arg(long)]
    sample: Option<usize>,
    /// Class whose evidence is explained.
    #[arg(long)]
    class: usize,
    /// Saliency CSV, one line per pixel.
    #[arg(long)]
    out: String,
}

#[derive(Debug, Args)]
pub struct PruneArgs {
    #[command(flatten)]
    inputs: InputArgs,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Held-out dataset for accuracy (default: the --data set).
    #[arg(long)]
    eval: Option<PathBuf>,
    /// Comma-separated numbers of zeroed weights.
    #[arg(long)]
    counts: Option<String>,
    /// Comma-separated fractions of all weights.
    #[arg(long)]
    fractions: Option<String>,
    /// Accuracy curve CSV, `-` for standard output.
    #[arg(long)]
    out: String,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    inputs: InputArgs,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Self-check report, `-` for standard output.
    #[arg(long, default_value = "-")]
    out: String,
}

fn error_line(kind: &str, message: &str) {
    eprintln!(
        "{}",
        serde_json::json!({ "error": kind, "message": message })
    );
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                e.exit();
            }
            let rendered = e.render().to_string();
            let first = rendered
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            error_line("usage", first);
            eprint!("{rendered}");
            return ExitCode::from(2);
        }
    };
    let level = match cli.verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            error_line("runtime", &chain.join(": "));
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    if let Some(threads) = cli.threads.or(file.threads) {
        if threads == 0 {
            anyhow::bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()?;
    }
    commands::run(cli.command, &file)
}
