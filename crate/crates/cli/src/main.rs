//! `hapforge`: synthesize corpora, build datasets, render friction images,
//! evaluate generators and plot signals.
//!
//! Exit codes: 0 success, 1 invalid input or configuration, 2 missing input,
//! 3 numeric degeneracy. Every run prints one `key=value` summary line on
//! stdout; logging goes to stderr and is controlled by `HAPFORGE_LOG`.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "hapforge",
    version,
    about = "Friction images for electrovibration displays"
)]
pub struct Cli {
    /// Flat key=value file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed; every random draw derives from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic raw corpus.
    Synth(SynthArgs),
    /// Build an augmented, split dataset from a raw corpus.
    Build(BuildArgs),
    /// Render friction images from visual images or stored ground truth.
    Render(RenderArgs),
    /// Score generators against a dataset split.
    Eval(EvalArgs),
    /// Plot traces, spectrograms and height maps.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub samples_per_class: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Raw corpus directory.
    #[arg(long)]
    pub raw: Option<PathBuf>,
    #[arg(long)]
    pub augmentations: Option<usize>,
    #[arg(long)]
    pub trace_window: Option<usize>,
    #[arg(long)]
    pub max_rotation: Option<f64>,
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Visual images (PNG) to render.
    pub inputs: Vec<PathBuf>,
    /// Dataset directory to take inputs from instead.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<String>,
    /// Use at most this many dataset records.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Use the dataset's stored height maps and traces instead of generators.
    #[arg(long)]
    pub ground_truth: bool,
    #[arg(long)]
    pub weights_h: Option<PathBuf>,
    #[arg(long)]
    pub weights_s: Option<PathBuf>,
    /// Resample friction images to WxH, e.g. 1280x800.
    #[arg(long)]
    pub display_size: Option<String>,
    /// nearest or bilinear.
    #[arg(long)]
    pub resample: Option<String>,
    /// Phase-reconstruction iterations.
    #[arg(long)]
    pub iterations: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long)]
    pub weights_h: Option<PathBuf>,
    #[arg(long)]
    pub weights_s: Option<PathBuf>,
    #[arg(long)]
    pub iterations: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Trace CSVs, height PNGs (with .scale sidecar) or V2HS spectrograms.
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Missing(String),
    Core(hapforge::Error),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Missing(_) => 2,
            CliError::Core(e) => match e {
                hapforge::Error::Io { .. } => 2,
                hapforge::Error::Degenerate(_) => 3,
                _ => 1,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Missing(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<hapforge::Error> for CliError {
    fn from(e: hapforge::Error) -> Self {
        CliError::Core(e)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HAPFORGE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let name = commands::name(&cli.command);
    match commands::run(cli) {
        Ok(summary) => {
            println!("command={name} status=ok {summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            println!("command={name} status=error code={}", e.code());
            ExitCode::from(e.code())
        }
    }
}
