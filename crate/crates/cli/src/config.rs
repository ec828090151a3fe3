use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SAMPLES: usize = 1_000_000;
/// `output_path` value meaning standard output.
pub const STDOUT: &str = "-";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Invariance,
    Kernels,
    Mex,
    Ramps,
    Hbf,
    Hvq,
    All,
}

impl Suite {
    pub const INDIVIDUAL: [Suite; 6] = [
        Suite::Invariance,
        Suite::Kernels,
        Suite::Mex,
        Suite::Ramps,
        Suite::Hbf,
        Suite::Hvq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Invariance => "invariance",
            Suite::Kernels => "kernels",
            Suite::Mex => "mex",
            Suite::Ramps => "ramps",
            Suite::Hbf => "hbf",
            Suite::Hvq => "hvq",
            Suite::All => "all",
        }
    }

    /// Whether any check of the suite draws Monte-Carlo samples.
    pub fn uses_monte_carlo(self) -> bool {
        matches!(self, Suite::Invariance | Suite::Kernels | Suite::All)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub suite: Suite,
    pub seed: u64,
    pub samples: usize,
    pub output_path: String,
    pub format: Format,
    /// Size of the worker pool; `None` uses one worker per core.
    pub workers: Option<usize>,
}

impl SuiteConfig {
    pub fn new(suite: Suite) -> Self {
        SuiteConfig {
            suite,
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
            output_path: STDOUT.to_string(),
            format: Format::Json,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.suite.uses_monte_carlo() && self.samples < 2 {
            return Err(CliError::InvalidConfig(format!(
                "suite {} needs samples >= 2, got {}",
                self.suite.name(),
                self.samples
            )));
        }
        if self.workers == Some(0) {
            return Err(CliError::InvalidConfig("workers must be at least 1".into()));
        }
        Ok(())
    }
}

/// The config file: any subset of the [`SuiteConfig`] fields.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    suite: Option<Suite>,
    seed: Option<u64>,
    samples: Option<usize>,
    output_path: Option<String>,
    format: Option<Format>,
    workers: Option<usize>,
}

#[derive(Debug, Parser)]
#[command(name = "hwkern", version, about = "Verification suites for hwkern")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a verification suite and write its report.
    Run(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    suite: Option<Suite>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte-Carlo sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Report destination; `-` writes to stdout.
    #[arg(long = "out")]
    out: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// JSON file with defaults for any of the fields above; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (default: one per core). Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

fn map_clap(err: clap::Error) -> CliError {
    match err.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            CliError::Help(err.render().to_string())
        }
        ErrorKind::UnknownArgument | ErrorKind::InvalidSubcommand => {
            CliError::UnknownFlag(err.render().to_string().trim_end().to_string())
        }
        _ => CliError::InvalidConfig(err.render().to_string().trim_end().to_string()),
    }
}

fn read_file(path: &Path) -> Result<FileConfig> {
    let malformed = |reason: String| CliError::MalformedFile {
        path: path.display().to_string(),
        reason,
    };
    let text = std::fs::read_to_string(path).map_err(|e| malformed(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| malformed(e.to_string()))
}

/// Parses `argv` (program name first). Values from `--config` are applied
/// first and any flag given on the command line replaces them.
pub fn parse_config<I, T>(argv: I) -> Result<SuiteConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let Command::Run(args) = Cli::try_parse_from(argv).map_err(map_clap)?.command;
    let file = match &args.config {
        Some(path) => read_file(path)?,
        None => FileConfig::default(),
    };
    let suite = args
        .suite
        .or(file.suite)
        .ok_or_else(|| CliError::InvalidConfig("no suite given (use --suite or the config file)".into()))?;
    let config = SuiteConfig {
        suite,
        seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        samples: args.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES),
        output_path: args.out.or(file.output_path).unwrap_or_else(|| STDOUT.to_string()),
        format: args.format.or(file.format).unwrap_or(Format::Json),
        workers: args.workers.or(file.workers),
    };
    config.validate()?;
    Ok(config)
}
