//! Command-line driver for the synthesis pipeline.
//!
//! Every stage reads its inputs from and writes its artifacts to disk. Exit
//! codes are stable across commands: 0 on success, 2 on usage, I/O or parse
//! errors, 3 when verification, allocation or tests fail.

mod commands;
mod config;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use forge_core::llm::ProviderKind;

pub use commands::{cmd_allocate, cmd_codegen, cmd_gen_model, cmd_pipeline, cmd_simulate, cmd_validate};
pub use config::{parse_weights, PipelineConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FAILED: i32 = 3;

/// Anything that maps to exit code 2. Verification failures are not errors;
/// commands report them as [`EXIT_FAILED`].
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage(String),
    Io(String),
    Parse(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::Parse(m) => write!(f, "parse error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Parser)]
#[command(name = "forge", version, about = "Synthesize, allocate, deploy and test vehicle software models")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML configuration file; relative paths inside it resolve against its directory.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default "out").
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_provider)]
    pub provider: Option<ProviderKind>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// NSGA-II population size.
    #[arg(long, global = true)]
    pub pop: Option<usize>,
    /// NSGA-II generations.
    #[arg(long, global = true)]
    pub gens: Option<usize>,
    /// Selection weights for power, cost and traffic, as "p,c,t".
    #[arg(long, global = true)]
    pub weights: Option<String>,
    /// Use NSGA-II even when exhaustive search is affordable.
    #[arg(long, global = true)]
    pub nsga2: bool,
    #[arg(long, global = true)]
    pub max_rounds: Option<usize>,
}

fn parse_provider(s: &str) -> Result<ProviderKind, String> {
    match s {
        "mock" => Ok(ProviderKind::Mock),
        "http" => Ok(ProviderKind::Http),
        _ => Err(format!("unknown provider '{s}', expected mock or http")),
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draft model.json, constraints.ocl and trace.json from the requirements.
    GenModel,
    /// Check a model against the built-in rules and optional extra constraints.
    Validate {
        model: PathBuf,
        constraints: Option<PathBuf>,
    },
    /// Solve the allocation and write front.json, allocation.csv, enhanced_model.json.
    Allocate { model: PathBuf },
    /// Render deployment files, adapters and the test suite.
    Codegen {
        model: PathBuf,
        /// Acceptance criteria (JSON array); overrides the configured path.
        #[arg(long)]
        criteria: Option<PathBuf>,
    },
    /// Run the generated suite against the deployment in the output directory.
    Simulate {
        /// Enhanced model; defaults to enhanced_model.json in the output directory.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Run every stage in order, stopping at the first failure.
    Pipeline,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = PipelineConfig::resolve(&cli.global, |k| std::env::var(k).ok()).and_then(|cfg| match cli.command {
        Command::GenModel => cmd_gen_model(&cfg),
        Command::Validate { model, constraints } => cmd_validate(&cfg, &model, constraints.as_deref()),
        Command::Allocate { model } => cmd_allocate(&cfg, &model),
        Command::Codegen { model, criteria } => {
            let mut cfg = cfg;
            if criteria.is_some() {
                cfg.criteria = criteria;
            }
            cmd_codegen(&cfg, &model)
        }
        Command::Simulate { model } => cmd_simulate(&cfg, model.as_deref()),
        Command::Pipeline => cmd_pipeline(&cfg),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("forge: {e}");
            EXIT_USAGE
        }
    }
}
