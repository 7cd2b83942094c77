//! `fbf`: run experiments, build benchmark tables and stream data through checkpoints.

mod filter;
mod output;
mod run;

use clap::{Parser, Subcommand};
use fbf_core::FbfError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "fbf", version, about = "Functional Bayesian filter experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment and write results, summary, resolved config and checkpoint
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Fill the wall_ms column (makes results.csv depend on timing)
        #[arg(long)]
        timing: bool,
    },
    /// Stream CSV rows through a checkpoint
    Filter {
        #[arg(long)]
        model: PathBuf,
        /// Rows of `u_1..u_nu[,d_1..d_ny]`; `-` reads stdin
        #[arg(long, default_value = "-")]
        input: PathBuf,
        /// Destination CSV; stdout when absent
        #[arg(long)]
        out: Option<PathBuf>,
        /// Keep training on rows that carry a measurement
        #[arg(long)]
        adapt: bool,
        /// Write the adapted filter here when done
        #[arg(long, requires = "adapt")]
        save: Option<PathBuf>,
    },
    /// Run several configs and write one row per config (default: the four Ikeda noise rows)
    Table {
        #[arg(long)]
        config: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Print a checkpoint's header
    Inspect { checkpoint: PathBuf },
}

#[derive(clap::Args, Debug, Clone)]
struct Common {
    #[arg(long, env = "FBF_SEED")]
    seed: Option<u64>,
    /// Concurrent trials; 0 uses every core
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long)]
    quiet: bool,
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        }
    }
}

impl From<FbfError> for CliError {
    fn from(e: FbfError) -> Self {
        match e {
            FbfError::NonFinite(_) | FbfError::Factorization(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

pub fn io_err(path: &std::path::Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run {
            config,
            out,
            common,
            timing,
        } => run::cmd_run(&config, &out, &common, timing),
        Command::Filter {
            model,
            input,
            out,
            adapt,
            save,
        } => filter::cmd_filter(&model, &input, out.as_deref(), adapt, save.as_deref()),
        Command::Table { config, out, common } => run::cmd_table(&config, &out, &common),
        Command::Inspect { checkpoint } => filter::cmd_inspect(&checkpoint),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
