use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

mod commands;
mod config;
mod manifest;
mod selfcheck;

use config::{parse_window, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] wmc::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("selfcheck failed: {0} check(s) did not pass")]
    SelfCheck(usize),
}

impl From<wmc::ValidationErrors> for CliError {
    fn from(e: wmc::ValidationErrors) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Core(wmc::Error::Validation(_)) => 1,
            CliError::Core(_) | CliError::Io { .. } => 2,
            CliError::SelfCheck(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "wmc", version, about = "Worldline Monte Carlo estimates of imaginary-time propagators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (`key = value` lines) or a run manifest.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// One kernel estimate as a JSON line.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Also write the first N physical trajectories to paths.csv.
        #[arg(long, value_name = "N")]
        dump_paths: Option<usize>,
    },
    /// Kernel estimates over `t_grid`, written to sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Wilson-line histogram against the analytic density, with a KS test.
    PapHist {
        #[command(flatten)]
        common: Common,
        /// Also write every sample to pap_samples.csv.
        #[arg(long)]
        dump_samples: bool,
    },
    /// Ground-state energy from the late-time slope of a sweep table.
    FitEnergy {
        #[command(flatten)]
        common: Common,
        /// Sweep CSV to fit.
        #[arg(long, value_name = "PATH")]
        table: PathBuf,
        /// Fit window `low:high`; defaults to `fit.window` or the whole table.
        #[arg(long, value_name = "LOW:HIGH")]
        window: Option<String>,
    },
    /// Runs the internal consistency checks.
    Selfcheck {
        #[arg(long, value_name = "N", default_value_t = 0)]
        workers: usize,
    },
}

fn load(common: &Common) -> Result<Option<RunConfig>, CliError> {
    let Some(path) = &common.config else {
        return Ok(None);
    };
    let mut cfg = manifest::read_config(path)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = common.workers {
        cfg.workers = workers;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = Some(out.clone());
    }
    Ok(Some(cfg))
}

fn require(common: &Common) -> Result<RunConfig, CliError> {
    load(common)?.ok_or_else(|| CliError::Config("--config is required".into()))
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Estimate { common, dump_paths } => commands::estimate(&require(&common)?, dump_paths),
        Command::Sweep { common } => commands::sweep(&require(&common)?),
        Command::PapHist { common, dump_samples } => commands::pap_hist(&require(&common)?, dump_samples),
        Command::FitEnergy { common, table, window } => {
            let cfg = load(&common)?;
            let window = window.as_deref().map(parse_window).transpose()?;
            commands::fit_energy(cfg.as_ref(), &table, window, common.out.as_deref())
        }
        Command::Selfcheck { workers } => {
            let checks = selfcheck::run_all(workers);
            for c in &checks {
                println!("{}: {} ({})", c.name, if c.pass { "ok" } else { "FAILED" }, c.detail);
            }
            match checks.iter().filter(|c| !c.pass).count() {
                0 => Ok(()),
                n => Err(CliError::SelfCheck(n)),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
