mod commands;
mod config;
mod plot;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hubbard_tunneling::presets;
use hubbard_tunneling::Error;

use crate::commands::Context;
use crate::config::{ConfigFile, RunConfig};

/// Exact tunnelling dynamics, entanglement fits and KAN surrogates for a
/// one-dimensional Hubbard chain.
#[derive(Parser, Debug)]
#[command(name = "hubtun", version)]
struct Cli {
    /// Flat TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Named preset used as the base configuration (see `hubtun presets`).
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and cross-validation folds.
    #[arg(long, global = true, env = "HUBTUN_WORKERS")]
    workers: Option<usize>,
    /// Seed for fold assignment and KAN initialisation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    plot: bool,
    /// More log output (-v, -vv).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one trajectory and write n_A(t), S_A(t).
    Simulate,
    /// Run one trajectory per (U, h) grid pair.
    Sweep,
    /// Fit the binary-entropy law and a cubic B-spline to every group.
    Fit {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Train, cross-validate or evaluate a KAN surrogate for S_A(U, n_A).
    Kan {
        #[command(subcommand)]
        action: KanAction,
    },
    /// List the built-in presets.
    Presets,
}

#[derive(Subcommand, Debug)]
enum KanAction {
    Train {
        #[arg(long)]
        dataset: PathBuf,
    },
    Cv {
        #[arg(long)]
        dataset: PathBuf,
    },
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
    },
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(Error),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Core(e) => match e {
                Error::Eigen(_) | Error::Singular(_) | Error::ZeroVariance | Error::Stratification { .. } => 3,
                _ => 2,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Command::Presets = cli.command {
        for p in presets::all() {
            println!("{:<14} {}", p.name, p.summary);
        }
        return Ok(());
    }
    let mut file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    file.overlay(&ConfigFile {
        preset: cli.preset.clone(),
        seed: cli.seed,
        workers: cli.workers,
        out_dir: cli.out.clone(),
        ..ConfigFile::default()
    });
    let run = RunConfig::resolve(&file)?;
    if let Some(n) = run.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))?;
    }
    let ctx = Context { run, plot: cli.plot };
    match &cli.command {
        Command::Simulate => commands::simulate(&ctx),
        Command::Sweep => commands::sweep_cmd(&ctx),
        Command::Fit { dataset } => commands::fit(&ctx, dataset),
        Command::Kan { action } => match action {
            KanAction::Train { dataset } => commands::kan_train(&ctx, dataset),
            KanAction::Cv { dataset } => commands::kan_cv(&ctx, dataset),
            KanAction::Eval { dataset, checkpoint } => commands::kan_eval(&ctx, dataset, checkpoint),
        },
        Command::Presets => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
