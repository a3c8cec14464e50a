use std::path::PathBuf;

use aci_core::{ConstructorKind, EvalRange, Method};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::Study;

#[derive(Debug, Parser)]
#[command(name = "aci", version, about = "Online conformal prediction intervals for streaming forecasts")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one algorithm over a CSV of outcomes and point predictions
    Run(RunArgs),
    /// Run a simulation study across seeds, methods and levels
    Bench(BenchArgs),
    /// Convert a run directory into long-format plot data
    Plotdata(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum InputFormat {
    /// Header `t,y,mu_hat[,group]`
    #[default]
    Plain,
    /// FluSight point-estimate file
    Flusight,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Input CSV
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long, value_enum, default_value_t)]
    pub input_format: InputFormat,

    /// ACI, AgACI, FACI, SF-OGD or SAOCP
    #[arg(long)]
    pub method: Method,

    /// Target coverage in (0, 1)
    #[arg(long)]
    pub alpha: f64,

    /// linear or quantile (defaults to the method's usual choice)
    #[arg(long)]
    pub constructor: Option<ConstructorKind>,

    /// Learning rate for ACI, SF-OGD and SAOCP
    #[arg(long)]
    pub gamma: Option<f64>,

    /// Comma-separated learning-rate grid for AgACI and FACI
    #[arg(long, value_delimiter = ',')]
    pub gamma_grid: Option<Vec<f64>>,

    /// Maximum radius
    #[arg(long = "D", conflicts_with = "calibrate_d")]
    pub d: Option<f64>,

    /// Estimate D as the largest absolute residual in rows start:end
    #[arg(long = "calibrate-D", value_name = "START:END")]
    pub calibrate_d: Option<EvalRange>,

    /// Initial parameter
    #[arg(long)]
    pub theta1: Option<f64>,

    /// SAOCP lifetime multiplier
    #[arg(long, default_value_t = 8)]
    pub lifetime_g: usize,

    /// FACI interval length
    #[arg(long, default_value_t = 100)]
    pub interval_length: usize,

    /// Rows scored by the metrics, start:end (1-based, inclusive)
    #[arg(long, value_name = "START:END")]
    pub eval_range: Option<EvalRange>,

    /// Work on log outcomes and log predictions; bounds are exponentiated on output
    #[arg(long)]
    pub log_transform: bool,

    /// Window lengths for strongly adaptive regret
    #[arg(long, value_delimiter = ',', default_value = "20,50,100")]
    pub sa_windows: Vec<usize>,

    /// FluSight only: season used for warm-up and D calibration, e.g. 2010/2011
    #[arg(long)]
    pub warmup_season: Option<String>,

    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub study: Study,

    #[arg(long, value_delimiter = ',', default_value = "AgACI,SF-OGD,SAOCP,FACI")]
    pub methods: Vec<Method>,

    #[arg(long, value_delimiter = ',', default_value = "0.9")]
    pub alphas: Vec<f64>,

    /// Number of seeds, numbered from 1
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,

    /// Study parameters (ARMA psi = xi, or shift size); study defaults if omitted
    #[arg(long, value_delimiter = ',')]
    pub params: Option<Vec<f64>>,

    /// Worker threads; CONFORMAL_WORKERS takes precedence
    #[arg(long, default_value_t = 1)]
    pub workers: usize,

    /// Window lengths for strongly adaptive regret
    #[arg(long, value_delimiter = ',', default_value = "20,50,100")]
    pub sa_windows: Vec<usize>,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// Directory written by `aci run`
    #[arg(long)]
    pub run_dir: PathBuf,

    /// Output file (defaults to RUN_DIR/plotdata.csv)
    #[arg(long)]
    pub out: Option<PathBuf>,
}
