//! `ahrs` — simulate IMU datasets, train the LSTM, run estimators, and
//! benchmark them against each other.
//!
//! Exit codes: 0 success, 2 configuration or input-format errors, 3 I/O
//! errors, 4 numeric failures (gimbal lock, degenerate geometry).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use ahrs_fusion::attitude::AttitudeError;
use ahrs_fusion::dataset::DatasetError;
use ahrs_fusion::ekf::EkfError;
use ahrs_fusion::incremental::IncrementalError;
use ahrs_fusion::lstm::LstmError;
use ahrs_fusion::metrics::MetricsError;
use ahrs_fusion::sim::SimError;

use config::{CliRegime, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Attitude(a) => CliError::Numeric(a.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<AttitudeError> for CliError {
    fn from(e: AttitudeError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<EkfError> for CliError {
    fn from(e: EkfError) -> Self {
        match e {
            EkfError::Config(msg) => CliError::Config(msg),
            EkfError::Attitude(a) => CliError::Numeric(a.to_string()),
        }
    }
}

impl From<LstmError> for CliError {
    fn from(e: LstmError) -> Self {
        match e {
            LstmError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<IncrementalError> for CliError {
    fn from(e: IncrementalError) -> Self {
        match e {
            IncrementalError::Lstm(inner) => inner.into(),
            IncrementalError::Dataset(inner) => inner.into(),
            IncrementalError::Ekf(inner) => inner.into(),
            IncrementalError::Attitude(inner) => inner.into(),
            IncrementalError::Config(msg) => CliError::Config(msg),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    /// Open-loop gyro integration from the first reference attitude.
    Gyro,
    /// Per-sample accelerometer roll/pitch and magnetometer yaw.
    Accelmag,
    /// Extended Kalman Filter.
    Ekf,
    /// Offline-trained LSTM with frozen weights.
    Lstm,
    /// LSTM with periodic in-run weight updates.
    LstmInc,
}

#[derive(Parser)]
#[command(name = "ahrs", about = "Attitude estimation toolkit", version)]
struct Cli {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Reseed every seeded stage (trajectory, init, shuffles, updates).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled dataset and write the canonical CSV.
    Simulate {
        #[arg(long)]
        out: PathBuf,
        /// Override the configured regime: low_dynamic, high_dynamic, static.
        #[arg(long)]
        regime: Option<CliRegime>,
        /// Override the configured duration (seconds).
        #[arg(long)]
        duration: Option<f64>,
        /// Override the configured sample rate (Hz).
        #[arg(long)]
        rate: Option<f64>,
    },
    /// Train the network offline on a dataset and save the weights.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        weights_out: PathBuf,
        /// Also write the per-epoch loss trace.
        #[arg(long)]
        loss_out: Option<PathBuf>,
    },
    /// Run one estimator over a dataset and write its estimate CSV.
    Run {
        #[arg(long, value_enum)]
        estimator: EstimatorArg,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Weight file (required for lstm and lstm-inc).
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Train + evaluate lstm-inc, lstm, and ekf over every dataset and
    /// emit the RMSE report plus plot-ready time series.
    Benchmark {
        /// Dataset CSV (repeatable).
        #[arg(long, required = true)]
        data: Vec<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Map an externally recorded CSV into the canonical column layout.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let mut config = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.override_seed(seed);
    }
    match cli.command {
        Command::Simulate {
            out,
            regime,
            duration,
            rate,
        } => {
            if let Some(regime) = regime {
                config.simulate.regime = regime;
            }
            if let Some(duration) = duration {
                config.simulate.duration = duration;
            }
            if let Some(rate) = rate {
                config.simulate.rate = rate;
            }
            commands::simulate(&config, &out)
        }
        Command::Train {
            data,
            weights_out,
            loss_out,
        } => commands::train(&config, &data, &weights_out, loss_out.as_deref()),
        Command::Run {
            estimator,
            data,
            out,
            weights,
        } => commands::run(&config, estimator, &data, &out, weights.as_deref()),
        Command::Benchmark { data, out_dir } => commands::benchmark(&config, &data, &out_dir),
        Command::Convert { input, out } => commands::convert(&config, &input, &out),
    }
}
