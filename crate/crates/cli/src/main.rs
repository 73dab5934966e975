//! `gyrocal`: simulate sessions, calibrate recorded logs, and run Monte-Carlo
//! campaigns and speed sweeps.
//!
//! Exit status is 0 on success, 2 on configuration or parse errors and 3 on
//! numerical or geometric failures.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "gyrocal",
    version,
    about = "MEMS gyroscope scale-factor calibration on a servo motor"
)]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Progress messages on stderr (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a calibration session and write log.csv, manifest.json and ground_truth.json.
    Simulate {
        /// Scenario JSON; omitted fields take their defaults.
        scenario: PathBuf,
        /// Overrides GYROCAL_SEED and the scenario's own seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Calibrate from a session manifest, or from a single log with --auto-segment.
    Calibrate {
        /// Session manifest JSON; log paths are relative to it.
        #[arg(required_unless_present = "auto_segment", conflicts_with = "auto_segment")]
        manifest: Option<PathBuf>,
        /// Find the bias, pose and rotation segments automatically.
        #[arg(long, value_name = "LOG", requires = "speed")]
        auto_segment: Option<PathBuf>,
        /// Commanded motor speed in deg/s (with --auto-segment).
        #[arg(long)]
        speed: Option<f64>,
        /// Multipliers taking file units to g and deg/s, as `ACCEL,GYRO`.
        #[arg(long, value_name = "ACCEL,GYRO", value_parser = parse_unit_scale)]
        unit_scale: Option<gyrocal::UnitScale>,
        /// Pre-fitted accelerometer model JSON.
        #[arg(long)]
        accel_model: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Calibrate a series of speed points and assess scale-factor linearity.
    Sweep {
        sweep: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeated simulate-and-calibrate runs, or a noise-by-speed grid with --sigmas/--speeds.
    Montecarlo {
        scenario: PathBuf,
        #[arg(long, default_value_t = 500)]
        runs: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Redraw true models per run, or keep them and redraw noise only.
        #[arg(long, value_enum)]
        redraw: Option<Redraw>,
        /// Gyro noise levels for the grid, deg/s.
        #[arg(long, value_delimiter = ',', requires = "speeds")]
        sigmas: Option<Vec<f64>>,
        /// Motor speeds for the grid, deg/s.
        #[arg(long, value_delimiter = ',', requires = "sigmas")]
        speeds: Option<Vec<f64>>,
        /// Summary format printed on stdout.
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Redraw {
    Models,
    NoiseOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

fn parse_unit_scale(s: &str) -> Result<gyrocal::UnitScale, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [a, g] = parts.as_slice() else {
        return Err(format!("expected ACCEL,GYRO, got {s:?}"));
    };
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok(gyrocal::UnitScale {
        accel: num(a)?,
        gyro: num(g)?,
    })
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "calibration failed: {m}"),
        }
    }
}

impl From<gyrocal::Error> for CliError {
    fn from(e: gyrocal::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = match CliConfig::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gyrocal: {e}");
            ExitCode::from(e.code())
        }
    }
}
