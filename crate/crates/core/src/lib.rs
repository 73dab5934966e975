//! Field calibration of MEMS triaxial gyroscope scale factors on a servo motor.
//!
//! The IMU is mounted once on a motor. Gravity is sampled at a few static
//! poses about the motor axis and the gyroscope is read while the motor
//! turns at a known constant speed. The dot product of gravity with the rate
//! vector is constant over the poses, which makes the three scale factors the
//! solution of a linear least-squares problem.

pub mod error;
pub mod estimator;
pub mod linalg;
pub mod linearity;
pub mod math;
pub mod model;
pub mod session_io;
pub mod simulator;

pub use error::{Error, Result};
pub use estimator::{
    build_design_matrix, calibrate, calibrate_accel, calibrate_detailed, estimate_gyro_bias, normalize_alpha, solve_ls,
    Calibration, CalibrationResult, CalibrationSession, DesignMatrix, LsSolution,
};
pub use linearity::{
    assess_linearity, fit_lines, reconstruct_speed, run_sweep, scale_table_csv, speed_table_csv, AxisFit, Linearity,
    SweepConfig, SweepPoint, SweepReport, SweepSource,
};
pub use math::{Quat, SeriesStats, Vec3};
pub use model::{AccelModel, GyroModel, ImuSample};
pub use session_io::{
    auto_segment, format_csv, load_session, parse_csv, parse_csv_str, write_csv, LoadedSession, Segmentation,
    SessionManifest, UnitScale,
};
pub use simulator::{
    draw_scenario, monte_carlo, noise_grid, simulate_session, MonteCarloSummary, RedrawPolicy, ScenarioConfig,
    ScenarioOverrides, SimulatedSession,
};
