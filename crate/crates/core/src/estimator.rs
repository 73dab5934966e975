//! Scale-factor calibration from one servo-motor installation.
//!
//! While the motor turns at a constant speed about a fixed axis, gravity and
//! the angular-rate vector are both fixed in the world frame, so their dot
//! product is the same for every orientation the IMU takes about that axis.
//! Sampling gravity at several static poses and the rate once gives a linear
//! system in the three scale factors, known only up to that unknown constant.
//! The commanded motor speed then fixes the absolute scale.
//!
//! Pipeline: gyro bias from the unpowered segment, accelerometer correction
//! of the pose means, design matrix, least squares, speed normalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, lstsq};
use crate::math::{series_stats, trimmed_mean, Vec3};
use crate::model::{AccelModel, GyroModel, ImuSample};

/// Per-axis gyro standard deviation (deg/s) above which a segment is not at rest.
pub const STATIC_GATE_DPS: f64 = 1.0;
/// Largest admissible condition number of a 3x3 normal matrix.
pub const CONDITION_GATE: f64 = 1e8;
/// Admissible (acute) angle between rotation axis and gravity, degrees.
pub const GEOMETRY_MIN_DEG: f64 = 15.0;
pub const GEOMETRY_MAX_DEG: f64 = 75.0;
/// Fraction trimmed from each tail of the rotation segment before averaging.
pub const ROTATION_TRIM: f64 = 0.01;
pub const MIN_POSES: usize = 3;

const ACCEL_MAX_ITERATIONS: usize = 50;
const ACCEL_STEP_TOLERANCE: f64 = 1e-10;
/// Stricter gate for the six-parameter accelerometer fit; poses taken about a
/// single motor axis are coplanar and leave the bias unobservable.
const ACCEL_FULL_FIT_GATE: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSession {
    /// IMU at rest with the motor unpowered.
    pub bias_segment: Vec<ImuSample>,
    /// IMU at rest in distinct orientations about the motor axis.
    pub static_poses: Vec<Vec<ImuSample>>,
    /// Motor turning at `commanded_speed`.
    pub rotation_segment: Vec<ImuSample>,
    /// Servo speed in deg/s.
    pub commanded_speed: f64,
}

impl CalibrationSession {
    pub fn validate(&self) -> Result<()> {
        if !(self.commanded_speed.is_finite() && self.commanded_speed > 0.0) {
            return Err(Error::invalid(
                "commanded_speed",
                format!("must be positive, got {}", self.commanded_speed),
            ));
        }
        if self.static_poses.len() < MIN_POSES {
            return Err(Error::TooFewPoses {
                required: MIN_POSES,
                got: self.static_poses.len(),
            });
        }
        if self.bias_segment.is_empty()
            || self.rotation_segment.is_empty()
            || self.static_poses.iter().any(Vec::is_empty)
        {
            return Err(Error::EmptySeries);
        }
        let all = self
            .bias_segment
            .iter()
            .chain(self.static_poses.iter().flatten())
            .chain(&self.rotation_segment);
        for s in all {
            if !(s.t.is_finite() && s.accel.is_finite() && s.gyro.is_finite()) {
                return Err(Error::NonFinite("session sample"));
            }
        }
        Ok(())
    }

    /// Same session with every gyro reading multiplied by `c`.
    pub fn with_gyro_scaled(&self, c: f64) -> CalibrationSession {
        let scale = |seg: &[ImuSample]| -> Vec<ImuSample> {
            seg.iter().map(|s| ImuSample { gyro: s.gyro * c, ..*s }).collect()
        };
        CalibrationSession {
            bias_segment: scale(&self.bias_segment),
            static_poses: self.static_poses.iter().map(|p| scale(p)).collect(),
            rotation_segment: scale(&self.rotation_segment),
            commanded_speed: self.commanded_speed,
        }
    }
}

/// Rows are `a_c[i] ⊙ g_mean`; every right-hand side entry is the same constant.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub rows: Vec<Vec3>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsSolution {
    pub beta: Vec3,
    pub residual_rms: f64,
    pub condition_number: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    /// Calibrated model: scale is `alpha * beta_raw`, bias in the true-rate domain.
    #[serde(flatten)]
    pub gyro: GyroModel,
    pub alpha: f64,
    pub beta_raw: Vec3,
    pub residual_rms: f64,
    pub condition_number: f64,
    #[serde(rename = "angle_axis_gravity_deg")]
    pub angle_axis_gravity: f64,
}

/// Calibration result plus the intermediate quantities behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub result: CalibrationResult,
    /// Mean gyro reading at rest (measured domain).
    pub gyro_offset: Vec3,
    /// Bias-removed trimmed mean of the rotation segment.
    pub g_mean: Vec3,
    pub accel_model: AccelModel,
    /// Calibrated mean specific force of each pose.
    pub pose_accel: Vec<Vec3>,
}

impl Calibration {
    /// `a_c[i] · g_mean` per pose, before the scale factors are applied.
    pub fn dot_before(&self) -> Vec<f64> {
        self.pose_accel.iter().map(|a| a.dot(self.g_mean)).collect()
    }

    /// `a_c[i] · (K ⊙ g_mean)` per pose.
    pub fn dot_after(&self) -> Vec<f64> {
        let rate = self.result.gyro.scale.hadamard(self.g_mean);
        self.pose_accel.iter().map(|a| a.dot(rate)).collect()
    }
}

/// Mean gyro reading of a segment taken at rest.
pub fn estimate_gyro_bias(segment: &[ImuSample]) -> Result<Vec3> {
    let stats = series_stats(segment.iter().map(|s| s.gyro))?;
    check_static(stats.std())?;
    Ok(stats.mean)
}

fn check_static(std: Vec3) -> Result<()> {
    if std.max_abs() > STATIC_GATE_DPS {
        return Err(Error::NotStatic {
            std: std.to_array(),
            gate: STATIC_GATE_DPS,
        });
    }
    Ok(())
}

fn pose_means(poses: &[Vec<ImuSample>]) -> Result<Vec<Vec3>> {
    poses
        .iter()
        .map(|p| {
            let gyro = series_stats(p.iter().map(|s| s.gyro))?;
            check_static(gyro.std())?;
            Ok(series_stats(p.iter().map(|s| s.accel))?.mean)
        })
        .collect()
}

/// Fits a diagonal accelerometer model to static pose segments so that the
/// corrected pose means have unit magnitude.
pub fn calibrate_accel(static_poses: &[Vec<ImuSample>]) -> Result<AccelModel> {
    fit_accel_model(&pose_means(static_poses)?)
}

/// Magnitude-constraint fit over mean pose vectors (in g).
///
/// Gauss-Newton on `|scale ⊙ a_i + bias| - 1` from identity. With fewer than
/// six poses, or when the poses cannot separate bias from scale, only the
/// scale is fitted and the bias is zero.
pub fn fit_accel_model(means: &[Vec3]) -> Result<AccelModel> {
    if means.len() < MIN_POSES {
        return Err(Error::TooFewPoses {
            required: MIN_POSES,
            got: means.len(),
        });
    }
    if means.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite("pose accelerometer mean"));
    }
    let spread: Vec<Vec<f64>> = means.iter().map(|a| a.to_array().to_vec()).collect();
    let condition = linalg::condition_number(&linalg::normal_matrix(&spread));
    if condition > CONDITION_GATE {
        return Err(Error::DegeneratePoses { condition });
    }

    if means.len() >= 6 {
        let start = [1.0, 1.0, 1.0, 0.0, 0.0, 0.0];
        let (rows, _) = accel_jacobian(means, &start, true);
        if linalg::condition_number(&linalg::normal_matrix(&rows)) <= ACCEL_FULL_FIT_GATE {
            let p = gauss_newton(means, start, true)?;
            return AccelModel::new(Vec3::new(p[0], p[1], p[2]), Vec3::new(p[3], p[4], p[5]));
        }
    }
    let p = gauss_newton(means, [1.0, 1.0, 1.0, 0.0, 0.0, 0.0], false)?;
    AccelModel::new(Vec3::new(p[0], p[1], p[2]), Vec3::ZERO)
}

fn accel_jacobian(means: &[Vec3], p: &[f64; 6], with_bias: bool) -> (Vec<Vec<f64>>, Vec<f64>) {
    let scale = Vec3::new(p[0], p[1], p[2]);
    let bias = Vec3::new(p[3], p[4], p[5]);
    let mut rows = Vec::with_capacity(means.len());
    let mut residuals = Vec::with_capacity(means.len());
    for &a in means {
        let c = scale.hadamard(a) + bias;
        let n = c.norm();
        let mut row = vec![c.x * a.x / n, c.y * a.y / n, c.z * a.z / n];
        if with_bias {
            row.extend([c.x / n, c.y / n, c.z / n]);
        }
        rows.push(row);
        residuals.push(n - 1.0);
    }
    (rows, residuals)
}

fn gauss_newton(means: &[Vec3], mut p: [f64; 6], with_bias: bool) -> Result<[f64; 6]> {
    for _ in 0..ACCEL_MAX_ITERATIONS {
        let (rows, residuals) = accel_jacobian(means, &p, with_bias);
        let condition = linalg::condition_number(&linalg::normal_matrix(&rows));
        if condition > CONDITION_GATE {
            return Err(Error::DegeneratePoses { condition });
        }
        let neg: Vec<f64> = residuals.iter().map(|r| -r).collect();
        let step = lstsq(&rows, &neg).ok_or(Error::DegeneratePoses { condition })?;
        for (pi, di) in p.iter_mut().zip(&step.x) {
            *pi += di;
        }
        let step_norm = step.x.iter().map(|d| d * d).sum::<f64>().sqrt();
        if !step_norm.is_finite() {
            return Err(Error::DegeneratePoses { condition });
        }
        if step_norm < ACCEL_STEP_TOLERANCE {
            break;
        }
    }
    Ok(p)
}

/// Builds the least-squares system with a unit right-hand side.
pub fn build_design_matrix(a_c: &[Vec3], g_mean: Vec3) -> Result<DesignMatrix> {
    if a_c.len() < MIN_POSES {
        return Err(Error::TooFewPoses {
            required: MIN_POSES,
            got: a_c.len(),
        });
    }
    Ok(DesignMatrix {
        rows: a_c.iter().map(|a| a.hadamard(g_mean)).collect(),
        rhs: vec![1.0; a_c.len()],
    })
}

/// Least-squares `beta` minimizing `|X beta - l|` via Householder QR.
pub fn solve_ls(x: &DesignMatrix) -> Result<LsSolution> {
    if x.rows.len() < MIN_POSES {
        return Err(Error::TooFewPoses {
            required: MIN_POSES,
            got: x.rows.len(),
        });
    }
    let rows: Vec<Vec<f64>> = x.rows.iter().map(|r| r.to_array().to_vec()).collect();
    let condition = linalg::condition_number(&linalg::normal_matrix(&rows));
    if condition.is_nan() || condition > CONDITION_GATE {
        return Err(Error::SingularSystem { condition });
    }
    let sol = lstsq(&rows, &x.rhs).ok_or(Error::SingularSystem { condition })?;
    Ok(LsSolution {
        beta: Vec3::new(sol.x[0], sol.x[1], sol.x[2]),
        residual_rms: sol.residual_rms,
        condition_number: condition,
    })
}

/// Positive `alpha` with `|alpha * beta ⊙ g_mean| = speed`.
pub fn normalize_alpha(beta: Vec3, g_mean: Vec3, speed: f64) -> Result<f64> {
    if !(speed.is_finite() && speed > 0.0) {
        return Err(Error::invalid("speed", format!("must be positive, got {speed}")));
    }
    let rate = beta.hadamard(g_mean).norm();
    if rate.is_nan() || rate < 1e-9 {
        return Err(Error::ZeroRate);
    }
    Ok(speed / rate)
}

/// Mean acute angle (degrees) between each pose's gravity and the rate direction.
fn axis_gravity_angle(pose_accel: &[Vec3], rate: Vec3) -> f64 {
    let sum: f64 = pose_accel
        .iter()
        .map(|a| {
            let ang = a.angle_to(rate).unwrap_or(0.0).to_degrees();
            ang.min(180.0 - ang)
        })
        .sum();
    sum / pose_accel.len() as f64
}

fn geometry_ok(angle: f64) -> bool {
    (GEOMETRY_MIN_DEG..=GEOMETRY_MAX_DEG).contains(&angle)
}

fn geometry_error(angle: f64) -> Error {
    Error::GeometryDegenerate {
        angle_deg: angle,
        min_deg: GEOMETRY_MIN_DEG,
        max_deg: GEOMETRY_MAX_DEG,
    }
}

pub fn calibrate(session: &CalibrationSession, accel_model: Option<&AccelModel>) -> Result<CalibrationResult> {
    calibrate_detailed(session, accel_model).map(|c| c.result)
}

/// Full pipeline; when `accel_model` is `None` it is fitted from the poses.
pub fn calibrate_detailed(session: &CalibrationSession, accel_model: Option<&AccelModel>) -> Result<Calibration> {
    session.validate()?;
    let gyro_offset = estimate_gyro_bias(&session.bias_segment)?;

    let rotation: Vec<Vec3> = session.rotation_segment.iter().map(|s| s.gyro - gyro_offset).collect();
    let g_mean = trimmed_mean(&rotation, ROTATION_TRIM)?;

    let means = pose_means(&session.static_poses)?;
    let accel_model = match accel_model {
        Some(m) => {
            m.validate()?;
            *m
        }
        None => match fit_accel_model(&means) {
            Ok(m) => m,
            // poses spanning too little of the sphere usually mean the axis is near vertical or horizontal
            Err(Error::DegeneratePoses { .. }) if !geometry_ok(axis_gravity_angle(&means, g_mean)) => {
                return Err(geometry_error(axis_gravity_angle(&means, g_mean)));
            }
            Err(e) => return Err(e),
        },
    };
    let pose_accel: Vec<Vec3> = means.iter().map(|&a| accel_model.apply(a)).collect();

    // Angle seen through the uncalibrated rate; only decisive when the solve fails.
    let raw_angle = axis_gravity_angle(&pose_accel, g_mean);

    let mut x = build_design_matrix(&pose_accel, g_mean)?;
    // The dot-product constant is negative when the motor turns the other way;
    // matching its sign keeps beta (and K) positive.
    let orientation: f64 = x.rows.iter().map(|r| r.x + r.y + r.z).sum();
    if orientation == 0.0 {
        return Err(geometry_error(raw_angle));
    }
    if orientation < 0.0 {
        x.rhs.iter_mut().for_each(|l| *l = -1.0);
    }

    let ls = match solve_ls(&x) {
        Ok(ls) => ls,
        Err(Error::SingularSystem { .. }) if !geometry_ok(raw_angle) => return Err(geometry_error(raw_angle)),
        Err(e) => return Err(e),
    };
    let alpha = normalize_alpha(ls.beta, g_mean, session.commanded_speed)?;
    let scale = ls.beta * alpha;
    if !(scale.x > 0.0 && scale.y > 0.0 && scale.z > 0.0) {
        if !geometry_ok(raw_angle) {
            return Err(geometry_error(raw_angle));
        }
        return Err(Error::NonPositiveScale(scale.to_array()));
    }

    let angle = axis_gravity_angle(&pose_accel, scale.hadamard(g_mean));
    if !geometry_ok(angle) {
        return Err(geometry_error(angle));
    }

    let gyro = GyroModel::new(scale, -scale.hadamard(gyro_offset))?;
    Ok(Calibration {
        result: CalibrationResult {
            gyro,
            alpha,
            beta_raw: ls.beta,
            residual_rms: ls.residual_rms,
            condition_number: ls.condition_number,
            angle_axis_gravity: angle,
        },
        gyro_offset,
        g_mean,
        accel_model,
        pose_accel,
    })
}
