//! Synthetic calibration sessions and Monte-Carlo campaigns.
//!
//! The IMU is mounted on a motor whose axis is fixed in the world. `mount`
//! maps the body frame onto the world frame at motor angle zero; turning the
//! motor by `phi` rotates the body about `axis` (a body-frame direction).
//! World "up" is +z and an accelerometer at rest reads +1 g along it.
//!
//! A simulated log is one continuous time series: a bias segment, the static
//! poses joined by hand-rotation transitions, then motor spin-up, constant
//! speed and spin-down. Segment ranges index into that log.

use std::f64::consts::PI;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{calibrate_detailed, CalibrationSession, MIN_POSES};
use crate::math::{quantile_sorted, Quat, Vec3};
use crate::model::{AccelModel, GyroModel, ImuSample};

/// Name of the generator recorded in output metadata.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9), per-run seeds via SplitMix64";

/// Gyro noise floor at rest (deg/s) when no static sigma is given.
pub const DEFAULT_STATIC_GYRO_NOISE: f64 = 0.1;

const TRANSITION_SECONDS: f64 = 1.5;
const SPIN_SECONDS: f64 = 1.0;
const UP: Vec3 = Vec3::new(0.0, 0.0, 1.0);

// streams of one scenario seed
const STREAM_POSES: u64 = 0;
const STREAM_NOISE: u64 = 1;
const STREAM_SPEED: u64 = 2;
const STREAM_DRAW: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub true_gyro: GyroModel,
    pub true_accel: AccelModel,
    /// Rotation axis in the body frame (any nonzero length).
    pub axis: Vec3,
    /// Body-to-world orientation at motor angle zero, `[w, x, y, z]`.
    /// When absent, the shortest rotation tilting `axis` by `tilt_deg` from vertical.
    pub mount: Option<Quat>,
    pub tilt_deg: f64,
    /// Commanded motor speed, deg/s.
    pub speed: f64,
    /// Gyro noise while the motor turns, deg/s.
    pub noise_sigma_gyro: f64,
    /// Gyro noise at rest, deg/s. Defaults to `min(noise_sigma_gyro, 0.1)`.
    pub noise_sigma_gyro_static: Option<f64>,
    /// Accelerometer noise, g.
    pub noise_sigma_accel: f64,
    pub n_poses: usize,
    /// Samples in the bias segment and in every static pose.
    pub samples_per_segment: usize,
    /// Samples in the constant-speed segment.
    pub rotation_samples: usize,
    /// Hz.
    pub sample_rate: f64,
    /// First pose angle in degrees; seeded random in `[0, 360/n_poses)` when absent.
    pub pose_offset_deg: Option<f64>,
    /// Relative servo speed error bound; the true speed is drawn from
    /// `speed * (1 + U(-e, e))`.
    pub speed_error: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            true_gyro: GyroModel::IDENTITY,
            true_accel: AccelModel::IDENTITY,
            axis: Vec3::new(-1.0, 1.0, -1.0),
            mount: None,
            tilt_deg: 45.0,
            speed: 50.0,
            noise_sigma_gyro: 0.1,
            noise_sigma_gyro_static: None,
            noise_sigma_accel: 0.002,
            n_poses: 4,
            samples_per_segment: 500,
            rotation_samples: 2000,
            sample_rate: 100.0,
            pose_offset_deg: None,
            speed_error: 0.0,
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    /// The paper-style single-speed scenario: K = (1.033, 0.811, 1.151),
    /// axis (-1, 1, -1), 50 deg/s, 0.1 deg/s gyro noise.
    pub fn reference() -> Self {
        Self {
            true_gyro: GyroModel {
                scale: Vec3::new(1.033, 0.811, 1.151),
                bias: Vec3::ZERO,
            },
            ..Self::default()
        }
    }

    /// Same scenario with every noise source switched off.
    pub fn noiseless(mut self) -> Self {
        self.noise_sigma_gyro = 0.0;
        self.noise_sigma_gyro_static = Some(0.0);
        self.noise_sigma_accel = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.true_gyro.validate()?;
        self.true_accel.validate()?;
        if self.axis.normalized().is_none() {
            return Err(Error::ZeroAxis);
        }
        let checks: [(&str, f64, bool); 6] = [
            ("speed", self.speed, self.speed > 0.0),
            ("noise_sigma_gyro", self.noise_sigma_gyro, self.noise_sigma_gyro >= 0.0),
            (
                "noise_sigma_accel",
                self.noise_sigma_accel,
                self.noise_sigma_accel >= 0.0,
            ),
            ("sample_rate", self.sample_rate, self.sample_rate > 0.0),
            ("tilt_deg", self.tilt_deg, (0.0..=180.0).contains(&self.tilt_deg)),
            ("speed_error", self.speed_error, (0.0..1.0).contains(&self.speed_error)),
        ];
        for (field, value, ok) in checks {
            if !(ok && value.is_finite()) {
                return Err(Error::invalid(field, format!("out of range: {value}")));
            }
        }
        if let Some(s) = self.noise_sigma_gyro_static {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::invalid("noise_sigma_gyro_static", format!("out of range: {s}")));
            }
        }
        if self.n_poses < MIN_POSES {
            return Err(Error::invalid(
                "n_poses",
                format!("need at least {MIN_POSES}, got {}", self.n_poses),
            ));
        }
        if self.samples_per_segment == 0 || self.rotation_samples == 0 {
            return Err(Error::invalid(
                "samples_per_segment",
                "segments need at least one sample",
            ));
        }
        if let Some(o) = self.pose_offset_deg {
            if !o.is_finite() {
                return Err(Error::invalid("pose_offset_deg", "not finite"));
            }
        }
        Ok(())
    }

    /// Mount quaternion actually used by the simulation.
    pub fn resolved_mount(&self) -> Result<Quat> {
        if let Some(q) = self.mount {
            return Ok(q);
        }
        let t = self.tilt_deg.to_radians();
        Quat::from_two_vectors(self.axis, Vec3::new(t.sin(), 0.0, t.cos()))
    }

    pub fn static_gyro_sigma(&self) -> f64 {
        self.noise_sigma_gyro_static
            .unwrap_or(self.noise_sigma_gyro.min(DEFAULT_STATIC_GYRO_NOISE))
    }
}

/// Field-by-field overrides for [`draw_scenario`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioOverrides {
    pub scale: Option<Vec3>,
    pub bias: Option<Vec3>,
    pub true_accel: Option<AccelModel>,
    pub axis: Option<Vec3>,
    pub mount: Option<Quat>,
    pub tilt_deg: Option<f64>,
    pub speed: Option<f64>,
    pub noise_sigma_gyro: Option<f64>,
    pub noise_sigma_accel: Option<f64>,
    pub n_poses: Option<usize>,
}

/// SplitMix64 finalizer; derives independent child seeds.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    let mut z = parent ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Uniform scale factor in [0.9, 1.1] per axis.
pub fn draw_scale(rng: &mut impl Rng) -> Vec3 {
    Vec3::new(
        rng.random_range(0.9..=1.1),
        rng.random_range(0.9..=1.1),
        rng.random_range(0.9..=1.1),
    )
}

/// Uniform bias in [-3, 3] deg/s per axis.
pub fn draw_bias(rng: &mut impl Rng) -> Vec3 {
    Vec3::new(
        rng.random_range(-3.0..=3.0),
        rng.random_range(-3.0..=3.0),
        rng.random_range(-3.0..=3.0),
    )
}

/// Random scenario: scale ~ U(0.9, 1.1), bias ~ U(-3, 3) deg/s, gyro noise
/// 0.1 deg/s, everything else at defaults unless overridden.
pub fn draw_scenario(seed: u64, overrides: &ScenarioOverrides) -> ScenarioConfig {
    let mut rng = stream(seed, STREAM_DRAW);
    let scale = draw_scale(&mut rng);
    let bias = draw_bias(&mut rng);
    let d = ScenarioConfig::default();
    ScenarioConfig {
        true_gyro: GyroModel {
            scale: overrides.scale.unwrap_or(scale),
            bias: overrides.bias.unwrap_or(bias),
        },
        true_accel: overrides.true_accel.unwrap_or(d.true_accel),
        axis: overrides.axis.unwrap_or(d.axis),
        mount: overrides.mount.or(d.mount),
        tilt_deg: overrides.tilt_deg.unwrap_or(d.tilt_deg),
        speed: overrides.speed.unwrap_or(d.speed),
        noise_sigma_gyro: overrides.noise_sigma_gyro.unwrap_or(d.noise_sigma_gyro),
        noise_sigma_accel: overrides.noise_sigma_accel.unwrap_or(d.noise_sigma_accel),
        n_poses: overrides.n_poses.unwrap_or(d.n_poses),
        seed,
        ..d
    }
}

/// Index ranges (end exclusive) of the labelled segments within a log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRanges {
    pub bias: Range<usize>,
    pub poses: Vec<Range<usize>>,
    pub rotation: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedSession {
    pub session: CalibrationSession,
    pub ground_truth: ScenarioConfig,
    /// Whole time series including transitions.
    pub log: Vec<ImuSample>,
    pub segments: SegmentRanges,
    /// Motor angle of each static pose, degrees.
    pub pose_angles_deg: Vec<f64>,
    /// Speed the motor actually turned at, deg/s.
    pub true_speed: f64,
    pub mount: Quat,
}

impl SimulatedSession {
    /// Body-frame specific force at motor angle `phi` (radians).
    pub fn gravity_at(&self, phi: f64) -> Vec3 {
        gravity_body(self.mount, self.ground_truth.axis, phi)
    }
}

fn gravity_body(mount: Quat, axis: Vec3, phi: f64) -> Vec3 {
    let g0 = mount.conjugate().rotate_unchecked(UP);
    Quat::from_axis_angle(axis, -phi)
        .expect("axis validated")
        .rotate_unchecked(g0)
}

struct LogBuilder<'a> {
    cfg: &'a ScenarioConfig,
    mount: Quat,
    axis: Vec3,
    dt: f64,
    gyro_rot: Normal<f64>,
    gyro_static: Normal<f64>,
    accel: Normal<f64>,
    rng: ChaCha8Rng,
    log: Vec<ImuSample>,
}

impl LogBuilder<'_> {
    fn noise(dist: &Normal<f64>, rng: &mut ChaCha8Rng) -> Vec3 {
        Vec3::new(dist.sample(rng), dist.sample(rng), dist.sample(rng))
    }

    /// Appends one sample at motor angle `phi` (rad) turning at `rate` (deg/s).
    fn push(&mut self, phi: f64, rate: f64, powered: bool) -> Result<()> {
        let t = self.log.len() as f64 * self.dt;
        let f = gravity_body(self.mount, self.axis, phi);
        let accel = self.cfg.true_accel.invert(f)? + Self::noise(&self.accel, &mut self.rng);
        let true_rate = self.axis * rate;
        let dist = if powered { &self.gyro_rot } else { &self.gyro_static };
        let gyro = self.cfg.true_gyro.true_to_measured(true_rate)? + Self::noise(dist, &mut self.rng);
        self.log.push(ImuSample { t, accel, gyro });
        Ok(())
    }

    fn hold(&mut self, phi: f64, n: usize) -> Result<Range<usize>> {
        let start = self.log.len();
        for _ in 0..n {
            self.push(phi, 0.0, false)?;
        }
        Ok(start..self.log.len())
    }

    /// Smooth hand rotation from `from` to `to` (rad), zero rate at both ends.
    fn turn(&mut self, from: f64, to: f64) -> Result<()> {
        let n = (TRANSITION_SECONDS / self.dt).round().max(1.0) as usize;
        let total = n as f64 * self.dt;
        let delta = to - from;
        for k in 1..n {
            let tau = k as f64 / n as f64;
            let phi = from + delta * (tau - (2.0 * PI * tau).sin() / (2.0 * PI));
            let rate = (delta / total) * (1.0 - (2.0 * PI * tau).cos());
            self.push(phi, rate.to_degrees(), false)?;
        }
        Ok(())
    }
}

pub fn simulate_session(cfg: &ScenarioConfig) -> Result<SimulatedSession> {
    cfg.validate()?;
    let axis = cfg.axis.normalized().ok_or(Error::ZeroAxis)?;
    let mount = cfg.resolved_mount()?;
    let dt = 1.0 / cfg.sample_rate;
    let n = cfg.n_poses;
    let spacing = 2.0 * PI / n as f64;

    let offset = match cfg.pose_offset_deg {
        Some(d) => d.to_radians(),
        None => stream(cfg.seed, STREAM_POSES).random_range(0.0..spacing),
    };
    let true_speed = if cfg.speed_error > 0.0 {
        let e = cfg.speed_error;
        cfg.speed * (1.0 + stream(cfg.seed, STREAM_SPEED).random_range(-e..=e))
    } else {
        cfg.speed
    };

    let normal = |s: f64| Normal::new(0.0, s).map_err(|e| Error::invalid("noise sigma", e.to_string()));
    let mut b = LogBuilder {
        cfg,
        mount,
        axis,
        dt,
        gyro_rot: normal(cfg.noise_sigma_gyro)?,
        gyro_static: normal(cfg.static_gyro_sigma())?,
        accel: normal(cfg.noise_sigma_accel)?,
        rng: stream(cfg.seed, STREAM_NOISE),
        log: Vec::new(),
    };

    let seg = cfg.samples_per_segment;
    let bias_phi = offset - spacing / 2.0;
    let bias = b.hold(bias_phi, seg)?;
    let mut phi = bias_phi;
    let mut poses = Vec::with_capacity(n);
    let mut pose_angles_deg = Vec::with_capacity(n);
    for i in 0..n {
        let target = offset + spacing * i as f64;
        b.turn(phi, target)?;
        phi = target;
        poses.push(b.hold(phi, seg)?);
        pose_angles_deg.push(phi.to_degrees());
    }

    // spin-up, constant speed, spin-down
    let omega = true_speed.to_radians();
    let ramp = (SPIN_SECONDS / dt).round().max(1.0) as usize;
    for k in 1..=ramp {
        let tau = k as f64 / ramp as f64;
        let rate = omega * 0.5 * (1.0 - (PI * tau).cos());
        phi += rate * dt;
        b.push(phi, rate.to_degrees(), true)?;
    }
    let start = b.log.len();
    for _ in 0..cfg.rotation_samples {
        phi += omega * dt;
        b.push(phi, true_speed, true)?;
    }
    let rotation = start..b.log.len();
    for k in 1..=ramp {
        let tau = k as f64 / ramp as f64;
        let rate = omega * 0.5 * (1.0 + (PI * tau).cos());
        phi += rate * dt;
        b.push(phi, rate.to_degrees(), true)?;
    }
    b.hold(phi, seg / 2)?;

    let log = b.log;
    let session = CalibrationSession {
        bias_segment: log[bias.clone()].to_vec(),
        static_poses: poses.iter().map(|r| log[r.clone()].to_vec()).collect(),
        rotation_segment: log[rotation.clone()].to_vec(),
        commanded_speed: cfg.speed,
    };
    Ok(SimulatedSession {
        session,
        ground_truth: cfg.clone(),
        log,
        segments: SegmentRanges { bias, poses, rotation },
        pose_angles_deg,
        true_speed,
        mount,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RedrawPolicy {
    /// New scale and bias every run.
    Models,
    /// Models held at the base config; only noise and pose offsets change.
    NoiseOnly,
}

/// Five-number summary plus mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distribution1 {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Distribution1 {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        Some(Self {
            count: v.len(),
            mean,
            std: var.sqrt(),
            min: v[0],
            q1: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q3: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
        })
    }

    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub true_scale: Vec3,
    pub estimated_scale: Option<Vec3>,
    pub estimated_bias: Option<Vec3>,
    /// `estimated / true - 1` per axis.
    pub relative_error: Option<Vec3>,
    pub dot_before: Vec<f64>,
    pub dot_after: Vec<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub runs: usize,
    pub failures: usize,
    pub policy: RedrawPolicy,
    pub rng: String,
    /// Per axis (x, y, z): distribution of the estimated scale factor.
    pub estimated_scale: Vec<Distribution1>,
    /// Per axis: distribution of the signed relative scale error.
    pub relative_error: Vec<Distribution1>,
    /// Per axis: median absolute relative scale error.
    pub median_abs_error: Vec3,
    /// Per axis: mean squared relative scale error.
    pub mse: Vec3,
    /// Pooled per-pose dot products across runs.
    pub dot_before: Option<Distribution1>,
    pub dot_after: Option<Distribution1>,
    #[serde(skip)]
    pub records: Vec<RunRecord>,
}

/// Scenario for one Monte-Carlo run.
pub fn run_config(base: &ScenarioConfig, run: usize, policy: RedrawPolicy) -> ScenarioConfig {
    let seed = derive_seed(base.seed, run as u64);
    let mut cfg = base.clone();
    cfg.seed = seed;
    if policy == RedrawPolicy::Models {
        let mut rng = stream(seed, STREAM_DRAW);
        cfg.true_gyro.scale = draw_scale(&mut rng);
        cfg.true_gyro.bias = draw_bias(&mut rng);
    }
    cfg
}

fn run_once(run: usize, cfg: &ScenarioConfig) -> RunRecord {
    let mut rec = RunRecord {
        run,
        seed: cfg.seed,
        true_scale: cfg.true_gyro.scale,
        estimated_scale: None,
        estimated_bias: None,
        relative_error: None,
        dot_before: Vec::new(),
        dot_after: Vec::new(),
        failure: None,
    };
    match simulate_session(cfg).and_then(|sim| calibrate_detailed(&sim.session, None)) {
        Ok(cal) => {
            let k = cal.result.gyro.scale;
            rec.estimated_scale = Some(k);
            rec.estimated_bias = Some(cal.result.gyro.bias);
            rec.relative_error = Some(k.hadamard_div(cfg.true_gyro.scale) - Vec3::ONE);
            rec.dot_before = cal.dot_before();
            rec.dot_after = cal.dot_after();
        }
        Err(e) => rec.failure = Some(e.to_string()),
    }
    rec
}

/// Runs `runs` seeded scenarios through simulation and calibration. Failed
/// runs are counted, never fatal.
pub fn monte_carlo(base: &ScenarioConfig, runs: usize, policy: RedrawPolicy) -> Result<MonteCarloSummary> {
    if runs == 0 {
        return Err(Error::invalid("runs", "must be at least 1"));
    }
    base.validate()?;
    let records: Vec<RunRecord> = (0..runs).map(|r| run_once(r, &run_config(base, r, policy))).collect();
    Ok(summarize(records, policy))
}

pub fn summarize(records: Vec<RunRecord>, policy: RedrawPolicy) -> MonteCarloSummary {
    let ok: Vec<&RunRecord> = records.iter().filter(|r| r.failure.is_none()).collect();
    let axis_values =
        |f: &dyn Fn(&RunRecord) -> Vec3, axis: usize| -> Vec<f64> { ok.iter().map(|r| f(r)[axis]).collect() };
    let est = |r: &RunRecord| r.estimated_scale.unwrap_or_default();
    let err = |r: &RunRecord| r.relative_error.unwrap_or_default();

    let mut estimated_scale = Vec::new();
    let mut relative_error = Vec::new();
    let mut median_abs = [f64::NAN; 3];
    let mut mse = [f64::NAN; 3];
    for axis in 0..3 {
        let e = axis_values(&err, axis);
        if let Some(d) = Distribution1::from_values(&axis_values(&est, axis)) {
            estimated_scale.push(d);
        }
        if let Some(d) = Distribution1::from_values(&e) {
            relative_error.push(d);
            let abs: Vec<f64> = e.iter().map(|x| x.abs()).collect();
            median_abs[axis] = crate::math::median(&abs);
            mse[axis] = e.iter().map(|x| x * x).sum::<f64>() / e.len() as f64;
        }
    }
    let pooled =
        |f: &dyn Fn(&RunRecord) -> &Vec<f64>| -> Vec<f64> { ok.iter().flat_map(|r| f(r).iter().copied()).collect() };
    MonteCarloSummary {
        runs: records.len(),
        failures: records.len() - ok.len(),
        policy,
        rng: RNG_NAME.to_string(),
        estimated_scale,
        relative_error,
        median_abs_error: median_abs.into(),
        mse: mse.into(),
        dot_before: Distribution1::from_values(&pooled(&|r| &r.dot_before)),
        dot_after: Distribution1::from_values(&pooled(&|r| &r.dot_after)),
        records,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub sigma: f64,
    pub speed: f64,
    pub runs: usize,
    pub failures: usize,
    /// Per-axis std of the estimated scale factor.
    pub std: Vec3,
    pub variance: Vec3,
    pub mse: Vec3,
    /// Estimated scale per successful run, for density plots.
    #[serde(skip)]
    pub estimates: Vec<Vec3>,
}

/// Noise-level by speed table with models held fixed (fresh noise per run).
pub fn noise_grid(base: &ScenarioConfig, sigmas: &[f64], speeds: &[f64], runs: usize) -> Result<Vec<GridCell>> {
    let mut cells = Vec::with_capacity(sigmas.len() * speeds.len());
    for &sigma in sigmas {
        for &speed in speeds {
            let cfg = ScenarioConfig {
                noise_sigma_gyro: sigma,
                speed,
                ..base.clone()
            };
            let s = monte_carlo(&cfg, runs, RedrawPolicy::NoiseOnly)?;
            let std = if s.estimated_scale.len() == 3 {
                Vec3::new(
                    s.estimated_scale[0].std,
                    s.estimated_scale[1].std,
                    s.estimated_scale[2].std,
                )
            } else {
                Vec3::splat(f64::NAN)
            };
            cells.push(GridCell {
                sigma,
                speed,
                runs,
                failures: s.failures,
                std,
                variance: std.hadamard(std),
                mse: s.mse,
                estimates: s.records.iter().filter_map(|r| r.estimated_scale).collect(),
            });
        }
    }
    Ok(cells)
}
