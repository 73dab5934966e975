//! Scale factor across a series of speed points.
//!
//! Each speed point is calibrated on its own; the per-axis scale factors are
//! then fitted against speed with an ordinary least-squares line.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{calibrate_detailed, Calibration, CalibrationResult};
use crate::math::Vec3;
use crate::model::GyroModel;
use crate::session_io::{load_session, SessionManifest};
use crate::simulator::{derive_seed, draw_scale, simulate_session, ScenarioConfig};

/// `|scale ⊙ g_mean|`, with the bias already removed from `g_mean`.
pub fn reconstruct_speed(model: &GyroModel, g_mean: Vec3) -> f64 {
    model.scale.hadamard(g_mean).norm()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepSource {
    /// One simulated session per speed from a shared installation.
    Simulated {
        base: ScenarioConfig,
        /// Draw a fresh U(0.9, 1.1) scale at every speed point.
        #[serde(default)]
        redraw_scale: bool,
    },
    /// One manifest per speed, in the order of `speeds`.
    Recorded { manifests: Vec<PathBuf> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Strictly increasing, deg/s.
    pub speeds: Vec<f64>,
    pub source: SweepSource,
    /// Calibrations averaged at each point slower than `repeat_below`.
    #[serde(default = "default_repeat")]
    pub repeat: usize,
    #[serde(default = "default_repeat_below")]
    pub repeat_below: f64,
}

fn default_repeat() -> usize {
    5
}

fn default_repeat_below() -> f64 {
    20.0
}

impl SweepConfig {
    /// `start, start + step, ...` up to and including `end`.
    pub fn speed_range(start: f64, end: f64, step: f64) -> Vec<f64> {
        let n = ((end - start) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| start + step * i as f64).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.speeds.is_empty() {
            return Err(Error::invalid("speeds", "empty"));
        }
        if self.speeds.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::invalid("speeds", "every speed must be positive"));
        }
        if self.speeds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("speeds", "must be strictly increasing"));
        }
        if self.repeat == 0 {
            return Err(Error::invalid("repeat", "must be at least 1"));
        }
        match &self.source {
            SweepSource::Simulated { base, .. } => base.validate(),
            SweepSource::Recorded { manifests } if manifests.len() != self.speeds.len() => Err(Error::invalid(
                "source.manifests",
                format!("{} manifests for {} speeds", manifests.len(), self.speeds.len()),
            )),
            SweepSource::Recorded { .. } => Ok(()),
        }
    }

    fn repeats_at(&self, speed: f64) -> usize {
        if speed < self.repeat_below {
            self.repeat
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub speed: f64,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    /// First successful calibration at this point.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<CalibrationResult>,
    /// Scale averaged over successful repeats.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<Vec3>,
    /// Every successful repeat's scale.
    pub repeat_scales: Vec<Vec3>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_mean: Option<Vec3>,
    /// `|g_mean|` before calibration, averaged over repeats.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstructed_pre: Option<f64>,
    /// `|scale ⊙ g_mean|` of each repeat's own result, averaged.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstructed_post: Option<f64>,
    /// Simulated sweeps only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_scale: Option<Vec3>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisFit {
    pub slope: f64,
    pub intercept: f64,
    pub max_deviation: f64,
    /// 1 when the data are constant and exactly fitted.
    pub r_squared: f64,
    pub perfect_fit: bool,
}

impl AxisFit {
    pub fn at(&self, speed: f64) -> f64 {
        self.intercept + self.slope * speed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Linearity {
    pub x: AxisFit,
    pub y: AxisFit,
    pub z: AxisFit,
}

impl Linearity {
    pub fn axes(&self) -> [AxisFit; 3] {
        [self.x, self.y, self.z]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    pub failures: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linearity: Option<Linearity>,
}

fn fit_axis(points: &[(f64, f64)]) -> AxisFit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let residual = |p: &(f64, f64)| p.1 - (intercept + slope * p.0);
    let ss_res: f64 = points.iter().map(|p| residual(p).powi(2)).sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let max_deviation = points.iter().map(|p| residual(p).abs()).fold(0.0, f64::max);
    let tiny = 1e-12 * my.abs().max(1.0);
    let perfect_fit = max_deviation <= tiny;
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if perfect_fit {
        1.0
    } else {
        0.0
    };
    AxisFit {
        slope,
        intercept,
        max_deviation,
        r_squared,
        perfect_fit,
    }
}

/// Per-axis OLS line through `(speed, scale)` pairs. Order of the input does not matter.
pub fn fit_lines(pairs: &[(f64, Vec3)]) -> Result<Linearity> {
    if pairs.len() < 2 {
        return Err(Error::TooFewPoints(pairs.len()));
    }
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.x.total_cmp(&b.1.x))
            .then(a.1.y.total_cmp(&b.1.y))
            .then(a.1.z.total_cmp(&b.1.z))
    });
    let axis = |i: usize| -> Vec<(f64, f64)> { sorted.iter().map(|(s, k)| (*s, k[i])).collect() };
    Ok(Linearity {
        x: fit_axis(&axis(0)),
        y: fit_axis(&axis(1)),
        z: fit_axis(&axis(2)),
    })
}

/// Linearity of the successfully calibrated points of a sweep.
pub fn assess_linearity(report: &SweepReport) -> Result<Linearity> {
    let pairs: Vec<(f64, Vec3)> = report
        .points
        .iter()
        .filter_map(|p| p.scale.map(|k| (p.speed, k)))
        .collect();
    fit_lines(&pairs)
}

fn point_from(speed: f64, cals: Vec<Calibration>, failure: Option<String>, true_scale: Option<Vec3>) -> SweepPoint {
    let Some(first) = cals.first() else {
        return SweepPoint {
            speed,
            ok: false,
            failure,
            result: None,
            scale: None,
            repeat_scales: Vec::new(),
            g_mean: None,
            reconstructed_pre: None,
            reconstructed_post: None,
            true_scale,
        };
    };
    let repeat_scales: Vec<Vec3> = cals.iter().map(|c| c.result.gyro.scale).collect();
    let scale = repeat_scales.iter().fold(Vec3::ZERO, |a, &k| a + k) / repeat_scales.len() as f64;
    let n = cals.len() as f64;
    let pre = cals.iter().map(|c| c.g_mean.norm()).sum::<f64>() / n;
    let post = cals
        .iter()
        .map(|c| reconstruct_speed(&c.result.gyro, c.g_mean))
        .sum::<f64>()
        / n;
    SweepPoint {
        speed,
        ok: true,
        failure: None,
        result: Some(first.result),
        scale: Some(scale),
        repeat_scales,
        g_mean: Some(first.g_mean),
        reconstructed_pre: Some(pre),
        reconstructed_post: Some(post),
        true_scale,
    }
}

fn simulated_point(cfg: &SweepConfig, base: &ScenarioConfig, redraw: bool, index: usize) -> Result<SweepPoint> {
    let speed = cfg.speeds[index];
    let point_seed = derive_seed(base.seed, index as u64);
    let mut scenario = base.clone();
    // one installation for the whole sweep
    scenario.mount = Some(base.resolved_mount()?);
    scenario.speed = speed;
    if redraw {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(point_seed);
        scenario.true_gyro.scale = draw_scale(&mut rng);
    }
    let mut cals = Vec::new();
    let mut failure = None;
    for r in 0..cfg.repeats_at(speed) {
        scenario.seed = derive_seed(point_seed, r as u64 + 1);
        match simulate_session(&scenario).and_then(|sim| calibrate_detailed(&sim.session, None)) {
            Ok(c) => cals.push(c),
            Err(e) => failure = Some(e.to_string()),
        }
    }
    Ok(point_from(speed, cals, failure, Some(scenario.true_gyro.scale)))
}

/// Calibrates every configured speed point. Point failures are recorded and
/// the sweep carries on; manifest paths are relative to `base_dir`.
pub fn run_sweep(cfg: &SweepConfig, base_dir: &std::path::Path) -> Result<SweepReport> {
    cfg.validate()?;
    let mut points = Vec::with_capacity(cfg.speeds.len());
    for (i, &speed) in cfg.speeds.iter().enumerate() {
        let point = match &cfg.source {
            SweepSource::Simulated { base, redraw_scale } => simulated_point(cfg, base, *redraw_scale, i)?,
            SweepSource::Recorded { manifests } => {
                let path = base_dir.join(&manifests[i]);
                let dir = path.parent().map(|p| p.to_path_buf()).unwrap_or_default();
                let outcome = SessionManifest::read(&path).and_then(|m| {
                    if (m.speed_dps - speed).abs() > 1e-9 * speed {
                        return Err(Error::invalid(
                            "speed_dps",
                            format!("{} says {} deg/s, sweep expects {speed}", path.display(), m.speed_dps),
                        ));
                    }
                    let loaded = load_session(&m, &dir)?;
                    calibrate_detailed(&loaded.session, loaded.accel_model.as_ref())
                });
                match outcome {
                    Ok(c) => point_from(speed, vec![c], None, None),
                    Err(e) => point_from(speed, Vec::new(), Some(e.to_string()), None),
                }
            }
        };
        points.push(point);
    }
    let failures = points.iter().filter(|p| !p.ok).count();
    let mut report = SweepReport {
        points,
        failures,
        linearity: None,
    };
    report.linearity = assess_linearity(&report).ok();
    Ok(report)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// Plot data: `speed,commanded,reconstructed_pre,reconstructed_post`, one row per point.
/// Failed points keep their row with empty fields.
pub fn speed_table_csv(report: &SweepReport) -> String {
    let mut out = String::from("speed,commanded,reconstructed_pre,reconstructed_post\n");
    for p in &report.points {
        out.push_str(&format!(
            "{:?},{:?},{},{}\n",
            p.speed,
            p.speed,
            opt(p.reconstructed_pre),
            opt(p.reconstructed_post)
        ));
    }
    out
}

/// Plot data: `speed,kx,ky,kz,fit_x,fit_y,fit_z`, one row per point.
pub fn scale_table_csv(report: &SweepReport) -> String {
    let mut out = String::from("speed,kx,ky,kz,fit_x,fit_y,fit_z\n");
    for p in &report.points {
        let k = p.scale.map(|k| k.to_array());
        let fit = report.linearity.map(|l| l.axes().map(|f| f.at(p.speed)));
        let cols: Vec<String> = (0..3)
            .map(|i| opt(k.map(|k| k[i])))
            .chain((0..3).map(|i| opt(fit.map(|f| f[i]))))
            .collect();
        out.push_str(&format!("{:?},{}\n", p.speed, cols.join(",")));
    }
    out
}
