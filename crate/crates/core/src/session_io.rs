//! IMU log files, session manifests and automatic segmentation.
//!
//! Log format: one sample per line, `t,ax,ay,az,gx,gy,gz` in s, g and deg/s.
//! A header line is optional; lines starting with `#` are comments. Values
//! are written in shortest round-trip form, so a write/read cycle is exact.

use std::fmt::Write as _;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{estimate_gyro_bias, CalibrationSession, MIN_POSES, STATIC_GATE_DPS};
use crate::math::{median, Vec3};
use crate::model::{AccelModel, ImuSample};
use crate::simulator::SegmentRanges;

pub const CSV_HEADER: &str = "t,ax,ay,az,gx,gy,gz";

/// Seconds trimmed from both ends of every detected segment.
pub const GUARD_SECONDS: f64 = 0.5;
/// Centered window for the per-sample motion statistics.
pub const WINDOW_SECONDS: f64 = 0.2;
/// Minimum length of a constant-speed run.
pub const MIN_ROTATION_SECONDS: f64 = 2.0;
/// Relative band around the run median that counts as constant speed.
pub const SPEED_BAND: f64 = 0.10;
/// A steady reading this far from zero (deg/s) cannot be a rest bias.
pub const MAX_REST_OFFSET_DPS: f64 = 10.0;

/// Multipliers applied at ingest, e.g. 0.001 for mg or mdps logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitScale {
    pub accel: f64,
    pub gyro: f64,
}

impl Default for UnitScale {
    fn default() -> Self {
        Self { accel: 1.0, gyro: 1.0 }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn parse_csv(path: impl AsRef<Path>) -> Result<Vec<ImuSample>> {
    parse_csv_scaled(path, UnitScale::default())
}

pub fn parse_csv_scaled(path: impl AsRef<Path>, units: UnitScale) -> Result<Vec<ImuSample>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_csv_str(&text, units)
}

/// Parses log text. Line numbers in errors are 1-based physical lines.
pub fn parse_csv_str(text: &str, units: UnitScale) -> Result<Vec<ImuSample>> {
    let mut out: Vec<ImuSample> = Vec::new();
    let mut seen_data = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if !seen_data && fields[0].parse::<f64>().is_err() {
            // header
            seen_data = true;
            continue;
        }
        seen_data = true;
        if fields.len() != 7 {
            return Err(Error::MalformedRow {
                line,
                reason: format!("expected 7 columns, found {}", fields.len()),
            });
        }
        let mut v = [0.0f64; 7];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f.parse::<f64>().map_err(|_| Error::MalformedRow {
                line,
                reason: format!("not a number: {f:?}"),
            })?;
            if !slot.is_finite() {
                return Err(Error::MalformedRow {
                    line,
                    reason: format!("not finite: {f:?}"),
                });
            }
        }
        if let Some(prev) = out.last() {
            if v[0] <= prev.t {
                return Err(Error::NonMonotonicTime { line });
            }
        }
        out.push(ImuSample {
            t: v[0],
            accel: Vec3::new(v[1], v[2], v[3]) * units.accel,
            gyro: Vec3::new(v[4], v[5], v[6]) * units.gyro,
        });
    }
    Ok(out)
}

/// Log text with an optional leading `# ...` comment line.
pub fn format_csv(samples: &[ImuSample], comment: Option<&str>) -> String {
    let mut s = String::with_capacity(samples.len() * 100 + 64);
    if let Some(c) = comment {
        for l in c.lines() {
            let _ = writeln!(s, "# {l}");
        }
    }
    s.push_str(CSV_HEADER);
    s.push('\n');
    for x in samples {
        let _ = writeln!(
            s,
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            x.t, x.accel.x, x.accel.y, x.accel.z, x.gyro.x, x.gyro.y, x.gyro.z
        );
    }
    s
}

pub fn write_csv(path: impl AsRef<Path>, samples: &[ImuSample], comment: Option<&str>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_csv(samples, comment)).map_err(io_err(path))
}

/// Sample-index range within one of the manifest's files; `end` is exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentRef {
    pub file: usize,
    pub start: usize,
    pub end: usize,
}

impl SegmentRef {
    pub fn new(file: usize, r: Range<usize>) -> Self {
        Self {
            file,
            start: r.start,
            end: r.end,
        }
    }

    fn overlaps(&self, other: &SegmentRef) -> bool {
        self.file == other.file && self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionManifest {
    /// Log files, relative to the manifest's directory.
    pub files: Vec<PathBuf>,
    pub bias: SegmentRef,
    pub poses: Vec<SegmentRef>,
    pub rotation: SegmentRef,
    pub speed_dps: f64,
    /// Optional pre-fitted accelerometer model (JSON), relative to the manifest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accel_model: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_scale: Option<UnitScale>,
}

impl SessionManifest {
    pub fn from_ranges(file: impl Into<PathBuf>, ranges: &SegmentRanges, speed_dps: f64) -> Self {
        Self {
            files: vec![file.into()],
            bias: SegmentRef::new(0, ranges.bias.clone()),
            poses: ranges.poses.iter().map(|r| SegmentRef::new(0, r.clone())).collect(),
            rotation: SegmentRef::new(0, ranges.rotation.clone()),
            speed_dps,
            accel_model: None,
            unit_scale: None,
        }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(io_err(path))
    }

    fn segments(&self) -> impl Iterator<Item = (&'static str, &SegmentRef)> {
        std::iter::once(("bias", &self.bias))
            .chain(self.poses.iter().map(|p| ("poses", p)))
            .chain(std::iter::once(("rotation", &self.rotation)))
    }

    /// Structural checks; `file_lengths[i]` is the sample count of file `i`.
    pub fn validate(&self, file_lengths: &[usize]) -> Result<()> {
        if !(self.speed_dps.is_finite() && self.speed_dps > 0.0) {
            return Err(Error::invalid(
                "speed_dps",
                format!("must be positive, got {}", self.speed_dps),
            ));
        }
        if self.poses.len() < MIN_POSES {
            return Err(Error::invalid(
                "poses",
                format!("need at least {MIN_POSES} static poses, got {}", self.poses.len()),
            ));
        }
        let segs: Vec<_> = self.segments().collect();
        for (name, s) in &segs {
            let len = *file_lengths
                .get(s.file)
                .ok_or_else(|| Error::invalid(*name, format!("file index {} out of range", s.file)))?;
            if s.start >= s.end || s.end > len {
                return Err(Error::invalid(
                    *name,
                    format!("range {}..{} invalid for file with {len} samples", s.start, s.end),
                ));
            }
        }
        for (i, (na, a)) in segs.iter().enumerate() {
            for (nb, b) in &segs[i + 1..] {
                if a.overlaps(b) {
                    return Err(Error::invalid(
                        *nb,
                        format!(
                            "range {}..{} overlaps {na} range {}..{}",
                            b.start, b.end, a.start, a.end
                        ),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// A session materialized from files.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSession {
    pub session: CalibrationSession,
    pub accel_model: Option<AccelModel>,
}

/// Reads every file of `manifest` (paths relative to `base_dir`) and builds
/// the session. Bias and pose segments must pass the staticness gate.
pub fn load_session(manifest: &SessionManifest, base_dir: &Path) -> Result<LoadedSession> {
    let units = manifest.unit_scale.unwrap_or_default();
    let logs: Vec<Vec<ImuSample>> = manifest
        .files
        .iter()
        .map(|f| parse_csv_scaled(base_dir.join(f), units))
        .collect::<Result<_>>()?;
    let accel_model = match &manifest.accel_model {
        Some(p) => {
            let path = base_dir.join(p);
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let m: AccelModel = serde_json::from_str(&text).map_err(|source| Error::Json {
                context: path.display().to_string(),
                source,
            })?;
            m.validate()?;
            Some(m)
        }
        None => None,
    };
    Ok(LoadedSession {
        session: session_from_logs(manifest, &logs)?,
        accel_model,
    })
}

/// Builds a session from already parsed logs (indexed like `manifest.files`).
pub fn session_from_logs(manifest: &SessionManifest, logs: &[Vec<ImuSample>]) -> Result<CalibrationSession> {
    let lengths: Vec<usize> = logs.iter().map(Vec::len).collect();
    manifest.validate(&lengths)?;
    let take = |s: &SegmentRef| logs[s.file][s.start..s.end].to_vec();
    let session = CalibrationSession {
        bias_segment: take(&manifest.bias),
        static_poses: manifest.poses.iter().map(take).collect(),
        rotation_segment: take(&manifest.rotation),
        commanded_speed: manifest.speed_dps,
    };
    estimate_gyro_bias(&session.bias_segment)?;
    for pose in &session.static_poses {
        estimate_gyro_bias(pose)?;
    }
    Ok(session)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionLabel {
    Static,
    Rotating,
    Moving,
}

/// Segments found by [`auto_segment`], as index ranges into the log.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub bias: Range<usize>,
    pub poses: Vec<Range<usize>>,
    pub rotation: Range<usize>,
    /// Gyro reading at rest used as the zero-rate reference.
    pub rest_reference: Vec3,
}

impl Segmentation {
    pub fn ranges(&self) -> SegmentRanges {
        SegmentRanges {
            bias: self.bias.clone(),
            poses: self.poses.clone(),
            rotation: self.rotation.clone(),
        }
    }

    pub fn into_manifest(self, file: impl Into<PathBuf>, speed_dps: f64) -> SessionManifest {
        SessionManifest::from_ranges(file, &self.ranges(), speed_dps)
    }
}

fn sample_period(samples: &[ImuSample]) -> f64 {
    let dts: Vec<f64> = samples.windows(2).map(|w| w[1].t - w[0].t).collect();
    if dts.is_empty() {
        return 1.0;
    }
    median(&dts)
}

/// Centered moving mean and max-axis standard deviation of the gyro.
fn window_stats(samples: &[ImuSample], half: usize) -> Vec<(Vec3, f64)> {
    let n = samples.len();
    let mut sum = vec![Vec3::ZERO; n + 1];
    let mut sq = vec![Vec3::ZERO; n + 1];
    for (i, s) in samples.iter().enumerate() {
        sum[i + 1] = sum[i] + s.gyro;
        sq[i + 1] = sq[i] + s.gyro.hadamard(s.gyro);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            let k = (hi - lo) as f64;
            let mean = (sum[hi] - sum[lo]) / k;
            let var = (sq[hi] - sq[lo]) / k - mean.hadamard(mean);
            (mean, var.map(|v| v.max(0.0).sqrt()).max_abs())
        })
        .collect()
}

fn runs<T: PartialEq + Copy>(labels: &[T], target: T) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &l) in labels.iter().enumerate() {
        match (l == target, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(s..i);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(s..labels.len());
    }
    out
}

/// Per-sample labels given the zero-rate reference.
pub fn classify(samples: &[ImuSample], rest_reference: Vec3) -> Vec<MotionLabel> {
    let dt = sample_period(samples);
    let half = ((WINDOW_SECONDS / dt) / 2.0).round() as usize;
    let stats = window_stats(samples, half);
    let min_rot = (MIN_ROTATION_SECONDS / dt).round() as usize;

    let mut labels: Vec<MotionLabel> = stats
        .iter()
        .map(|(mean, std)| {
            if *std < STATIC_GATE_DPS && (*mean - rest_reference).norm() < STATIC_GATE_DPS {
                MotionLabel::Static
            } else {
                MotionLabel::Moving
            }
        })
        .collect();

    for run in runs(&labels, MotionLabel::Moving) {
        let mags: Vec<f64> = run.clone().map(|i| (stats[i].0 - rest_reference).norm()).collect();
        let med = median(&mags);
        let in_band: Vec<bool> = mags.iter().map(|m| (m - med).abs() <= SPEED_BAND * med).collect();
        for r in runs(&in_band, true) {
            if r.len() >= min_rot.max(1) {
                for i in r {
                    labels[run.start + i] = MotionLabel::Rotating;
                }
            }
        }
    }
    labels
}

fn find_rest_reference(samples: &[ImuSample], half: usize) -> Option<Vec3> {
    let stats = window_stats(samples, half);
    let steady: Vec<bool> = stats.iter().map(|(_, s)| *s < STATIC_GATE_DPS).collect();
    runs(&steady, true).into_iter().find_map(|r| {
        let mean = r.clone().fold(Vec3::ZERO, |acc, i| acc + samples[i].gyro) / r.len() as f64;
        (mean.norm() < MAX_REST_OFFSET_DPS).then_some(mean)
    })
}

fn shrink(r: Range<usize>, guard: usize) -> Option<Range<usize>> {
    let start = r.start + guard;
    let end = r.end.checked_sub(guard)?;
    (end > start).then_some(start..end)
}

/// Proposes bias, pose and rotation segments for a recorded session.
///
/// The first steady span whose mean is near zero defines the rest reference.
/// Static samples have a windowed gyro within 1 deg/s of it; the longest run
/// whose rate magnitude stays within 10% of its median for at least 2 s is
/// the rotation. Of the static spans before it, the first becomes the bias
/// segment and the rest become poses. Every boundary is pulled in by 0.5 s.
pub fn auto_segment(samples: &[ImuSample]) -> Result<Segmentation> {
    if samples.len() < 2 || samples[samples.len() - 1].t - samples[0].t < 1.0 {
        return Err(Error::invalid("log", "need at least 1 s of data"));
    }
    let dt = sample_period(samples);
    let half = ((WINDOW_SECONDS / dt) / 2.0).round() as usize;
    let guard = (GUARD_SECONDS / dt).round() as usize;

    let rest_reference = find_rest_reference(samples, half).ok_or(Error::TooFewStaticSegments { found: 0 })?;
    let labels = classify(samples, rest_reference);

    let rotation = runs(&labels, MotionLabel::Rotating)
        .into_iter()
        .filter_map(|r| shrink(r, guard))
        .max_by_key(|r| r.len())
        .ok_or(Error::NoRotationFound)?;

    let statics: Vec<Range<usize>> = runs(&labels, MotionLabel::Static)
        .into_iter()
        .filter_map(|r| shrink(r, guard))
        .filter(|r| r.len() >= guard.max(1) && r.end <= rotation.start)
        .collect();
    if statics.len() < MIN_POSES + 1 {
        return Err(Error::TooFewStaticSegments { found: statics.len() });
    }
    let mut it = statics.into_iter();
    let bias = it.next().expect("checked length");
    Ok(Segmentation {
        bias,
        poses: it.collect(),
        rotation,
        rest_reference,
    })
}
