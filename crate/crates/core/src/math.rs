//! Three-vectors, unit quaternions and per-axis series statistics.
//!
//! Angles are radians here; everything user-facing is in degrees.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cartesian 3-vector. Serialized as `[x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const ONE: Vec3 = Vec3::new(1.0, 1.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn splat(v: f64) -> Self {
        Self::new(v, v, v)
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Componentwise product.
    pub fn hadamard(self, other: Vec3) -> Vec3 {
        Vec3::new(self.x * other.x, self.y * other.y, self.z * other.z)
    }

    /// Componentwise quotient.
    pub fn hadamard_div(self, other: Vec3) -> Vec3 {
        Vec3::new(self.x / other.x, self.y / other.y, self.z / other.z)
    }

    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n >= 1e-12 && n.is_finite()).then(|| self / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Vec3 {
        Vec3::new(f(self.x), f(self.y), f(self.z))
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    /// Unsigned angle to `other` in radians, or `None` when either vector is zero.
    pub fn angle_to(self, other: Vec3) -> Option<f64> {
        let a = self.normalized()?;
        let b = other.normalized()?;
        // atan2 keeps precision near 0 and pi where acos does not
        Some(a.cross(b).norm().atan2(a.dot(b)))
    }
}

/// Dot product of two vectors.
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a.dot(b)
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Unit quaternion `w + xi + yj + zk`, serialized as `[w, x, y, z]`.
///
/// Constructors normalize and pick the representative with `w >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

const UNIT_TOLERANCE: f64 = 1e-9;

impl Quat {
    pub const IDENTITY: Quat = Quat {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Normalizes `(w, x, y, z)`; fails on a zero or non-finite quaternion.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Quat> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n < 1e-12 {
            return Err(Error::NonUnitQuaternion { norm: n });
        }
        Ok(Quat { w, x, y, z }.scaled(1.0 / n).canonical())
    }

    /// Rotation by `angle` radians about `axis` (right-hand rule).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Quat> {
        let u = axis.normalized().ok_or(Error::ZeroAxis)?;
        let (s, c) = (0.5 * angle).sin_cos();
        Ok(Quat {
            w: c,
            x: u.x * s,
            y: u.y * s,
            z: u.z * s,
        }
        .canonical())
    }

    /// Shortest-arc rotation taking the direction of `from` onto the direction of `to`.
    pub fn from_two_vectors(from: Vec3, to: Vec3) -> Result<Quat> {
        let a = from.normalized().ok_or(Error::ZeroAxis)?;
        let b = to.normalized().ok_or(Error::ZeroAxis)?;
        let c = a.dot(b);
        if c < -1.0 + 1e-12 {
            // antiparallel: half turn about any axis perpendicular to `a`
            let helper = if a.x.abs() < 0.9 {
                Vec3::new(1.0, 0.0, 0.0)
            } else {
                Vec3::new(0.0, 1.0, 0.0)
            };
            return Quat::from_axis_angle(a.cross(helper), std::f64::consts::PI);
        }
        let v = a.cross(b);
        Quat::new(1.0 + c, v.x, v.y, v.z)
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn conjugate(self) -> Quat {
        Quat {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Hamilton product `self * rhs`.
    pub fn mul(self, r: Quat) -> Quat {
        let q = self;
        Quat {
            w: q.w * r.w - q.x * r.x - q.y * r.y - q.z * r.z,
            x: q.w * r.x + q.x * r.w + q.y * r.z - q.z * r.y,
            y: q.w * r.y - q.x * r.z + q.y * r.w + q.z * r.x,
            z: q.w * r.z + q.x * r.y - q.y * r.x + q.z * r.w,
        }
    }

    /// `q v q^-1`. Fails if `self` is not unit within 1e-9.
    pub fn rotate(self, v: Vec3) -> Result<Vec3> {
        let n = self.norm();
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::NonUnitQuaternion { norm: n });
        }
        Ok(self.rotate_unchecked(v))
    }

    pub(crate) fn rotate_unchecked(self, v: Vec3) -> Vec3 {
        // v + 2 r x (r x v + w v), r = vector part
        let r = Vec3::new(self.x, self.y, self.z);
        let t = r.cross(v) + v * self.w;
        v + 2.0 * r.cross(t)
    }

    /// Row-major 3x3 rotation matrix.
    pub fn to_matrix(self) -> [[f64; 3]; 3] {
        let Quat { w, x, y, z } = self;
        [
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ]
    }

    fn scaled(self, s: f64) -> Quat {
        Quat {
            w: self.w * s,
            x: self.x * s,
            y: self.y * s,
            z: self.z * s,
        }
    }

    fn canonical(self) -> Quat {
        if self.w < 0.0 {
            self.scaled(-1.0)
        } else {
            self
        }
    }
}

pub fn quat_from_axis_angle(axis: Vec3, angle: f64) -> Result<Quat> {
    Quat::from_axis_angle(axis, angle)
}

pub fn quat_rotate(q: Quat, v: Vec3) -> Result<Vec3> {
    q.rotate(v)
}

impl TryFrom<[f64; 4]> for Quat {
    type Error = Error;
    fn try_from(a: [f64; 4]) -> Result<Quat> {
        Quat::new(a[0], a[1], a[2], a[3])
    }
}

impl From<Quat> for [f64; 4] {
    fn from(q: Quat) -> Self {
        [q.w, q.x, q.y, q.z]
    }
}

/// Per-axis mean and population variance of a vector series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub mean: Vec3,
    pub variance: Vec3,
    pub count: usize,
}

impl SeriesStats {
    pub fn std(&self) -> Vec3 {
        self.variance.map(f64::sqrt)
    }
}

pub fn series_stats<I>(samples: I) -> Result<SeriesStats>
where
    I: IntoIterator<Item = Vec3>,
    I::IntoIter: Clone,
{
    let iter = samples.into_iter();
    let mut count = 0usize;
    let mut sum = Vec3::ZERO;
    for v in iter.clone() {
        sum += v;
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptySeries);
    }
    let rough = sum / count as f64;
    // second pass: corrected mean and centered squares
    let mut shift = Vec3::ZERO;
    let mut sq = Vec3::ZERO;
    for v in iter {
        let d = v - rough;
        shift += d;
        sq += d.hadamard(d);
    }
    let shift = shift / count as f64;
    let mean = rough + shift;
    let sq = sq - shift.hadamard(shift) * count as f64;
    Ok(SeriesStats {
        mean,
        variance: (sq / count as f64).map(|v| v.max(0.0)),
        count,
    })
}

/// Per-axis mean after dropping `trim` of the samples from each tail
/// (`trim = 0.01` drops the lowest and highest 1% on every axis).
pub fn trimmed_mean(samples: &[Vec3], trim: f64) -> Result<Vec3> {
    if samples.is_empty() {
        return Err(Error::EmptySeries);
    }
    let n = samples.len();
    let cut = ((n as f64) * trim).floor() as usize;
    let cut = cut.min((n - 1) / 2);
    let mut out = [0.0; 3];
    let mut col = Vec::with_capacity(n);
    for (axis, slot) in out.iter_mut().enumerate() {
        col.clear();
        col.extend(samples.iter().map(|v| v[axis]));
        col.sort_by(f64::total_cmp);
        let kept = &col[cut..n - cut];
        *slot = kept.iter().sum::<f64>() / kept.len() as f64;
    }
    Ok(out.into())
}

/// Linear-interpolated quantile of already sorted data, `p` in [0, 1].
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = p.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = pos - lo as f64;
            sorted[lo] + (sorted[hi] - sorted[lo]) * frac
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}
