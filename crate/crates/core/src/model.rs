//! Diagonal scale + bias sensor models: `true = scale ⊙ measured + bias`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::Vec3;

/// Gyroscope model. `scale` is the diagonal of K (unitless), `bias` is in deg/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GyroModel {
    pub scale: Vec3,
    pub bias: Vec3,
}

/// Accelerometer model. `scale` is unitless, `bias` is in g.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccelModel {
    pub scale: Vec3,
    pub bias: Vec3,
}

/// One timestamped reading: time in seconds, specific force in g, rate in deg/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    pub t: f64,
    pub accel: Vec3,
    pub gyro: Vec3,
}

fn check_scale(scale: Vec3, bias: Vec3) -> Result<()> {
    if !scale.is_finite() || !bias.is_finite() {
        return Err(Error::NonFinite("sensor model"));
    }
    if scale.x <= 0.0 || scale.y <= 0.0 || scale.z <= 0.0 {
        return Err(Error::invalid(
            "scale",
            format!("components must be positive, got {:?}", scale.to_array()),
        ));
    }
    Ok(())
}

fn invert(scale: Vec3, bias: Vec3, v: Vec3) -> Result<Vec3> {
    if scale.x.abs() < 1e-12 || scale.y.abs() < 1e-12 || scale.z.abs() < 1e-12 {
        return Err(Error::SingularScale(scale.to_array()));
    }
    Ok((v - bias).hadamard_div(scale))
}

impl GyroModel {
    pub const IDENTITY: GyroModel = GyroModel {
        scale: Vec3::ONE,
        bias: Vec3::ZERO,
    };

    pub fn new(scale: Vec3, bias: Vec3) -> Result<Self> {
        check_scale(scale, bias)?;
        Ok(Self { scale, bias })
    }

    pub fn validate(&self) -> Result<()> {
        check_scale(self.scale, self.bias)
    }

    /// Measured rate to true rate.
    pub fn measured_to_true(&self, measured: Vec3) -> Vec3 {
        self.scale.hadamard(measured) + self.bias
    }

    /// True rate to the reading the sensor would produce.
    pub fn true_to_measured(&self, true_rate: Vec3) -> Result<Vec3> {
        invert(self.scale, self.bias, true_rate)
    }
}

impl Default for GyroModel {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl AccelModel {
    pub const IDENTITY: AccelModel = AccelModel {
        scale: Vec3::ONE,
        bias: Vec3::ZERO,
    };

    pub fn new(scale: Vec3, bias: Vec3) -> Result<Self> {
        check_scale(scale, bias)?;
        Ok(Self { scale, bias })
    }

    pub fn validate(&self) -> Result<()> {
        check_scale(self.scale, self.bias)
    }

    /// Raw accelerometer reading to calibrated specific force.
    pub fn apply(&self, measured: Vec3) -> Vec3 {
        self.scale.hadamard(measured) + self.bias
    }

    pub fn invert(&self, calibrated: Vec3) -> Result<Vec3> {
        invert(self.scale, self.bias, calibrated)
    }
}

impl Default for AccelModel {
    fn default() -> Self {
        Self::IDENTITY
    }
}

pub fn gyro_measured_to_true(m: &GyroModel, g_m: Vec3) -> Vec3 {
    m.measured_to_true(g_m)
}

pub fn gyro_true_to_measured(m: &GyroModel, g_r: Vec3) -> Result<Vec3> {
    m.true_to_measured(g_r)
}

pub fn accel_apply(m: &AccelModel, a_m: Vec3) -> Vec3 {
    m.apply(a_m)
}
