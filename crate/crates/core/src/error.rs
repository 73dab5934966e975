use std::path::PathBuf;

use thiserror::Error;

/// Every failure the calibration pipeline can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("rotation axis has zero length")]
    ZeroAxis,
    #[error("quaternion norm {norm} is not unit")]
    NonUnitQuaternion { norm: f64 },
    #[error("series is empty")]
    EmptySeries,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("scale factor component is singular: {0:?}")]
    SingularScale([f64; 3]),
    #[error("segment is not static: per-axis std {std:?} exceeds {gate} deg/s")]
    NotStatic { std: [f64; 3], gate: f64 },
    #[error("static poses are degenerate (condition number {condition:e})")]
    DegeneratePoses { condition: f64 },
    #[error("at least {required} static poses are required, got {got}")]
    TooFewPoses { required: usize, got: usize },
    #[error("least-squares system is singular (condition number {condition:e})")]
    SingularSystem { condition: f64 },
    #[error("estimated scale has a non-positive component: {0:?}")]
    NonPositiveScale([f64; 3]),
    #[error("rate vector has zero magnitude")]
    ZeroRate,
    #[error("angle between rotation axis and gravity is {angle_deg:.2} deg, outside [{min_deg}, {max_deg}]")]
    GeometryDegenerate { angle_deg: f64, min_deg: f64, max_deg: f64 },
    #[error("at least 2 calibrated speed points are required, got {0}")]
    TooFewPoints(usize),
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: timestamp does not increase")]
    NonMonotonicTime { line: usize },
    #[error("no constant-speed rotation segment found")]
    NoRotationFound,
    #[error("found {found} static segments, need a bias segment plus at least 3 poses")]
    TooFewStaticSegments { found: usize },
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for failures caused by the data's numerics or geometry rather than
    /// by malformed input or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ZeroAxis
                | Error::NonUnitQuaternion { .. }
                | Error::SingularScale(_)
                | Error::NotStatic { .. }
                | Error::DegeneratePoses { .. }
                | Error::SingularSystem { .. }
                | Error::NonPositiveScale(_)
                | Error::ZeroRate
                | Error::GeometryDegenerate { .. }
                | Error::TooFewPoints(_)
                | Error::NoRotationFound
                | Error::TooFewStaticSegments { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
