//! Python bindings. Vectors cross the boundary as 3-tuples and IMU samples
//! as 7-tuples `(t, ax, ay, az, gx, gy, gz)`; campaign reports come back as
//! plain dicts.

use std::path::PathBuf;

use gyrocal::{Error, ImuSample, Quat, Vec3};
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

pyo3::create_exception!(gyrocal, GyrocalError, PyException, "Base class for calibration errors.");
pyo3::create_exception!(gyrocal, ConfigError, GyrocalError, "Malformed input or configuration.");
pyo3::create_exception!(
    gyrocal,
    NumericalError,
    GyrocalError,
    "Degenerate geometry or numerics."
);

fn to_py(e: Error) -> PyErr {
    if e.is_numerical() {
        NumericalError::new_err(e.to_string())
    } else {
        ConfigError::new_err(e.to_string())
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    ConfigError::new_err(e.to_string())
}

type Tuple3 = (f64, f64, f64);
type Row = [f64; 7];

fn v(t: Tuple3) -> Vec3 {
    Vec3::new(t.0, t.1, t.2)
}

fn t(v: Vec3) -> Tuple3 {
    (v.x, v.y, v.z)
}

fn sample(r: Row) -> ImuSample {
    ImuSample {
        t: r[0],
        accel: Vec3::new(r[1], r[2], r[3]),
        gyro: Vec3::new(r[4], r[5], r[6]),
    }
}

fn row(s: &ImuSample) -> Row {
    [s.t, s.accel.x, s.accel.y, s.accel.z, s.gyro.x, s.gyro.y, s.gyro.z]
}

fn rows(samples: &[ImuSample]) -> Vec<Row> {
    samples.iter().map(row).collect()
}

/// Serializes through JSON into Python objects.
fn to_dict<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(json_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// `scale ⊙ measured + bias`, in deg/s.
#[pyclass(name = "GyroModel", module = "gyrocal", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyGyroModel {
    inner: gyrocal::GyroModel,
}

#[pymethods]
impl PyGyroModel {
    #[new]
    #[pyo3(signature = (scale = (1.0, 1.0, 1.0), bias = (0.0, 0.0, 0.0)))]
    fn new(scale: Tuple3, bias: Tuple3) -> PyResult<Self> {
        let inner = gyrocal::GyroModel::new(v(scale), v(bias)).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn scale(&self) -> Tuple3 {
        t(self.inner.scale)
    }

    #[getter]
    fn bias(&self) -> Tuple3 {
        t(self.inner.bias)
    }

    fn measured_to_true(&self, measured: Tuple3) -> Tuple3 {
        t(self.inner.measured_to_true(v(measured)))
    }

    fn true_to_measured(&self, rate: Tuple3) -> PyResult<Tuple3> {
        self.inner.true_to_measured(v(rate)).map(t).map_err(to_py)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("model serializes")
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: gyrocal::GyroModel = serde_json::from_str(text).map_err(json_err)?;
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        format!("GyroModel(scale={:?}, bias={:?})", self.scale(), self.bias())
    }
}

/// `scale ⊙ raw + bias`, in g.
#[pyclass(name = "AccelModel", module = "gyrocal", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyAccelModel {
    inner: gyrocal::AccelModel,
}

#[pymethods]
impl PyAccelModel {
    #[new]
    #[pyo3(signature = (scale = (1.0, 1.0, 1.0), bias = (0.0, 0.0, 0.0)))]
    fn new(scale: Tuple3, bias: Tuple3) -> PyResult<Self> {
        let inner = gyrocal::AccelModel::new(v(scale), v(bias)).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn scale(&self) -> Tuple3 {
        t(self.inner.scale)
    }

    #[getter]
    fn bias(&self) -> Tuple3 {
        t(self.inner.bias)
    }

    fn apply(&self, raw: Tuple3) -> Tuple3 {
        t(self.inner.apply(v(raw)))
    }

    fn __repr__(&self) -> String {
        format!("AccelModel(scale={:?}, bias={:?})", self.scale(), self.bias())
    }
}

/// Bias, pose and rotation segments plus the commanded speed.
#[pyclass(name = "CalibrationSession", module = "gyrocal", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PySession {
    inner: gyrocal::CalibrationSession,
}

#[pymethods]
impl PySession {
    #[new]
    fn new(
        bias_segment: Vec<Row>,
        static_poses: Vec<Vec<Row>>,
        rotation_segment: Vec<Row>,
        commanded_speed: f64,
    ) -> Self {
        let seg = |r: Vec<Row>| r.into_iter().map(sample).collect();
        Self {
            inner: gyrocal::CalibrationSession {
                bias_segment: seg(bias_segment),
                static_poses: static_poses.into_iter().map(seg).collect(),
                rotation_segment: seg(rotation_segment),
                commanded_speed,
            },
        }
    }

    #[getter]
    fn bias_segment(&self) -> Vec<Row> {
        rows(&self.inner.bias_segment)
    }

    #[getter]
    fn static_poses(&self) -> Vec<Vec<Row>> {
        self.inner.static_poses.iter().map(|p| rows(p)).collect()
    }

    #[getter]
    fn rotation_segment(&self) -> Vec<Row> {
        rows(&self.inner.rotation_segment)
    }

    #[getter]
    fn commanded_speed(&self) -> f64 {
        self.inner.commanded_speed
    }

    /// Same session with every gyro reading multiplied by `c`.
    fn with_gyro_scaled(&self, c: f64) -> Self {
        Self {
            inner: self.inner.with_gyro_scaled(c),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "CalibrationSession({} poses, {} rotation samples, {} deg/s)",
            self.inner.static_poses.len(),
            self.inner.rotation_segment.len(),
            self.inner.commanded_speed
        )
    }
}

#[pyclass(name = "CalibrationResult", module = "gyrocal", frozen)]
pub struct PyCalibrationResult {
    inner: gyrocal::Calibration,
}

#[pymethods]
impl PyCalibrationResult {
    #[getter]
    fn model(&self) -> PyGyroModel {
        PyGyroModel {
            inner: self.inner.result.gyro,
        }
    }

    #[getter]
    fn scale(&self) -> Tuple3 {
        t(self.inner.result.gyro.scale)
    }

    #[getter]
    fn bias(&self) -> Tuple3 {
        t(self.inner.result.gyro.bias)
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.result.alpha
    }

    #[getter]
    fn beta_raw(&self) -> Tuple3 {
        t(self.inner.result.beta_raw)
    }

    #[getter]
    fn residual_rms(&self) -> f64 {
        self.inner.result.residual_rms
    }

    #[getter]
    fn condition_number(&self) -> f64 {
        self.inner.result.condition_number
    }

    #[getter]
    fn angle_axis_gravity_deg(&self) -> f64 {
        self.inner.result.angle_axis_gravity
    }

    #[getter]
    fn g_mean(&self) -> Tuple3 {
        t(self.inner.g_mean)
    }

    #[getter]
    fn accel_model(&self) -> PyAccelModel {
        PyAccelModel {
            inner: self.inner.accel_model,
        }
    }

    fn dot_before(&self) -> Vec<f64> {
        self.inner.dot_before()
    }

    fn dot_after(&self) -> Vec<f64> {
        self.inner.dot_after()
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner.result).expect("result serializes")
    }

    fn __repr__(&self) -> String {
        format!("CalibrationResult(scale={:?}, bias={:?})", self.scale(), self.bias())
    }
}

/// Simulation scenario; fields mirror the JSON scenario file.
#[pyclass(name = "ScenarioConfig", module = "gyrocal", skip_from_py_object)]
#[derive(Clone)]
pub struct PyScenario {
    inner: gyrocal::ScenarioConfig,
}

#[pymethods]
impl PyScenario {
    /// Defaults overridden by keyword arguments named like the JSON fields.
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(py: Python<'_>, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let text = match kwargs {
            Some(k) => py.import("json")?.call_method1("dumps", (k,))?.extract::<String>()?,
            None => "{}".to_string(),
        };
        Self::from_json(&text)
    }

    /// Scale (1.033, 0.811, 1.151), axis (-1, 1, -1), 50 deg/s.
    #[staticmethod]
    fn reference() -> Self {
        Self {
            inner: gyrocal::ScenarioConfig::reference(),
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: gyrocal::ScenarioConfig = serde_json::from_str(text).map_err(json_err)?;
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("scenario serializes")
    }

    /// Copy with all noise switched off.
    fn noiseless(&self) -> Self {
        Self {
            inner: self.inner.clone().noiseless(),
        }
    }

    #[getter]
    fn true_gyro(&self) -> PyGyroModel {
        PyGyroModel {
            inner: self.inner.true_gyro,
        }
    }

    #[setter]
    fn set_true_gyro(&mut self, m: PyRef<'_, PyGyroModel>) {
        self.inner.true_gyro = m.inner;
    }

    #[getter]
    fn axis(&self) -> Tuple3 {
        t(self.inner.axis)
    }

    #[setter]
    fn set_axis(&mut self, a: Tuple3) {
        self.inner.axis = v(a);
    }

    #[getter]
    fn speed(&self) -> f64 {
        self.inner.speed
    }

    #[setter]
    fn set_speed(&mut self, s: f64) {
        self.inner.speed = s;
    }

    #[getter]
    fn noise_sigma_gyro(&self) -> f64 {
        self.inner.noise_sigma_gyro
    }

    #[setter]
    fn set_noise_sigma_gyro(&mut self, s: f64) {
        self.inner.noise_sigma_gyro = s;
    }

    #[getter]
    fn tilt_deg(&self) -> f64 {
        self.inner.tilt_deg
    }

    #[setter]
    fn set_tilt_deg(&mut self, d: f64) {
        self.inner.tilt_deg = d;
    }

    #[getter]
    fn n_poses(&self) -> usize {
        self.inner.n_poses
    }

    #[setter]
    fn set_n_poses(&mut self, n: usize) {
        self.inner.n_poses = n;
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, s: u64) {
        self.inner.seed = s;
    }

    fn __repr__(&self) -> String {
        format!("ScenarioConfig({})", self.to_json())
    }
}

#[pyclass(name = "SimulatedSession", module = "gyrocal", frozen)]
pub struct PySimulated {
    inner: gyrocal::SimulatedSession,
}

#[pymethods]
impl PySimulated {
    #[getter]
    fn session(&self) -> PySession {
        PySession {
            inner: self.inner.session.clone(),
        }
    }

    /// Whole log as 7-tuples.
    #[getter]
    fn log(&self) -> Vec<Row> {
        rows(&self.inner.log)
    }

    /// `{"bias": (start, end), "poses": [...], "rotation": (start, end)}`, end exclusive.
    #[getter]
    fn segments<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.inner.segments)
    }

    #[getter]
    fn ground_truth(&self) -> PyScenario {
        PyScenario {
            inner: self.inner.ground_truth.clone(),
        }
    }

    #[getter]
    fn pose_angles_deg(&self) -> Vec<f64> {
        self.inner.pose_angles_deg.clone()
    }

    #[getter]
    fn mount(&self) -> (f64, f64, f64, f64) {
        let [w, x, y, z] = self.inner.mount.into();
        (w, x, y, z)
    }

    /// Writes `log.csv` and `manifest.json` into `directory`.
    fn export(&self, directory: PathBuf) -> PyResult<()> {
        gyrocal::write_csv(directory.join("log.csv"), &self.inner.log, None).map_err(to_py)?;
        let manifest =
            gyrocal::SessionManifest::from_ranges("log.csv", &self.inner.segments, self.inner.ground_truth.speed);
        manifest.write(directory.join("manifest.json")).map_err(to_py)
    }
}

#[pyfunction]
fn simulate(config: PyRef<'_, PyScenario>) -> PyResult<PySimulated> {
    let inner = gyrocal::simulate_session(&config.inner).map_err(to_py)?;
    Ok(PySimulated { inner })
}

/// Full pipeline; the accelerometer model is fitted from the poses when omitted.
#[pyfunction]
#[pyo3(signature = (session, accel_model = None))]
fn calibrate(
    session: PyRef<'_, PySession>,
    accel_model: Option<PyRef<'_, PyAccelModel>>,
) -> PyResult<PyCalibrationResult> {
    let inner = gyrocal::calibrate_detailed(&session.inner, accel_model.as_ref().map(|m| &m.inner)).map_err(to_py)?;
    Ok(PyCalibrationResult { inner })
}

/// Mean gyro reading of a static segment.
#[pyfunction]
fn estimate_gyro_bias(segment: Vec<Row>) -> PyResult<Tuple3> {
    let s: Vec<ImuSample> = segment.into_iter().map(sample).collect();
    gyrocal::estimate_gyro_bias(&s).map(t).map_err(to_py)
}

/// Accelerometer model from mean pose vectors in g.
#[pyfunction]
fn fit_accel_model(pose_means: Vec<Tuple3>) -> PyResult<PyAccelModel> {
    let means: Vec<Vec3> = pose_means.into_iter().map(v).collect();
    let inner = gyrocal::estimator::fit_accel_model(&means).map_err(to_py)?;
    Ok(PyAccelModel { inner })
}

/// Least-squares `beta` for `rows · beta = rhs`: `(beta, residual_rms, condition_number)`.
#[pyfunction]
fn solve_ls(rows: Vec<Tuple3>, rhs: Vec<f64>) -> PyResult<(Tuple3, f64, f64)> {
    if rows.len() != rhs.len() {
        return Err(ConfigError::new_err(format!(
            "{} rows but {} right-hand sides",
            rows.len(),
            rhs.len()
        )));
    }
    let x = gyrocal::DesignMatrix {
        rows: rows.into_iter().map(v).collect(),
        rhs,
    };
    let s = gyrocal::solve_ls(&x).map_err(to_py)?;
    Ok((t(s.beta), s.residual_rms, s.condition_number))
}

/// `|scale ⊙ g_mean|` in deg/s.
#[pyfunction]
fn reconstruct_speed(model: PyRef<'_, PyGyroModel>, g_mean: Tuple3) -> f64 {
    gyrocal::reconstruct_speed(&model.inner, v(g_mean))
}

/// Rotates `v` by `angle` radians about `axis`.
#[pyfunction]
fn rotate(axis: Tuple3, angle: f64, vector: Tuple3) -> PyResult<Tuple3> {
    let q = Quat::from_axis_angle(v(axis), angle).map_err(to_py)?;
    q.rotate(v(vector)).map(t).map_err(to_py)
}

#[pyfunction]
fn parse_csv(path: PathBuf) -> PyResult<Vec<Row>> {
    gyrocal::parse_csv(path).map(|s| rows(&s)).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (path, samples, comment = None))]
fn write_csv(path: PathBuf, samples: Vec<Row>, comment: Option<&str>) -> PyResult<()> {
    let s: Vec<ImuSample> = samples.into_iter().map(sample).collect();
    gyrocal::write_csv(path, &s, comment).map_err(to_py)
}

/// Proposed segments of a recorded log, as index ranges.
#[pyfunction]
fn auto_segment<'py>(py: Python<'py>, samples: Vec<Row>) -> PyResult<Bound<'py, PyAny>> {
    let s: Vec<ImuSample> = samples.into_iter().map(sample).collect();
    let seg = gyrocal::auto_segment(&s).map_err(to_py)?;
    to_dict(py, &seg.ranges())
}

/// Session described by a manifest file; log paths are relative to it.
#[pyfunction]
fn load_session(manifest: PathBuf) -> PyResult<PySession> {
    let m = gyrocal::SessionManifest::read(&manifest).map_err(to_py)?;
    let dir = manifest.parent().map(PathBuf::from).unwrap_or_default();
    let loaded = gyrocal::load_session(&m, &dir).map_err(to_py)?;
    Ok(PySession { inner: loaded.session })
}

/// Monte-Carlo summary; `redraw` is "models" or "noise_only".
#[pyfunction]
#[pyo3(signature = (config, runs, redraw = "models"))]
fn monte_carlo<'py>(
    py: Python<'py>,
    config: PyRef<'_, PyScenario>,
    runs: usize,
    redraw: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let policy = match redraw {
        "models" => gyrocal::RedrawPolicy::Models,
        "noise_only" => gyrocal::RedrawPolicy::NoiseOnly,
        other => {
            return Err(ConfigError::new_err(format!(
                "redraw must be models or noise_only, got {other:?}"
            )))
        }
    };
    let cfg = config.inner.clone();
    let s = py.detach(|| gyrocal::monte_carlo(&cfg, runs, policy)).map_err(to_py)?;
    to_dict(py, &s)
}

/// Per-cell scale-factor spread for every (sigma, speed) pair.
#[pyfunction]
fn noise_grid<'py>(
    py: Python<'py>,
    config: PyRef<'_, PyScenario>,
    sigmas: Vec<f64>,
    speeds: Vec<f64>,
    runs: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config.inner.clone();
    let cells = py
        .detach(|| gyrocal::noise_grid(&cfg, &sigmas, &speeds, runs))
        .map_err(to_py)?;
    to_dict(py, &cells)
}

/// Sweep report for a sweep configuration given as JSON text.
#[pyfunction]
#[pyo3(signature = (config_json, base_dir = None))]
fn run_sweep<'py>(py: Python<'py>, config_json: &str, base_dir: Option<PathBuf>) -> PyResult<Bound<'py, PyAny>> {
    let cfg: gyrocal::SweepConfig = serde_json::from_str(config_json).map_err(json_err)?;
    let dir = base_dir.unwrap_or_else(|| PathBuf::from("."));
    let report = py.detach(|| gyrocal::run_sweep(&cfg, &dir)).map_err(to_py)?;
    to_dict(py, &report)
}

/// Per-axis line fit of scale against speed from `(speed, (kx, ky, kz))` pairs.
#[pyfunction]
fn fit_lines<'py>(py: Python<'py>, points: Vec<(f64, Tuple3)>) -> PyResult<Bound<'py, PyAny>> {
    let pairs: Vec<(f64, Vec3)> = points.into_iter().map(|(s, k)| (s, v(k))).collect();
    let lin = gyrocal::fit_lines(&pairs).map_err(to_py)?;
    to_dict(py, &lin)
}

#[pymodule(name = "gyrocal")]
fn gyrocal_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("GyrocalError", py.get_type::<GyrocalError>())?;
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add("NumericalError", py.get_type::<NumericalError>())?;
    m.add_class::<PyGyroModel>()?;
    m.add_class::<PyAccelModel>()?;
    m.add_class::<PySession>()?;
    m.add_class::<PyCalibrationResult>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PySimulated>()?;
    for f in [
        wrap_pyfunction!(simulate, m)?,
        wrap_pyfunction!(calibrate, m)?,
        wrap_pyfunction!(estimate_gyro_bias, m)?,
        wrap_pyfunction!(fit_accel_model, m)?,
        wrap_pyfunction!(solve_ls, m)?,
        wrap_pyfunction!(reconstruct_speed, m)?,
        wrap_pyfunction!(rotate, m)?,
        wrap_pyfunction!(parse_csv, m)?,
        wrap_pyfunction!(write_csv, m)?,
        wrap_pyfunction!(auto_segment, m)?,
        wrap_pyfunction!(load_session, m)?,
        wrap_pyfunction!(monte_carlo, m)?,
        wrap_pyfunction!(noise_grid, m)?,
        wrap_pyfunction!(run_sweep, m)?,
        wrap_pyfunction!(fit_lines, m)?,
    ] {
        m.add_function(f)?;
    }
    Ok(())
}
