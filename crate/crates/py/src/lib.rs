//! Python bindings: scenarios, the file-based stages and the core signal
//! operations. Signals cross the boundary as lists of Python `complex`.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use mmtrace::{pipeline, tracker, BasebandBuffer, ClutterConfig, Geometry, Point2, SensingConfig, StrokeShape};

fn py_err(e: mmtrace::Error) -> PyErr {
    match e.exit_code() {
        2 => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

type PyRes<T> = PyResult<T>;
/// `(times, values)` of one receiver's Doppler track.
type PyTrack = (Vec<f64>, Vec<Option<f64>>);
/// `(times, xs, ys, flags)`.
type PyTrajectory = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<&'static str>);

fn buffer(samples: Vec<Complex64>, fs: f64) -> PyRes<BasebandBuffer> {
    BasebandBuffer::new(samples, fs, 0.0).map_err(py_err)
}

/// Full simulation and estimation configuration.
#[pyclass(name = "Scenario", module = "mmtrace_py")]
struct PyScenario {
    inner: mmtrace::Scenario,
}

#[pymethods]
impl PyScenario {
    /// `"los"`, `"nlos"` or a path to a scenario JSON file.
    #[new]
    #[pyo3(signature = (name = "los"))]
    fn new(name: &str) -> PyRes<Self> {
        Ok(Self {
            inner: mmtrace::Scenario::resolve(name).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyRes<Self> {
        let inner: mmtrace::Scenario =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.inner).expect("scenario serializes")
    }

    fn validate(&self) -> PyRes<()> {
        self.inner.validate().map_err(py_err)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, v: u64) {
        self.inner.seed = v;
    }

    #[getter]
    fn sample_rate_hz(&self) -> f64 {
        self.inner.sample_rate_hz
    }

    #[setter]
    fn set_sample_rate_hz(&mut self, v: f64) {
        self.inner.sample_rate_hz = v;
    }

    #[getter]
    fn aoa_error_deg(&self) -> f64 {
        self.inner.aoa_error_deg
    }

    #[setter]
    fn set_aoa_error_deg(&mut self, v: f64) {
        self.inner.aoa_error_deg = v;
    }

    #[getter]
    fn stroke(&self) -> &'static str {
        self.inner.stroke.shape.name()
    }

    #[setter]
    fn set_stroke(&mut self, name: &str) -> PyRes<()> {
        self.inner.stroke.shape =
            StrokeShape::from_name(name).ok_or_else(|| PyValueError::new_err(format!("unknown stroke `{name}`")))?;
        Ok(())
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.sensing.gamma
    }

    #[setter]
    fn set_gamma(&mut self, v: f64) {
        self.inner.sensing.gamma = v;
    }

    /// Ground-truth track as `(times, xs, ys)`.
    fn truth(&self) -> PyRes<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let t = self.inner.truth_track().map_err(py_err)?;
        let (xs, ys) = t.positions.iter().map(|p| (p.x, p.y)).unzip();
        Ok((t.times_s, xs, ys))
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(name={:?}, stroke={:?}, seed={})",
            self.inner.name,
            self.stroke(),
            self.inner.seed
        )
    }
}

/// Writes the IQ recordings and truth into `out_dir`; returns the paths.
#[pyfunction]
fn simulate(scenario: &PyScenario, out_dir: PathBuf) -> PyRes<Vec<String>> {
    let paths = pipeline::simulate(&scenario.inner, &out_dir).map_err(py_err)?;
    Ok(paths.iter().map(|p| p.display().to_string()).collect())
}

/// Detects Doppler at both receivers; returns `[(times, dopplers)]` with
/// `None` where nothing cleared the threshold.
#[pyfunction]
fn detect(scenario: &PyScenario, out_dir: PathBuf) -> PyRes<Vec<PyTrack>> {
    let tracks = pipeline::detect(&scenario.inner, &out_dir).map_err(py_err)?;
    Ok(tracks.into_iter().map(|t| (t.sensing_times_s, t.doppler_hz)).collect())
}

/// Reconstructs the trajectory; returns `(times, xs, ys, flags)`.
#[pyfunction]
fn track(scenario: &PyScenario, out_dir: PathBuf) -> PyRes<PyTrajectory> {
    let t = pipeline::track(&scenario.inner, &out_dir).map_err(py_err)?;
    let (xs, ys) = t.points.iter().map(|p| (p.x, p.y)).unzip();
    Ok((t.sensing_times_s, xs, ys, t.flags.iter().map(|f| f.as_str()).collect()))
}

/// Scores the trajectory in `out_dir`; returns `(median_m, p90_m, errors)`.
#[pyfunction]
fn evaluate(out_dir: PathBuf) -> PyRes<(f64, f64, Vec<f64>)> {
    let s = pipeline::evaluate(&out_dir).map_err(py_err)?;
    Ok((s.median_m, s.p90_m, s.per_point_errors_m))
}

/// All four stages; returns `(median_m, p90_m, errors)`.
#[pyfunction]
fn run_pipeline(scenario: &PyScenario, out_dir: PathBuf) -> PyRes<(f64, f64, Vec<f64>)> {
    let s = pipeline::run_all(&scenario.inner, &out_dir).map_err(py_err)?;
    Ok((s.median_m, s.p90_m, s.per_point_errors_m))
}

/// Unit-power OFDM transmit signal.
#[pyfunction]
#[pyo3(signature = (sample_rate_hz, duration_s, seed = 0))]
fn gen_transmit_signal(sample_rate_hz: f64, duration_s: f64, seed: u64) -> PyRes<Vec<Complex64>> {
    let cfg = mmtrace::TransmitConfig::for_sample_rate(sample_rate_hz, duration_s, seed);
    Ok(mmtrace::gen_transmit_signal(&cfg).map_err(py_err)?.samples)
}

#[pyfunction]
fn gen_test_tone(sample_rate_hz: f64, duration_s: f64, freq_hz: f64) -> PyRes<Vec<Complex64>> {
    Ok(mmtrace::gen_test_tone(sample_rate_hz, duration_s, freq_hz).map_err(py_err)?.samples)
}

/// Least-squares clutter cancellation of `y_s` against `y_r`.
#[pyfunction]
#[pyo3(signature = (y_s, y_r, num_taps = 16, regularization = 1e-8))]
fn clutter_cancel(y_s: Vec<Complex64>, y_r: Vec<Complex64>, num_taps: usize, regularization: f64) -> PyRes<Vec<Complex64>> {
    let cfg = ClutterConfig {
        num_taps,
        regularization,
        ..ClutterConfig::default()
    };
    mmtrace::ls_clutter_cancel(&y_s, &y_r, &cfg).map_err(py_err)
}

fn sensing(fs: f64, doppler_max_hz: Option<f64>, oversample: Option<usize>, gamma: Option<f64>, train: Option<usize>) -> SensingConfig {
    let d = SensingConfig::new(fs);
    SensingConfig {
        doppler_max_hz: doppler_max_hz.unwrap_or(d.doppler_max_hz),
        doppler_oversample: oversample.unwrap_or(d.doppler_oversample),
        gamma: gamma.unwrap_or(d.gamma),
        half_train_cells: train.unwrap_or(d.half_train_cells),
        ..d
    }
}

/// CAF spectrogram of an already cleaned surveillance signal with the
/// default 0.1 s / 10 ms windowing. Returns `(times, bins_hz, rows)`.
#[pyfunction]
#[pyo3(signature = (y_s, y_r, sample_rate_hz, doppler_max_hz = None, oversample = None))]
#[allow(clippy::type_complexity)]
fn caf_spectrogram(
    y_s: Vec<Complex64>,
    y_r: Vec<Complex64>,
    sample_rate_hz: f64,
    doppler_max_hz: Option<f64>,
    oversample: Option<usize>,
) -> PyRes<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>)> {
    let cfg = sensing(sample_rate_hz, doppler_max_hz, oversample, None, None);
    let map = mmtrace::caf_spectrogram(&buffer(y_s, sample_rate_hz)?, &buffer(y_r, sample_rate_hz)?, &cfg)
        .map_err(py_err)?;
    Ok((map.sensing_times_s, map.doppler_bins_hz, map.magnitudes))
}

/// Index of the detected bin in a CAF row, or `None`.
#[pyfunction]
#[pyo3(signature = (row, gamma = 3.0, half_train_cells = 25, stride = 1))]
fn detect_bin(row: Vec<f64>, gamma: f64, half_train_cells: usize, stride: usize) -> Option<usize> {
    mmtrace::caf::detect_bin(&row, gamma, half_train_cells, stride)
}

fn geometry(tx_distance_m: f64) -> Geometry {
    Geometry::with_tx_distance(tx_distance_m)
}

/// Doppler pair `(f1, f2)` for motion `(v, theta)` at `(x, y)`.
#[pyfunction]
#[pyo3(signature = (x, y, v, theta, tx_distance_m = 2.5))]
fn doppler_from_motion(x: f64, y: f64, v: f64, theta: f64, tx_distance_m: f64) -> PyRes<(f64, f64)> {
    mmtrace::doppler_from_motion(Point2::new(x, y), v, theta, &geometry(tx_distance_m)).map_err(py_err)
}

/// Speed and heading `(v, theta)` from a Doppler pair at `(x, y)`.
#[pyfunction]
#[pyo3(signature = (f1, f2, x, y, prev_heading = 0.0, tx_distance_m = 2.5))]
fn solve_velocity(f1: f64, f2: f64, x: f64, y: f64, prev_heading: f64, tx_distance_m: f64) -> PyRes<(f64, f64)> {
    mmtrace::solve_velocity(f1, f2, Point2::new(x, y), &geometry(tx_distance_m), prev_heading).map_err(py_err)
}

/// Intersection of the two bearing rays, radians from the x-axis.
#[pyfunction]
#[pyo3(signature = (aoa_rx1, aoa_rx2, tx_distance_m = 2.5))]
fn initial_position(aoa_rx1: f64, aoa_rx2: f64, tx_distance_m: f64) -> PyRes<(f64, f64)> {
    let obs = tracker::InitialObservation {
        aoa_rx1_rad: aoa_rx1,
        aoa_rx2_rad: aoa_rx2,
        aoa_error_rad: 0.0,
    };
    let fix = mmtrace::initial_position(&obs, &geometry(tx_distance_m)).map_err(py_err)?;
    Ok((fix.position.x, fix.position.y))
}

#[pymodule]
fn mmtrace_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(detect, m)?)?;
    m.add_function(wrap_pyfunction!(track, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(gen_transmit_signal, m)?)?;
    m.add_function(wrap_pyfunction!(gen_test_tone, m)?)?;
    m.add_function(wrap_pyfunction!(clutter_cancel, m)?)?;
    m.add_function(wrap_pyfunction!(caf_spectrogram, m)?)?;
    m.add_function(wrap_pyfunction!(detect_bin, m)?)?;
    m.add_function(wrap_pyfunction!(doppler_from_motion, m)?)?;
    m.add_function(wrap_pyfunction!(solve_velocity, m)?)?;
    m.add_function(wrap_pyfunction!(initial_position, m)?)?;
    m.add("FORMAT_VERSION", mmtrace::FORMAT_VERSION)?;
    Ok(())
}
