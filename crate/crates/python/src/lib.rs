//! Python module `rco`: the safety envelope, control mapping, union area,
//! structured-output parsing and the closed-loop episode runner.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rco_core::backend::{parse_structured as parse_raw, Purpose, ScriptedBackend, ScriptedTable};
use rco_core::bundle::{bundled_scenario, bundled_scenario_names, bundled_scenarios, bundled_table};
use rco_core::controlmap;
use rco_core::domain::{self, NormBox, SpeedControl};
use rco_core::episode::{self, EpisodeConfig, EpisodeOutput, Mode};
use rco_core::metrics;
use rco_core::safety::{self, SafetyGains};
use rco_core::simenv::Scenario;
use serde_json::Value;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn token<T: serde::de::DeserializeOwned>(s: &str, what: &str) -> PyResult<T> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|_| PyValueError::new_err(format!("unknown {what} `{s}`")))
}

fn to_python(py: Python<'_>, v: &impl serde::Serialize) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(value_err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

#[pyclass(name = "Action", frozen, eq, from_py_object)]
#[derive(Clone, Copy, PartialEq)]
pub struct PyAction(pub domain::Action);

#[pymethods]
impl PyAction {
    #[new]
    fn new(throttle: f64, brake: f64, steer: f64) -> PyResult<Self> {
        domain::Action::new(throttle, brake, steer).map(PyAction).map_err(value_err)
    }

    /// Full brake, no throttle, wheel straight.
    #[staticmethod]
    fn fail_safe() -> Self {
        PyAction(domain::Action::FAIL_SAFE_STOP)
    }

    #[getter]
    fn throttle(&self) -> f64 {
        self.0.throttle()
    }

    #[getter]
    fn brake(&self) -> f64 {
        self.0.brake()
    }

    #[getter]
    fn steer(&self) -> f64 {
        self.0.steer()
    }

    fn __repr__(&self) -> String {
        format!("Action(throttle={}, brake={}, steer={})", self.0.throttle(), self.0.brake(), self.0.steer())
    }
}

#[pyclass(name = "VehicleMeasurements", frozen, from_py_object)]
#[derive(Clone, Copy)]
pub struct PyMeasurements(pub domain::VehicleMeasurements);

#[pymethods]
impl PyMeasurements {
    /// `d_follow=None` means no lead vehicle.
    #[new]
    #[pyo3(signature = (v, a_x, omega_z, d_follow=None))]
    fn new(v: f64, a_x: f64, omega_z: f64, d_follow: Option<f64>) -> Self {
        PyMeasurements(domain::VehicleMeasurements {
            v,
            a_x,
            omega_z,
            d_follow: d_follow.unwrap_or(domain::VehicleMeasurements::NO_LEAD),
        })
    }

    #[getter]
    fn v(&self) -> f64 {
        self.0.v
    }

    #[getter]
    fn a_x(&self) -> f64 {
        self.0.a_x
    }

    #[getter]
    fn omega_z(&self) -> f64 {
        self.0.omega_z
    }

    #[getter]
    fn d_follow(&self) -> Option<f64> {
        self.0.d_follow.is_finite().then_some(self.0.d_follow)
    }

    fn __repr__(&self) -> String {
        let m = &self.0;
        format!("VehicleMeasurements(v={}, a_x={}, omega_z={}, d_follow={:?})", m.v, m.a_x, m.omega_z, self.d_follow())
    }
}

#[pyclass(name = "SafetyConstraints", frozen, from_py_object)]
#[derive(Clone, Copy)]
pub struct PyConstraints(pub domain::SafetyConstraints);

#[pymethods]
impl PyConstraints {
    #[new]
    fn new(v_max: f64, d_min: f64, ac_max: f64, de_max: f64, psi_max: f64, d_brake: f64) -> PyResult<Self> {
        domain::SafetyConstraints::new(v_max, d_min, ac_max, de_max, psi_max, d_brake)
            .map(PyConstraints)
            .map_err(value_err)
    }

    #[getter]
    fn v_max(&self) -> f64 {
        self.0.v_max
    }

    #[getter]
    fn d_min(&self) -> f64 {
        self.0.d_min
    }

    #[getter]
    fn ac_max(&self) -> f64 {
        self.0.ac_max
    }

    #[getter]
    fn de_max(&self) -> f64 {
        self.0.de_max
    }

    #[getter]
    fn psi_max(&self) -> f64 {
        self.0.psi_max
    }

    #[getter]
    fn d_brake(&self) -> f64 {
        self.0.d_brake
    }

    fn __repr__(&self) -> String {
        let c = &self.0;
        format!(
            "SafetyConstraints(v_max={}, d_min={}, ac_max={}, de_max={}, psi_max={}, d_brake={})",
            c.v_max, c.d_min, c.ac_max, c.de_max, c.psi_max, c.d_brake
        )
    }
}

/// Constrained action and the names of the limits that fired.
#[pyfunction]
#[pyo3(signature = (action, measurements, constraints, delta_throttle=0.1, delta_brake=0.1))]
pub fn apply_constraints(
    action: PyAction,
    measurements: PyMeasurements,
    constraints: PyConstraints,
    delta_throttle: f64,
    delta_brake: f64,
) -> PyResult<(PyAction, Vec<String>)> {
    let gains = SafetyGains::new(delta_throttle, delta_brake).map_err(value_err)?;
    let (a, fired) = safety::apply_constraints_traced(action.0, &measurements.0, &constraints.0, &gains);
    let names = [
        ("max_speed", fired.max_speed),
        ("min_following", fired.min_following),
        ("max_acceleration", fired.max_acceleration),
        ("max_deceleration", fired.max_deceleration),
        ("max_yaw_rate", fired.max_yaw_rate),
        ("min_braking_distance", fired.min_braking_distance),
    ]
    .into_iter()
    .filter(|(_, on)| *on)
    .map(|(name, _)| name.to_string())
    .collect();
    Ok((PyAction(a), names))
}

/// (throttle, brake) for a speed token such as `"deceleration"`.
#[pyfunction]
pub fn map_speed_control(speed: &str, prev_throttle: f64) -> PyResult<(f64, f64)> {
    let s: SpeedControl = token(speed, "speed token")?;
    Ok(controlmap::map_speed_control(s, prev_throttle))
}

/// Area of the union of normalized `(x0, y0, x1, y1)` boxes.
#[pyfunction]
pub fn union_area(boxes: Vec<(f64, f64, f64, f64)>) -> PyResult<f64> {
    let boxes = boxes
        .into_iter()
        .map(|(x0, y0, x1, y1)| NormBox::new(x0, y0, x1, y1))
        .collect::<Result<Vec<_>, _>>()
        .map_err(value_err)?;
    Ok(rco_core::verifier::union_area(&boxes))
}

#[pyfunction]
pub fn driving_score(rc: f64, is_score: f64) -> f64 {
    metrics::driving_score(rc, is_score)
}

/// Parses a model answer for `purpose` (`hazard_and_plan`,
/// `short_term_motion` or `safety_constraints`). Raises ValueError on any
/// schema violation.
#[pyfunction]
pub fn parse_structured(py: Python<'_>, raw: &str, purpose: &str) -> PyResult<Py<PyAny>> {
    let p: Purpose = token(purpose, "purpose")?;
    let parsed = parse_raw(raw, p).map_err(value_err)?;
    to_python(py, &parsed)
}

#[pyfunction]
pub fn scenario_names() -> Vec<String> {
    bundled_scenario_names().map(String::from).collect()
}

/// Result of one closed-loop episode.
#[pyclass(name = "Episode", frozen)]
pub struct PyEpisode(pub EpisodeOutput);

#[pymethods]
impl PyEpisode {
    #[getter]
    fn scenario(&self) -> &str {
        &self.0.result.scenario
    }

    #[getter]
    fn mode(&self) -> &str {
        &self.0.result.mode
    }

    #[getter]
    fn rc(&self) -> f64 {
        self.0.result.rc
    }

    #[getter]
    fn is_score(&self) -> f64 {
        self.0.result.is_score
    }

    #[getter]
    fn ds(&self) -> f64 {
        self.0.result.ds
    }

    #[getter]
    fn as_speed(&self) -> f64 {
        self.0.result.as_speed
    }

    #[getter]
    fn collisions(&self) -> usize {
        self.0.result.collisions()
    }

    #[getter]
    fn ticks(&self) -> u64 {
        self.0.result.ticks
    }

    #[getter]
    fn override_ticks(&self) -> u64 {
        self.0.result.override_ticks
    }

    #[getter]
    fn trajectory(&self) -> Vec<(f64, f64)> {
        self.0.trajectory.iter().map(|p| (p[0], p[1])).collect()
    }

    /// Full result record as a dict.
    fn result(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_python(py, &self.0.result)
    }

    /// Decision log, one JSON object per line.
    fn log_jsonl(&self) -> String {
        self.0.log_jsonl()
    }

    fn __repr__(&self) -> String {
        let r = &self.0.result;
        format!("Episode({} {}: RC {:.2} IS {:.3} DS {:.2})", r.scenario, r.mode, r.rc, r.is_score, r.ds)
    }
}

fn load_scenario(spec: &str) -> PyResult<Scenario> {
    if spec.trim_start().starts_with('{') {
        return Scenario::from_json(spec, "<string>").map_err(value_err);
    }
    bundled_scenario(spec).ok_or_else(|| PyValueError::new_err(format!("no bundled scenario `{spec}`")))
}

fn backend(table: Option<&str>) -> PyResult<ScriptedBackend> {
    let mut t = bundled_table();
    if let Some(text) = table {
        t.merge(ScriptedTable::from_json(text).map_err(value_err)?);
    }
    Ok(ScriptedBackend::new(t))
}

/// Runs one episode with the scripted backend. `scenario` is a bundled name
/// or scenario JSON; `table` is extra scripted-response JSON.
#[pyfunction]
#[pyo3(signature = (scenario, mode="rco", n_max=5, seed=None, table=None))]
pub fn run_episode(
    py: Python<'_>,
    scenario: &str,
    mode: &str,
    n_max: usize,
    seed: Option<u64>,
    table: Option<&str>,
) -> PyResult<PyEpisode> {
    let sc = load_scenario(scenario)?;
    let b = backend(table)?;
    let mut cfg = EpisodeConfig {
        mode: mode.parse::<Mode>().map_err(PyValueError::new_err)?,
        seed,
        ..Default::default()
    };
    cfg.orchestrator.planner.max_steps = n_max;
    cfg.validate().map_err(PyValueError::new_err)?;
    let out = py.detach(|| episode::run_episode(&sc, &b, &cfg)).map_err(value_err)?;
    Ok(PyEpisode(out))
}

/// Every bundled scenario under each mode; returns the summary CSV text.
#[pyfunction]
#[pyo3(signature = (modes=None, n_max=5, seed=None))]
pub fn run_suite(py: Python<'_>, modes: Option<Vec<String>>, n_max: usize, seed: Option<u64>) -> PyResult<String> {
    let modes: Vec<Mode> = match modes {
        Some(m) => m
            .iter()
            .map(|s| s.parse::<Mode>())
            .collect::<Result<_, _>>()
            .map_err(PyValueError::new_err)?,
        None => episode::ALL_MODES.to_vec(),
    };
    let mut cfg = EpisodeConfig {
        seed,
        ..Default::default()
    };
    cfg.orchestrator.planner.max_steps = n_max;
    cfg.validate().map_err(PyValueError::new_err)?;
    let b = backend(None)?;
    let results = py
        .detach(|| episode::run_suite(&bundled_scenarios(), &b, &cfg, &modes))
        .map_err(value_err)?;
    metrics::summary_csv(&results).map_err(value_err)
}

#[pymodule]
fn rco(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAction>()?;
    m.add_class::<PyMeasurements>()?;
    m.add_class::<PyConstraints>()?;
    m.add_class::<PyEpisode>()?;
    m.add_function(wrap_pyfunction!(apply_constraints, m)?)?;
    m.add_function(wrap_pyfunction!(map_speed_control, m)?)?;
    m.add_function(wrap_pyfunction!(union_area, m)?)?;
    m.add_function(wrap_pyfunction!(driving_score, m)?)?;
    m.add_function(wrap_pyfunction!(parse_structured, m)?)?;
    m.add_function(wrap_pyfunction!(scenario_names, m)?)?;
    m.add_function(wrap_pyfunction!(run_episode, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    Ok(())
}
