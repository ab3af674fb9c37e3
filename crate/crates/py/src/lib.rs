//! Python module `activeloc`: geometry and Fisher-information helpers, the
//! histogram filter, the planners, and seeded episode runs.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use activeloc::cli::{load_config, DynamicsKind, PolicySpec, RunConfig};
use activeloc::geometry::{bearing_to, range_to, Measurement};
use activeloc::sim::{evaluate, run_episode as run_sim_episode};
use activeloc::uncertainty::{fim_accumulate, gdop as gdop_of, total_uncertainty as total_of};
use activeloc::{offline_fisher_plan, ActionSet, Error, GridHistogram, MeasurementModel, Point2, Rect, SensorKind};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn pt((x, y): (f64, f64)) -> Point2 {
    Point2::new(x, y)
}

fn pts(v: Vec<(f64, f64)>) -> Vec<Point2> {
    v.into_iter().map(pt).collect()
}

fn tup(p: Point2) -> (f64, f64) {
    (p.x, p.y)
}

fn tups(v: &[Point2]) -> Vec<(f64, f64)> {
    v.iter().copied().map(tup).collect()
}

/// `sigma=None` takes the model's default noise level.
fn model(kind: &str, sigma: Option<f64>) -> PyResult<MeasurementModel> {
    let kind: SensorKind = kind.parse().map_err(py_err)?;
    let sigma = sigma.unwrap_or(match kind {
        SensorKind::Bearing => activeloc::cli::config::DEFAULT_BEARING_SIGMA,
        SensorKind::Range => activeloc::cli::config::DEFAULT_RANGE_SIGMA,
    });
    MeasurementModel::new(kind, sigma).map_err(py_err)
}

/// Noise-free bearing (radians) from `p` to `q`.
#[pyfunction]
fn bearing(p: (f64, f64), q: (f64, f64)) -> PyResult<f64> {
    bearing_to(pt(p), pt(q)).map_err(py_err)
}

/// Euclidean distance from `p` to `q`.
#[pyfunction]
fn distance(p: (f64, f64), q: (f64, f64)) -> f64 {
    range_to(pt(p), pt(q))
}

/// Fisher information `(a11, a12, a22)` of target `q` from measurements at `sensors`.
#[pyfunction]
#[pyo3(signature = (sensors, q, kind="bearing", sigma=None))]
fn fim(sensors: Vec<(f64, f64)>, q: (f64, f64), kind: &str, sigma: Option<f64>) -> PyResult<(f64, f64, f64)> {
    let f = fim_accumulate(&pts(sensors), pt(q), &model(kind, sigma)?).map_err(py_err)?;
    Ok((f.a11, f.a12, f.a22))
}

/// Determinant of the Fisher information.
#[pyfunction]
#[pyo3(signature = (sensors, q, kind="bearing", sigma=None))]
fn fim_det(sensors: Vec<(f64, f64)>, q: (f64, f64), kind: &str, sigma: Option<f64>) -> PyResult<f64> {
    Ok(fim_accumulate(&pts(sensors), pt(q), &model(kind, sigma)?).map_err(py_err)?.det())
}

/// Geometric dilution of precision of a sensor pair for target `q`.
#[pyfunction]
fn gdop(p_i: (f64, f64), p_j: (f64, f64), q: (f64, f64)) -> f64 {
    gdop_of(pt(p_i), pt(p_j), pt(q))
}

/// Sum over targets of `det(F⁻¹)`; `inf` while any target is untriangulated.
#[pyfunction]
#[pyo3(signature = (sensors, targets, kind="bearing", sigma=None))]
fn total_uncertainty(
    sensors: Vec<(f64, f64)>,
    targets: Vec<(f64, f64)>,
    kind: &str,
    sigma: Option<f64>,
) -> PyResult<f64> {
    total_of(&pts(sensors), &pts(targets), &model(kind, sigma)?).map_err(py_err)
}

/// Oracle Fisher plan of `horizon` positions in a `width × height` area.
#[pyfunction]
#[pyo3(signature = (targets, start, horizon=50, delta_p=0.5, actions=36, kind="bearing", sigma=None, width=20.0, height=20.0))]
#[allow(clippy::too_many_arguments)]
fn plan_offline(
    targets: Vec<(f64, f64)>,
    start: (f64, f64),
    horizon: usize,
    delta_p: f64,
    actions: usize,
    kind: &str,
    sigma: Option<f64>,
    width: f64,
    height: f64,
) -> PyResult<Vec<(f64, f64)>> {
    let extent = Rect::square(width, height).map_err(py_err)?;
    let actions = ActionSet::new(actions).map_err(py_err)?;
    let plan = offline_fisher_plan(
        &pts(targets),
        pt(start),
        horizon,
        delta_p,
        &actions,
        &model(kind, sigma)?,
        &extent,
    )
    .map_err(py_err)?;
    Ok(tups(&plan.points))
}

/// Grid histogram belief over one target's position.
#[pyclass(name = "Histogram")]
struct PyHistogram {
    inner: GridHistogram,
    model: MeasurementModel,
}

#[pymethods]
impl PyHistogram {
    #[new]
    #[pyo3(signature = (width=200, height=200, extent_width=20.0, extent_height=20.0, kind="bearing", sigma=None))]
    fn new(
        width: usize,
        height: usize,
        extent_width: f64,
        extent_height: f64,
        kind: &str,
        sigma: Option<f64>,
    ) -> PyResult<Self> {
        let extent = Rect::square(extent_width, extent_height).map_err(py_err)?;
        Ok(Self {
            inner: GridHistogram::uniform(width, height, extent).map_err(py_err)?,
            model: model(kind, sigma)?,
        })
    }

    /// Folds in measurement `z` taken from position `p`.
    fn update(&mut self, p: (f64, f64), z: f64) -> PyResult<()> {
        let m = Measurement {
            value: z,
            target_index: 0,
        };
        self.inner.update(pt(p), &m, &self.model).map_err(py_err)
    }

    /// Center of the most likely cell.
    fn map_estimate(&self) -> (f64, f64) {
        tup(self.inner.predict_map())
    }

    /// Shannon entropy (nats) of the normalized belief.
    fn entropy(&self) -> f64 {
        self.inner.entropy()
    }

    /// Rows of max-normalized cell values, lowest y first.
    fn values(&self) -> Vec<Vec<f64>> {
        self.inner
            .values()
            .chunks(self.inner.width())
            .map(<[f64]>::to_vec)
            .collect()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.height(), self.inner.width())
    }
}

fn run_config(
    config: Option<PathBuf>,
    kind: Option<&str>,
    targets: Option<usize>,
    dynamics: Option<&str>,
    horizon: Option<usize>,
) -> PyResult<RunConfig> {
    let mut cfg = match config {
        Some(path) => load_config(&path).map_err(py_err)?,
        None => RunConfig::default(),
    };
    if let Some(k) = kind {
        let k: SensorKind = k.parse().map_err(py_err)?;
        if k != cfg.model {
            cfg.sigma = None;
        }
        cfg.model = k;
    }
    if let Some(m) = targets {
        cfg.targets = m;
    }
    if let Some(d) = dynamics {
        cfg.dynamics = d.parse::<DynamicsKind>().map_err(py_err)?;
    }
    if let Some(h) = horizon {
        cfg.horizon = h;
    }
    Ok(cfg)
}

/// Runs one seeded episode and returns its trajectory, targets, MAP
/// estimates, and final error. `policy` is `offline`, `greedy`, `random` or
/// `rl:CHECKPOINT`.
#[pyfunction]
#[pyo3(signature = (policy="offline", seed=0, config=None, kind=None, targets=None, dynamics=None, horizon=None))]
#[allow(clippy::too_many_arguments)]
fn run_episode<'py>(
    py: Python<'py>,
    policy: &str,
    seed: u64,
    config: Option<PathBuf>,
    kind: Option<&str>,
    targets: Option<usize>,
    dynamics: Option<&str>,
    horizon: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = run_config(config, kind, targets, dynamics, horizon)?;
    let env = cfg.env().map_err(py_err)?;
    let spec: PolicySpec = policy.parse().map_err(py_err)?;
    let policy = spec.build(&cfg, &env).map_err(py_err)?;
    let ep = py
        .detach(|| run_sim_episode(&policy, &env, seed))
        .map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("final_error", ep.record.final_error())?;
    out.set_item("trajectory", tups(&ep.state.trajectory))?;
    out.set_item("targets", tups(&ep.state.targets))?;
    out.set_item("predictions", tups(&ep.state.predictions()))?;
    out.set_item(
        "errors",
        ep.record.steps.iter().map(|s| s.error).collect::<Vec<_>>(),
    )?;
    Ok(out)
}

/// Mean, population std, and per-episode final errors over `episodes` seeded
/// episodes starting at `seed`.
#[pyfunction]
#[pyo3(signature = (policy="offline", episodes=10, seed=0, config=None, kind=None, targets=None, dynamics=None, horizon=None))]
#[allow(clippy::too_many_arguments)]
fn evaluate_policy<'py>(
    py: Python<'py>,
    policy: &str,
    episodes: usize,
    seed: u64,
    config: Option<PathBuf>,
    kind: Option<&str>,
    targets: Option<usize>,
    dynamics: Option<&str>,
    horizon: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = run_config(config, kind, targets, dynamics, horizon)?;
    let env = cfg.env().map_err(py_err)?;
    let spec: PolicySpec = policy.parse().map_err(py_err)?;
    let policy = spec.build(&cfg, &env).map_err(py_err)?;
    let eval = py
        .detach(|| evaluate(&policy, &env, episodes, seed))
        .map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("mean", eval.mean)?;
    out.set_item("std", eval.std)?;
    out.set_item("median", eval.median())?;
    out.set_item("finals", eval.finals)?;
    out.set_item("seeds", eval.seeds)?;
    Ok(out)
}

#[pymodule]
#[pyo3(name = "activeloc")]
fn activeloc_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(bearing, m)?)?;
    m.add_function(wrap_pyfunction!(distance, m)?)?;
    m.add_function(wrap_pyfunction!(fim, m)?)?;
    m.add_function(wrap_pyfunction!(fim_det, m)?)?;
    m.add_function(wrap_pyfunction!(gdop, m)?)?;
    m.add_function(wrap_pyfunction!(total_uncertainty, m)?)?;
    m.add_function(wrap_pyfunction!(plan_offline, m)?)?;
    m.add_function(wrap_pyfunction!(run_episode, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_policy, m)?)?;
    m.add_class::<PyHistogram>()?;
    Ok(())
}
