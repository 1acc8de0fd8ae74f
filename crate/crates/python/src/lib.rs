//! Python bindings for the compositional controller library.

use std::sync::Mutex;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use compo_motor::controller::{self, FlatParams, GatingCoeffs, RnnParams, RnnShape, RnnState, TableParams};
use compo_motor::io::GenomeFile;
use compo_motor::optimizer::{self, GaussianEs, OptConfig, Parallelism};
use compo_motor::periodic::{self, EpisodeConfig, TargetFunction};
use compo_motor::snake::{self, JointTable, LocomotionConfig, Style};
use compo_motor::Error;

fn to_py(e: Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// Fully connected tanh recurrent network.
#[pyclass(name = "Rnn", module = "compo_motor_py", from_py_object)]
#[derive(Clone)]
pub struct PyRnn {
    inner: RnnParams,
}

#[pymethods]
impl PyRnn {
    /// Builds a network from its flat parameters (input weights row-major,
    /// then recurrent weights row-major). Omitted parameters are zero.
    #[new]
    #[pyo3(signature = (n_neurons=7, n_inputs=1, output_indices=vec![0], params=None))]
    fn new(n_neurons: usize, n_inputs: usize, output_indices: Vec<usize>, params: Option<Vec<f64>>) -> PyResult<Self> {
        let shape = RnnShape {
            n_neurons,
            n_inputs,
            output_indices,
        };
        let inner = match params {
            Some(p) => RnnParams::from_flat(&shape, &p),
            None => RnnParams::zeros(shape),
        }
        .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn param_count(&self) -> usize {
        self.inner.param_count()
    }

    #[getter]
    fn n_neurons(&self) -> usize {
        self.inner.n_neurons()
    }

    fn to_flat(&self) -> Vec<f64> {
        self.inner.to_flat()
    }

    /// One update from `state`; returns `(new_state, outputs)`.
    fn step(&self, state: Vec<f64>, inputs: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let (next, out) = self
            .inner
            .step(&RnnState { activations: state }, &inputs)
            .map_err(to_py)?;
        Ok((next.activations, out))
    }

    /// Outputs for an input sequence, starting from the zero state.
    fn rollout(&self, inputs: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        self.inner.rollout(&inputs).map_err(to_py)
    }

    /// Squared error against a target function on the cosine-driven grid.
    #[pyo3(signature = (target, samples_per_period=100, n_periods=2, washout_periods=1))]
    fn episode(
        &self,
        target: &str,
        samples_per_period: usize,
        n_periods: usize,
        washout_periods: usize,
    ) -> PyResult<(f64, Vec<f64>)> {
        let f: TargetFunction = target.parse().map_err(to_py)?;
        let cfg = EpisodeConfig {
            samples_per_period,
            n_periods,
            washout_periods,
            ..EpisodeConfig::default()
        };
        let r = periodic::run_episode(&self.inner, f, &cfg).map_err(to_py)?;
        Ok((r.loss, r.trace))
    }

    fn __repr__(&self) -> String {
        format!(
            "Rnn(n_neurons={}, n_inputs={}, outputs={:?})",
            self.inner.n_neurons(),
            self.inner.n_inputs(),
            self.inner.shape().output_indices
        )
    }
}

/// Masked softmax of the first `k` coefficients with inverse temperature `tau`.
#[pyfunction]
#[pyo3(signature = (coefficients, k, tau=controller::DEFAULT_TAU))]
fn gating_normalize(coefficients: Vec<f64>, k: usize, tau: f64) -> PyResult<Vec<f64>> {
    controller::gating_normalize(&GatingCoeffs(coefficients), k, tau).map_err(to_py)
}

/// Weighted sum of sub-controller outputs; `None` is allowed where the weight is zero.
#[pyfunction]
fn compose(weights: Vec<f64>, contributions: Vec<Option<Vec<f64>>>) -> PyResult<Vec<f64>> {
    let refs: Vec<Option<&[f64]>> = contributions.iter().map(|c| c.as_deref()).collect();
    controller::compose(&weights, &refs).map_err(to_py)
}

/// Decodes table encodings into `(amplitudes, offsets)` in radians.
#[pyfunction]
#[pyo3(signature = (amp_enc, offsets_enc, offset_clamp=controller::DEFAULT_OFFSET_CLAMP))]
fn table_decode(amp_enc: Vec<f64>, offsets_enc: Vec<f64>, offset_clamp: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    Ok(TableParams::new(amp_enc, offsets_enc).map_err(to_py)?.decode(offset_clamp))
}

#[pyfunction]
fn eval_target(name: &str, x: f64) -> PyResult<f64> {
    let f: TargetFunction = name.parse().map_err(to_py)?;
    Ok(periodic::eval_target(f, x))
}

#[pyfunction]
#[pyo3(signature = (d, s, style, r_dist=10.0, r_side=20.0))]
fn reward(d: f64, s: f64, style: &str, r_dist: f64, r_side: f64) -> PyResult<f64> {
    let style: Style = style.parse().map_err(to_py)?;
    Ok(snake::reward_terms(d, s, style, r_dist, r_side))
}

/// Runs one locomotion episode with a decoded joint table.
#[pyfunction]
#[pyo3(signature = (amplitudes, offsets, style="straight", seed=0, episode_steps=120))]
fn snake_episode<'py>(
    py: Python<'py>,
    amplitudes: Vec<f64>,
    offsets: Vec<f64>,
    style: &str,
    seed: u64,
    episode_steps: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let style: Style = style.parse().map_err(to_py)?;
    let cfg = LocomotionConfig {
        episode_steps,
        ..LocomotionConfig::default()
    };
    let table = JointTable { amplitudes, offsets };
    let o = py
        .detach(|| snake::run_episode(&table, style, &cfg, seed))
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("d", o.d)?;
    out.set_item("s", o.s)?;
    out.set_item("heading_change", o.heading_change)?;
    out.set_item("steps", o.steps_executed)?;
    out.set_item("early_terminated", o.early_terminated)?;
    out.set_item("aborted", o.aborted.map(|a| format!("{a:?}")))?;
    out.set_item("reward", snake::reward(&o, style, &cfg))?;
    let com: Vec<(f64, f64)> = o.trajectory.iter().map(|p| (p.com[0], p.com[1])).collect();
    out.set_item("com", com)?;
    Ok(out)
}

/// Checks a genome JSON document; raises `ValueError` when it is invalid.
#[pyfunction]
fn validate_genome(text: &str) -> PyResult<()> {
    GenomeFile::from_json(text).and_then(|g| g.validate()).map_err(to_py)
}

/// Minimizes a Python callable `cost(list[float]) -> float` with the default
/// evolution strategy.
#[pyfunction]
#[pyo3(signature = (cost, dim, seed=0, population_size=16, max_epochs=1000, target_cost=f64::NEG_INFINITY, initial_step=0.5))]
#[allow(clippy::too_many_arguments)]
fn minimize<'py>(
    py: Python<'py>,
    cost: Py<PyAny>,
    dim: usize,
    seed: u64,
    population_size: usize,
    max_epochs: usize,
    target_cost: f64,
    initial_step: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = OptConfig {
        population_size,
        max_epochs,
        target_cost,
        initial_step,
        rng_seed: seed,
        ..OptConfig::default()
    };
    let failure: Mutex<Option<PyErr>> = Mutex::new(None);
    let cost_fn = |x: &[f64], _: usize| -> f64 {
        if failure.lock().expect("not poisoned").is_some() {
            return f64::NAN;
        }
        Python::attach(|py| cost.call1(py, (x.to_vec(),)).and_then(|v| v.extract::<f64>(py))).unwrap_or_else(|e| {
            failure.lock().expect("not poisoned").get_or_insert(e);
            f64::NAN
        })
    };
    let result = optimizer::minimize(cost_fn, dim, &cfg, &mut GaussianEs::new(), Parallelism::Serial);
    if let Some(e) = failure.into_inner().expect("not poisoned") {
        return Err(e);
    }
    let r = result.map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("best_genotype", r.best_genotype)?;
    out.set_item("best_cost", r.best_cost)?;
    out.set_item("epochs_used", r.epochs_used)?;
    out.set_item("cost_history", r.cost_history)?;
    Ok(out)
}

#[pymodule]
fn compo_motor_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRnn>()?;
    m.add_function(wrap_pyfunction!(gating_normalize, m)?)?;
    m.add_function(wrap_pyfunction!(compose, m)?)?;
    m.add_function(wrap_pyfunction!(table_decode, m)?)?;
    m.add_function(wrap_pyfunction!(eval_target, m)?)?;
    m.add_function(wrap_pyfunction!(reward, m)?)?;
    m.add_function(wrap_pyfunction!(snake_episode, m)?)?;
    m.add_function(wrap_pyfunction!(validate_genome, m)?)?;
    m.add_function(wrap_pyfunction!(minimize, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
