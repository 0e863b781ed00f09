use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use stickbreak::monte_carlo::{self, CurveOptions, Direction, ExperimentConfig};
use stickbreak::stick::{Coupling, LengthSequence};
use stickbreak::{closed_form, divergence, partition, stick};

fn py_err(e: stickbreak::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A stick-breaking prior: Dirichlet, geometric or exchangeable.
#[pyclass(name = "ModelSpec", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyModelSpec(stick::ModelSpec);

#[pymethods]
impl PyModelSpec {
    #[staticmethod]
    fn dp(theta: f64) -> PyResult<Self> {
        stick::ModelSpec::dp(theta).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn geometric(a: f64, b: f64) -> PyResult<Self> {
        stick::ModelSpec::geometric(a, b).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn exchangeable_dp(beta: f64, theta: f64) -> PyResult<Self> {
        stick::ModelSpec::exchangeable_dp(beta, theta).map(Self).map_err(py_err)
    }

    fn tie_probability(&self) -> f64 {
        self.0.tie_probability()
    }

    /// Samples `n` lengths with a generator seeded by `seed`.
    fn sample_lengths(&self, n: usize, seed: u64) -> PyResult<Vec<f64>> {
        let mut rng = monte_carlo::replicate_rng(seed, 0);
        Ok(self.0.sample_lengths(n, &mut rng).map_err(py_err)?.values().to_vec())
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

/// Result of a Monte Carlo divergence run.
#[pyclass(name = "KlExperiment", frozen, get_all)]
struct PyKlExperiment {
    mean: f64,
    std_error: f64,
    variance: f64,
    count: u64,
    /// (rep, kl, cum_mean) rows.
    trace: Vec<(usize, f64, f64)>,
    values: Vec<f64>,
    pinsker_violations: u64,
}

#[pymethods]
impl PyKlExperiment {
    fn __repr__(&self) -> String {
        format!("KlExperiment(mean={}, std_error={}, count={})", self.mean, self.std_error, self.count)
    }
}

fn lengths(values: Vec<f64>) -> PyResult<LengthSequence> {
    LengthSequence::new(values, stick::ModelSpec::Dp { theta: 1.0 }).map_err(py_err)
}

#[pyfunction]
fn weights_from_lengths(values: Vec<f64>) -> PyResult<(Vec<f64>, f64)> {
    let w = stick::weights_from_lengths(&lengths(values)?);
    Ok((w.weights, w.residual))
}

#[pyfunction]
fn binary_divergence(p: f64, q: f64) -> PyResult<f64> {
    divergence::binary_divergence(p, q).map_err(py_err)
}

#[pyfunction]
fn kl_forward_pathwise(values: Vec<f64>, v: f64) -> PyResult<f64> {
    divergence::kl_forward_pathwise(&lengths(values)?, v).map_err(py_err)
}

#[pyfunction]
fn kl_reverse_pathwise(v: f64, values: Vec<f64>) -> PyResult<f64> {
    divergence::kl_reverse_pathwise(v, &lengths(values)?).map_err(py_err)
}

#[pyfunction]
fn expected_binary_divergence(theta: f64, a: f64, b: f64) -> PyResult<f64> {
    closed_form::expected_binary_divergence(theta, a, b).map_err(py_err)
}

#[pyfunction]
fn expected_kl_uncoupled(theta: f64, a: f64, b: f64) -> PyResult<f64> {
    closed_form::expected_kl_uncoupled(theta, a, b).map_err(py_err)
}

#[pyfunction]
fn expected_kl_coupled(theta: f64) -> PyResult<f64> {
    closed_form::expected_kl_coupled(theta).map_err(py_err)
}

#[pyfunction]
fn variance_kl_uncoupled(theta: f64, a: f64, b: f64) -> PyResult<f64> {
    closed_form::variance_kl_uncoupled(theta, a, b).map_err(py_err)
}

#[pyfunction]
fn variance_kl_coupled(theta: f64) -> PyResult<f64> {
    closed_form::variance_kl_coupled(theta).map_err(py_err)
}

/// Returns (value, terms, converged).
#[pyfunction]
#[pyo3(signature = (a, b, theta, tol = 1e-8))]
fn expected_kl_reversed(a: f64, b: f64, theta: f64, tol: f64) -> PyResult<(f64, u64, bool)> {
    let r = closed_form::expected_kl_reversed(a, b, theta, tol).map_err(py_err)?;
    Ok((r.value, r.terms, r.converged))
}

#[pyfunction]
fn dtheta_upper_bound(theta: f64, beta: f64) -> PyResult<f64> {
    closed_form::dtheta_upper_bound(theta, beta).map_err(py_err)
}

/// Returns (partial_sums, accelerated).
#[pyfunction]
fn series_inverse_rising(beta: f64, n_max: usize) -> PyResult<(Vec<f64>, f64)> {
    let s = closed_form::series_inverse_rising(beta, n_max).map_err(py_err)?;
    Ok((s.partial_sums, s.accelerated))
}

/// Returns (partial_sums, accelerated).
#[pyfunction]
fn series_quotient_rising(lambda: f64, beta: f64, n_max: usize) -> PyResult<(Vec<f64>, f64)> {
    let s = closed_form::series_quotient_rising(lambda, beta, n_max).map_err(py_err)?;
    Ok((s.partial_sums, s.accelerated))
}

fn set_partition(blocks: Vec<Vec<usize>>) -> PyResult<partition::SetPartition> {
    partition::SetPartition::from_blocks(blocks).map_err(py_err)
}

#[pyfunction]
fn eppf_dp(blocks: Vec<Vec<usize>>, beta: f64) -> PyResult<f64> {
    partition::eppf_dp(&set_partition(blocks)?, beta).map_err(py_err)
}

#[pyfunction]
fn f_theta(blocks: Vec<Vec<usize>>, theta: f64) -> PyResult<f64> {
    partition::f_theta(&set_partition(blocks)?, theta).map_err(py_err)
}

/// All partitions of {1..n} as lists of blocks.
#[pyfunction]
fn enumerate_partitions(n: usize) -> PyResult<Vec<Vec<Vec<usize>>>> {
    Ok(partition::enumerate_partitions(n)
        .map_err(py_err)?
        .map(|p| p.blocks().to_vec())
        .collect())
}

/// Returns (value, levels).
#[pyfunction]
fn dtheta_partition_sum(theta: f64, beta: f64, n_max: usize) -> PyResult<(f64, Vec<f64>)> {
    let s = partition::dtheta_partition_sum(theta, beta, n_max).map_err(py_err)?;
    Ok((s.value, s.levels))
}

#[pyfunction]
#[pyo3(signature = (model_p, model_q, reverse = false, coupled = false, reps = 100_000, trunc = 300, seed = 0, trace_stride = 100, workers = None))]
#[allow(clippy::too_many_arguments)]
fn run_kl_experiment(
    py: Python<'_>,
    model_p: PyModelSpec,
    model_q: PyModelSpec,
    reverse: bool,
    coupled: bool,
    reps: usize,
    trunc: usize,
    seed: u64,
    trace_stride: usize,
    workers: Option<usize>,
) -> PyResult<PyKlExperiment> {
    let cfg = ExperimentConfig {
        direction: if reverse { Direction::Reverse } else { Direction::Forward },
        coupling: if coupled { Coupling::Coupled } else { Coupling::Uncoupled },
        reps,
        trunc,
        seed,
        trace_stride,
        workers,
        ..ExperimentConfig::new(model_p.0, model_q.0)
    };
    let run = py.detach(|| monte_carlo::run_kl_experiment(&cfg)).map_err(py_err)?;
    Ok(PyKlExperiment {
        mean: run.stats.mean,
        std_error: run.stats.std_error(),
        variance: run.stats.variance(),
        count: run.stats.count,
        trace: run.trace.iter().map(|t| (t.rep, t.kl, t.cum_mean)).collect(),
        values: run.values,
        pinsker_violations: run.pinsker.violations,
    })
}

type DthetaRow = (f64, f64, f64, Option<f64>);

/// Returns (beta, estimate, stderr, upper_bound or None) rows.
#[pyfunction]
#[pyo3(signature = (theta, betas, reps = 100_000, trunc = 300, seed = 0, workers = None))]
fn run_dtheta_curve(
    py: Python<'_>,
    theta: f64,
    betas: Vec<f64>,
    reps: usize,
    trunc: usize,
    seed: u64,
    workers: Option<usize>,
) -> PyResult<Vec<DthetaRow>> {
    let opts = CurveOptions {
        reps,
        trunc,
        seed,
        workers,
    };
    let pts = py.detach(|| monte_carlo::run_dtheta_curve(theta, &betas, opts)).map_err(py_err)?;
    Ok(pts.iter().map(|p| (p.beta, p.estimate, p.stderr, p.upper_bound)).collect())
}

#[pymodule]
fn stickbreak_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelSpec>()?;
    m.add_class::<PyKlExperiment>()?;
    m.add_function(wrap_pyfunction!(weights_from_lengths, m)?)?;
    m.add_function(wrap_pyfunction!(binary_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(kl_forward_pathwise, m)?)?;
    m.add_function(wrap_pyfunction!(kl_reverse_pathwise, m)?)?;
    m.add_function(wrap_pyfunction!(expected_binary_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(expected_kl_uncoupled, m)?)?;
    m.add_function(wrap_pyfunction!(expected_kl_coupled, m)?)?;
    m.add_function(wrap_pyfunction!(variance_kl_uncoupled, m)?)?;
    m.add_function(wrap_pyfunction!(variance_kl_coupled, m)?)?;
    m.add_function(wrap_pyfunction!(expected_kl_reversed, m)?)?;
    m.add_function(wrap_pyfunction!(dtheta_upper_bound, m)?)?;
    m.add_function(wrap_pyfunction!(series_inverse_rising, m)?)?;
    m.add_function(wrap_pyfunction!(series_quotient_rising, m)?)?;
    m.add_function(wrap_pyfunction!(eppf_dp, m)?)?;
    m.add_function(wrap_pyfunction!(f_theta, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_partitions, m)?)?;
    m.add_function(wrap_pyfunction!(dtheta_partition_sum, m)?)?;
    m.add_function(wrap_pyfunction!(run_kl_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(run_dtheta_curve, m)?)?;
    Ok(())
}
