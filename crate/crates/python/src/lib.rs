//! Python bindings. Reports cross the boundary as plain dicts and lists.

#![allow(clippy::too_many_arguments)]

use std::path::PathBuf;

use banditlab::algorithms::{Algo, RunRecord, RunSpec};
use banditlab::bounds::{self, ReportOptions};
use banditlab::confidence::ConfidenceSchedule;
use banditlab::harness::{self, ExperimentConfig, InstanceSource, SummaryTable, DEFAULT_MAX_PULLS};
use banditlab::model::{self, ExpFamily};
use banditlab::simlab;
use banditlab::Error;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn py_err(e: Error) -> PyErr {
    if e.is_io() {
        PyOSError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

trait OrPy<T> {
    fn or_py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for banditlab::Result<T> {
    fn or_py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let obj = py.import("json")?.call_method1("loads", (text,))?;
    Ok(obj.unbind())
}

fn parse_algo(name: &str) -> PyResult<Algo> {
    name.parse().or_py()
}

fn parse_family(name: &str) -> PyResult<ExpFamily> {
    match name.trim().to_ascii_lowercase().as_str() {
        "gaussian" => Ok(ExpFamily::GaussianUnitVariance),
        "bernoulli" => Ok(ExpFamily::Bernoulli),
        other => Err(PyValueError::new_err(format!("unknown family {other:?}"))),
    }
}

/// A bandit instance with unit-variance Gaussian or Bernoulli arms.
#[pyclass(name = "Instance", module = "banditlab_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyInstance {
    inner: model::Instance,
}

#[pymethods]
impl PyInstance {
    /// Unit-variance Gaussian arms with the given means.
    #[new]
    #[pyo3(signature = (means, k = 1))]
    fn new(means: Vec<f64>, k: usize) -> PyResult<Self> {
        Ok(PyInstance { inner: model::Instance::gaussian(&means, k).or_py()? })
    }

    #[staticmethod]
    fn table1(n: usize) -> PyResult<Self> {
        Ok(PyInstance { inner: model::Instance::table1(n).or_py()? })
    }

    #[staticmethod]
    fn two_valued(n: usize, k: usize, high: f64, low: f64) -> PyResult<Self> {
        Ok(PyInstance { inner: model::Instance::two_valued(n, k, high, low).or_py()? })
    }

    /// Arms read from a means file, one value per line.
    #[staticmethod]
    #[pyo3(signature = (path, k = 1))]
    fn from_file(path: PathBuf, k: usize) -> PyResult<Self> {
        Ok(PyInstance { inner: InstanceSource::MeansFile(path).build(Some(k)).or_py()? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn means(&self) -> Vec<f64> {
        self.inner.means()
    }

    fn top_k(&self) -> Vec<usize> {
        self.inner.top_k()
    }

    fn best_arm(&self) -> PyResult<usize> {
        self.inner.best_arm().or_py()
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __repr__(&self) -> String {
        format!("Instance(n={}, k={})", self.inner.n(), self.inner.k())
    }
}

/// One trial's result.
#[pyclass(name = "RunRecord", module = "banditlab_py", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyRunRecord {
    algo: String,
    n: usize,
    k: usize,
    delta: f64,
    seed: u64,
    trial: u64,
    total_pulls: u64,
    pulls: Vec<u64>,
    output: Vec<usize>,
    correct: bool,
    truncated: bool,
}

impl From<RunRecord> for PyRunRecord {
    fn from(r: RunRecord) -> Self {
        PyRunRecord {
            algo: r.algo,
            n: r.n,
            k: r.k,
            delta: r.delta,
            seed: r.seed,
            trial: r.trial,
            total_pulls: r.total_pulls,
            pulls: r.pulls,
            output: r.output,
            correct: r.correct,
            truncated: r.truncated,
        }
    }
}

impl From<&PyRunRecord> for RunRecord {
    fn from(r: &PyRunRecord) -> Self {
        RunRecord {
            algo: r.algo.clone(),
            n: r.n,
            k: r.k,
            delta: r.delta,
            seed: r.seed,
            trial: r.trial,
            total_pulls: r.total_pulls,
            pulls: r.pulls.clone(),
            output: r.output.clone(),
            correct: r.correct,
            truncated: r.truncated,
        }
    }
}

#[pymethods]
impl PyRunRecord {
    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &RunRecord::from(self))
    }

    fn __repr__(&self) -> String {
        format!(
            "RunRecord(algo={:?}, trial={}, total_pulls={}, correct={}, truncated={})",
            self.algo, self.trial, self.total_pulls, self.correct, self.truncated
        )
    }
}

fn records_from(records: Vec<PyRef<'_, PyRunRecord>>) -> Vec<RunRecord> {
    records.iter().map(|r| RunRecord::from(&**r)).collect()
}

fn spec(algo: &str, delta: f64, max_pulls: u64) -> PyResult<RunSpec> {
    Ok(RunSpec::new(parse_algo(algo)?, delta, max_pulls))
}

#[pyfunction]
#[pyo3(signature = (sigma2 = 1.0, lil_constant = 2.0, lil_inflation = 2.0, t = 1, delta = 0.1))]
fn u_bound(sigma2: f64, lil_constant: f64, lil_inflation: f64, t: u64, delta: f64) -> PyResult<f64> {
    ConfidenceSchedule::new(sigma2, lil_constant, lil_inflation).or_py()?.u_bound(t, delta).or_py()
}

#[pyfunction]
fn binary_kl(p: f64, q: f64) -> PyResult<f64> {
    model::binary_kl(p, q).or_py()
}

#[pyfunction]
#[pyo3(signature = (instance, algo, delta = 0.1, seed = 0, trial = 0, permute = false, max_pulls = DEFAULT_MAX_PULLS))]
fn run_trial(
    py: Python<'_>,
    instance: &PyInstance,
    algo: &str,
    delta: f64,
    seed: u64,
    trial: u64,
    permute: bool,
    max_pulls: u64,
) -> PyResult<PyRunRecord> {
    let spec = spec(algo, delta, max_pulls)?;
    let inst = instance.inner.clone();
    let rec = py.detach(move || harness::run_trial(&spec, &inst, seed, trial, permute));
    Ok(rec.or_py()?.into())
}

#[pyfunction]
#[pyo3(signature = (instance, algos, delta = 0.1, trials = 100, seed = 0, permute = false, max_pulls = DEFAULT_MAX_PULLS))]
fn run_trials(
    py: Python<'_>,
    instance: &PyInstance,
    algos: Vec<String>,
    delta: f64,
    trials: u64,
    seed: u64,
    permute: bool,
    max_pulls: u64,
) -> PyResult<Vec<PyRunRecord>> {
    let algos = algos.iter().map(|a| parse_algo(a)).collect::<PyResult<Vec<_>>>()?;
    let means = instance.inner.means();
    if !instance.inner.unit_gaussian() {
        return Err(PyValueError::new_err("run_trials needs unit-variance Gaussian arms"));
    }
    let mut cfg = ExperimentConfig::new(InstanceSource::Means(means), algos, delta, trials, seed);
    cfg.k = Some(instance.inner.k());
    cfg.permute_each_trial = permute;
    cfg.max_pulls = max_pulls;
    let recs = py.detach(move || harness::run_trials(&cfg)).or_py()?;
    Ok(recs.into_iter().map(PyRunRecord::from).collect())
}

/// Per-algorithm summary rows of a batch of records sharing one `n`.
#[pyfunction]
fn summary(py: Python<'_>, records: Vec<PyRef<'_, PyRunRecord>>) -> PyResult<Py<PyAny>> {
    let table = SummaryTable::from_records(&records_from(records)).or_py()?;
    to_py(py, &table)
}

#[pyfunction]
#[pyo3(signature = (sizes = vec![10, 100], trials = 100, seed = 1, delta = 0.1))]
fn table1(py: Python<'_>, sizes: Vec<usize>, trials: u64, seed: u64, delta: f64) -> PyResult<Py<PyAny>> {
    let tables = py.detach(move || harness::table1_report(&sizes, trials, seed, delta)).or_py()?;
    to_py(py, &tables)
}

#[pyfunction]
fn persist_records(records: Vec<PyRef<'_, PyRunRecord>>, path: PathBuf) -> PyResult<()> {
    harness::persist(&records_from(records), &path).or_py()
}

#[pyfunction]
fn load_records(path: PathBuf) -> PyResult<Vec<PyRunRecord>> {
    Ok(harness::load(&path).or_py()?.into_iter().map(PyRunRecord::from).collect())
}

#[pyfunction]
#[pyo3(signature = (instance, delta = 0.1))]
fn permutation_total_bound(py: Python<'_>, instance: &PyInstance, delta: f64) -> PyResult<Py<PyAny>> {
    to_py(py, &bounds::permutation_total_bound(&instance.inner, delta).or_py()?)
}

#[pyfunction]
#[pyo3(signature = (instance, delta = 0.1))]
fn combined_bound(py: Python<'_>, instance: &PyInstance, delta: f64) -> PyResult<Py<PyAny>> {
    to_py(py, &bounds::combined_bound(&instance.inner, delta).or_py()?)
}

#[pyfunction]
#[pyo3(signature = (instance, delta = 0.1))]
fn gaussian_mab_per_arm_bound(py: Python<'_>, instance: &PyInstance, delta: f64) -> PyResult<Py<PyAny>> {
    to_py(py, &bounds::gaussian_mab_per_arm_bound(&instance.inner, delta).or_py()?)
}

#[pyfunction]
#[pyo3(signature = (instance, delta = 0.1))]
fn topk_per_arm_bounds(py: Python<'_>, instance: &PyInstance, delta: f64) -> PyResult<Py<PyAny>> {
    to_py(py, &bounds::topk_per_arm_bounds(&instance.inner, delta).or_py()?)
}

#[pyfunction]
#[pyo3(signature = (thetas, family = "gaussian", alpha = 10.0, delta = 0.1, m = None))]
fn big_main_bound(
    py: Python<'_>,
    thetas: Vec<f64>,
    family: &str,
    alpha: f64,
    delta: f64,
    m: Option<usize>,
) -> PyResult<Py<PyAny>> {
    to_py(py, &bounds::big_main_bound(&thetas, parse_family(family)?, alpha, delta, m).or_py()?)
}

#[pyfunction]
fn q_of_beta(beta: f64) -> PyResult<f64> {
    bounds::q_of_beta(beta).or_py()
}

#[pyfunction]
fn fano_rhs(n: usize, m: usize, tau: f64, kl_sum: f64) -> PyResult<f64> {
    bounds::fano_rhs(n, m, tau, kl_sum).or_py()
}

#[pyfunction]
fn best_arm_subset_bound(
    py: Python<'_>,
    n: usize,
    kl_sum: f64,
    m: usize,
    beta: f64,
    delta: f64,
) -> PyResult<Py<PyAny>> {
    to_py(py, &bounds::best_arm_subset_bound(n, kl_sum, m, beta, delta).or_py()?)
}

#[pyfunction]
#[pyo3(signature = (instance, delta = 0.1, eta = 0.125, alpha = 10.0, beta = 0.0625, m = 2))]
fn bounds_report(
    py: Python<'_>,
    instance: &PyInstance,
    delta: f64,
    eta: f64,
    alpha: f64,
    beta: f64,
    m: usize,
) -> PyResult<Py<PyAny>> {
    let opts = ReportOptions { delta, eta, alpha, beta, m };
    to_py(py, &bounds::bounds_report(&instance.inner, &opts).or_py()?)
}

#[pyfunction]
#[pyo3(signature = (theta1, thetaj, tau, kappa, family = "gaussian", mc_samples = 100_000, seed = 0))]
fn verify_balance(
    py: Python<'_>,
    theta1: f64,
    thetaj: f64,
    tau: u64,
    kappa: f64,
    family: &str,
    mc_samples: u64,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let family = parse_family(family)?;
    let report = py
        .detach(move || simlab::verify_balance(theta1, thetaj, tau, kappa, family, mc_samples, seed))
        .or_py()?;
    to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (instance, b, eta = 0.125, algo = "lucbpp", delta = 0.1, trials = 200, seed = 0))]
fn lecam_check(
    py: Python<'_>,
    instance: &PyInstance,
    b: usize,
    eta: f64,
    algo: &str,
    delta: f64,
    trials: u64,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let spec = spec(algo, delta, DEFAULT_MAX_PULLS)?;
    let inst = instance.inner.clone();
    let report = py.detach(move || simlab::lecam_check(&inst, b, eta, &spec, trials, seed)).or_py()?;
    to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (instance, m = 2, beta = 0.0625, algo = "lucbpp", delta = 0.1, trials = 200, seed = 0))]
fn fano_event_check(
    py: Python<'_>,
    instance: &PyInstance,
    m: usize,
    beta: f64,
    algo: &str,
    delta: f64,
    trials: u64,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let spec = spec(algo, delta, DEFAULT_MAX_PULLS)?;
    let inst = instance.inner.clone();
    let report = py
        .detach(move || simlab::fano_event_check(&inst, m, beta, &spec, trials, seed))
        .or_py()?;
    to_py(py, &report)
}

/// Run the command line in-process. Returns `(exit_code, stdout, stderr)`.
#[pyfunction]
fn cli(py: Python<'_>, argv: Vec<String>) -> (i32, String, String) {
    py.detach(move || {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let args = std::iter::once("banditlab".to_string()).chain(argv);
        let code = harness::cli_dispatch(args, &mut out, &mut err);
        (
            code,
            String::from_utf8_lossy(&out).into_owned(),
            String::from_utf8_lossy(&err).into_owned(),
        )
    })
}

#[pymodule]
fn banditlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyRunRecord>()?;
    m.add("ALGORITHMS", Algo::ALL.iter().map(|a| a.name()).collect::<Vec<_>>())?;
    m.add_function(wrap_pyfunction!(u_bound, m)?)?;
    m.add_function(wrap_pyfunction!(binary_kl, m)?)?;
    m.add_function(wrap_pyfunction!(run_trial, m)?)?;
    m.add_function(wrap_pyfunction!(run_trials, m)?)?;
    m.add_function(wrap_pyfunction!(summary, m)?)?;
    m.add_function(wrap_pyfunction!(table1, m)?)?;
    m.add_function(wrap_pyfunction!(persist_records, m)?)?;
    m.add_function(wrap_pyfunction!(load_records, m)?)?;
    m.add_function(wrap_pyfunction!(permutation_total_bound, m)?)?;
    m.add_function(wrap_pyfunction!(combined_bound, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_mab_per_arm_bound, m)?)?;
    m.add_function(wrap_pyfunction!(topk_per_arm_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(big_main_bound, m)?)?;
    m.add_function(wrap_pyfunction!(q_of_beta, m)?)?;
    m.add_function(wrap_pyfunction!(fano_rhs, m)?)?;
    m.add_function(wrap_pyfunction!(best_arm_subset_bound, m)?)?;
    m.add_function(wrap_pyfunction!(bounds_report, m)?)?;
    m.add_function(wrap_pyfunction!(verify_balance, m)?)?;
    m.add_function(wrap_pyfunction!(lecam_check, m)?)?;
    m.add_function(wrap_pyfunction!(fano_event_check, m)?)?;
    m.add_function(wrap_pyfunction!(cli, m)?)?;
    Ok(())
}
