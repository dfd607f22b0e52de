//! Python bindings for `duelsim-core`.
//!
//! Contexts cross the boundary as lists of per-arm feature lists.

use pyo3::exceptions::{PyIndexError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use duelsim_core::harness::{self, ExperimentConfig, HyperMode};
use duelsim_core::stream::{stream_from_seed, Stream};
use duelsim_core::{
    ComparisonKind, ContextMatrix, DuelObservation, DuelPolicy, Error, MleOptions, PerturbationDistribution,
    PerturbationKind, Scenario,
};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::ArmIndex { .. } => PyIndexError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_ctx(arms: Vec<Vec<f64>>) -> PyResult<ContextMatrix> {
    ContextMatrix::from_arms(&arms).map_err(py_err)
}

fn from_ctx(ctx: &ContextMatrix) -> Vec<Vec<f64>> {
    ctx.arms().map(<[f64]>::to_vec).collect()
}

/// An LST comparison function `F` ("btl", "tm" or "exponential").
#[pyclass(name = "ComparisonModel", frozen)]
struct PyComparisonModel {
    inner: duelsim_core::ComparisonModel,
}

#[pymethods]
impl PyComparisonModel {
    #[new]
    #[pyo3(signature = (kind = "btl", scale = 1.0))]
    fn new(kind: &str, scale: f64) -> PyResult<Self> {
        let kind: ComparisonKind = kind.parse().map_err(py_err)?;
        Ok(Self { inner: duelsim_core::ComparisonModel::new(kind, scale).map_err(py_err)? })
    }

    /// The model induced by a perturbation distribution.
    #[staticmethod]
    #[pyo3(signature = (noise, scale = 1.0))]
    fn induced_by(noise: &str, scale: f64) -> PyResult<Self> {
        let kind: PerturbationKind = noise.parse().map_err(py_err)?;
        let dist = PerturbationDistribution::new(kind, 0.0, scale).map_err(py_err)?;
        Ok(Self { inner: dist.induced_model() })
    }

    #[getter]
    fn scale(&self) -> f64 {
        self.inner.scale()
    }

    /// `F(delta)`, the probability that an arm `delta` ahead wins.
    fn prob(&self, delta: f64) -> PyResult<f64> {
        self.inner.prob(delta).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("ComparisonModel({:?}, scale={})", self.inner.kind(), self.inner.scale())
    }
}

/// A generated problem with its own context and feedback stream.
#[pyclass(name = "ProblemInstance")]
struct PyProblemInstance {
    inner: duelsim_core::ProblemInstance,
    rng: Stream,
}

#[pymethods]
impl PyProblemInstance {
    #[new]
    #[pyo3(signature = (n, d, scenario = "easy", noise = "gumbel", seed = 0))]
    fn new(n: usize, d: usize, scenario: &str, noise: &str, seed: u64) -> PyResult<Self> {
        let scenario: Scenario = scenario.parse().map_err(py_err)?;
        let noise = PerturbationDistribution::standard(noise.parse().map_err(py_err)?);
        let mut rng = stream_from_seed(seed);
        let inner = duelsim_core::ProblemInstance::generate(scenario, n, d, noise.induced_model(), noise, &mut rng)
            .map_err(py_err)?;
        Ok(Self { inner, rng })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn theta_star(&self) -> Vec<f64> {
        self.inner.theta_star().to_vec()
    }

    fn sample_context(&mut self) -> Vec<Vec<f64>> {
        from_ctx(&self.inner.sample_context(&mut self.rng))
    }

    fn utilities(&self, context: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        self.inner.utilities(&to_ctx(context)?).map_err(py_err)
    }

    fn win_probability(&self, context: Vec<Vec<f64>>, i: usize, j: usize) -> PyResult<f64> {
        self.inner.win_probability(&to_ctx(context)?, i, j).map_err(py_err)
    }

    /// Duels `i` against `j`; `True` when `i` wins.
    fn sample_feedback(&mut self, context: Vec<Vec<f64>>, i: usize, j: usize) -> PyResult<bool> {
        self.inner.sample_feedback(&to_ctx(context)?, i, j, &mut self.rng).map_err(py_err)
    }

    /// `(average, weak)` regret of playing `(i, j)`.
    fn regret(&self, context: Vec<Vec<f64>>, i: usize, j: usize) -> PyResult<(f64, f64)> {
        let r = self.inner.instant_regret(&to_ctx(context)?, i, j).map_err(py_err)?;
        Ok((r.average, r.weak))
    }
}

/// Any policy the harness knows, configured through the experiment config
/// keys (e.g. `{"estimator": "mle"}` or `{"c1": 2.0}`).
#[pyclass(name = "Policy", unsendable)]
struct PyPolicy {
    name: String,
    inner: Box<dyn DuelPolicy>,
}

#[pymethods]
impl PyPolicy {
    #[new]
    #[pyo3(signature = (name, n, d, horizon, seed = 0, options = None))]
    fn new(
        name: &str,
        n: usize,
        d: usize,
        horizon: usize,
        seed: u64,
        options: Option<&Bound<'_, PyDict>>,
    ) -> PyResult<Self> {
        let mut text = format!("n = {n}\nd = {d}\nhorizon = {horizon}\npolicies = p:{name}\n");
        if let Some(opts) = options {
            for (k, v) in opts.iter() {
                text.push_str(&format!("policy.p.{} = {}\n", k.str()?, v.str()?));
            }
        }
        let cfg: ExperimentConfig = text.parse().map_err(py_err)?;
        let params = cfg.resolve(&cfg.policies[0]).map_err(py_err)?;
        let inner = harness::build_policy(&params, n, d, horizon, seed).map_err(py_err)?;
        Ok(Self { name: name.to_string(), inner })
    }

    /// Returns the pair `(first, second)` to duel.
    fn select(&mut self, context: Vec<Vec<f64>>) -> PyResult<(usize, usize)> {
        self.inner.select(&to_ctx(context)?).map_err(py_err)
    }

    fn update(&mut self, context: Vec<Vec<f64>>, pair: (usize, usize), first_won: bool) -> PyResult<()> {
        self.inner.update(&to_ctx(context)?, pair, first_won).map_err(py_err)
    }

    #[getter]
    fn estimator_seconds(&self) -> f64 {
        self.inner.estimator_ns() as f64 * 1e-9
    }

    fn __repr__(&self) -> String {
        format!("Policy('{}')", self.name)
    }
}

/// Gram matrix `ridge I + sum z z^T` with a maintained inverse.
#[pyclass(name = "GramState")]
struct PyGramState {
    inner: duelsim_core::GramState,
}

#[pymethods]
impl PyGramState {
    #[new]
    #[pyo3(signature = (dim, ridge = 1e-6))]
    fn new(dim: usize, ridge: f64) -> PyResult<Self> {
        Ok(Self { inner: duelsim_core::GramState::new(dim, ridge).map_err(py_err)? })
    }

    fn update(&mut self, z: Vec<f64>) -> PyResult<()> {
        self.inner.rank_one_update(&z).map_err(py_err)
    }

    /// `|x|_{M^-1}`.
    fn weighted_norm(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.weighted_norm(&x).map_err(py_err)
    }

    fn inverse(&self) -> Vec<Vec<f64>> {
        let m = self.inner.inverse();
        m.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    fn matrix(&self) -> Vec<Vec<f64>> {
        let m = self.inner.matrix();
        m.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    fn min_eigenvalue(&self) -> f64 {
        self.inner.min_eigenvalue()
    }
}

/// Constrained MLE of `theta` from contrasts `x_first - x_second` and
/// outcomes (`True` when first won).
#[pyfunction]
#[pyo3(signature = (contrasts, outcomes, model = None, radius = None))]
fn fit_mle(
    contrasts: Vec<Vec<f64>>,
    outcomes: Vec<bool>,
    model: Option<&PyComparisonModel>,
    radius: Option<f64>,
) -> PyResult<(Vec<f64>, bool)> {
    if contrasts.len() != outcomes.len() {
        return Err(PyValueError::new_err("contrasts and outcomes differ in length"));
    }
    let d = contrasts.first().map_or(0, Vec::len);
    let obs: Vec<DuelObservation> = contrasts
        .into_iter()
        .zip(outcomes)
        .enumerate()
        .map(|(round, (contrast, outcome))| DuelObservation { round, first: 0, second: 1, contrast, outcome })
        .collect();
    let model = model.map_or_else(duelsim_core::ComparisonModel::btl, |m| m.inner);
    let mut opts = MleOptions::for_dim(d);
    if let Some(r) = radius {
        opts.domain_radius = r;
    }
    let fit = duelsim_core::fit_mle(&obs, &model, &opts, &vec![0.0; d]).map_err(py_err)?;
    Ok((fit.theta, fit.converged))
}

/// Default CoLSTIM schedule as a dict.
#[pyfunction]
#[pyo3(signature = (mode, horizon, d, n, mu = 0.1, rho = 0.5))]
fn default_hyperparams<'py>(
    py: Python<'py>,
    mode: &str,
    horizon: usize,
    d: usize,
    n: usize,
    mu: f64,
    rho: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let mode: HyperMode = mode.parse().map_err(py_err)?;
    let hp = harness::default_hyperparams(mode, horizon, d, n, mu, rho).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("c1", hp.c1)?;
    out.set_item("c2", hp.c2)?;
    out.set_item("c_thresh", hp.c_thresh)?;
    out.set_item("tau", hp.tau)?;
    out.set_item("relaxed_threshold", hp.relaxed_threshold)?;
    out.set_item("p_final", hp.coupling.probability(horizon))?;
    Ok(out)
}

/// Runs an experiment given as config-file text. Returns one dict per
/// policy with final regret means and stds, timings and the mean
/// cumulative average-regret curve. Writes records when `out` is given.
#[pyfunction]
#[pyo3(signature = (config, out = None))]
fn run_experiment<'py>(py: Python<'py>, config: &str, out: Option<&str>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg: ExperimentConfig = config.parse().map_err(py_err)?;
    let outcome = py.detach(|| harness::run_experiment(&cfg)).map_err(py_err)?;
    if let Some(f) = outcome.failures.first() {
        return Err(PyValueError::new_err(format!("run {} / {}: {}", f.run, f.policy, f.message)));
    }
    if let Some(path) = out {
        harness::write_records(&outcome.records, std::path::Path::new(path)).map_err(py_err)?;
    }
    let summary = harness::summarize(&outcome.records).map_err(py_err)?;
    summary
        .totals
        .iter()
        .map(|t| {
            let d = PyDict::new(py);
            d.set_item("policy", &t.policy)?;
            d.set_item("runs", t.runs)?;
            d.set_item("final_avg_mean", t.final_avg_mean)?;
            d.set_item("final_avg_std", t.final_avg_std)?;
            d.set_item("final_weak_mean", t.final_weak_mean)?;
            d.set_item("final_weak_std", t.final_weak_std)?;
            d.set_item("select_seconds", t.select_s_mean)?;
            d.set_item("estimator_seconds", t.estimator_s_mean)?;
            if let Some(c) = summary.curve_for(&t.policy) {
                d.set_item("avg_mean", c.avg_mean.clone())?;
            }
            Ok(d)
        })
        .collect()
}

#[pymodule]
pub mod duelsim {
    #[pymodule_export]
    use super::{
        default_hyperparams, fit_mle, run_experiment, PyComparisonModel, PyGramState, PyPolicy, PyProblemInstance,
    };
}
