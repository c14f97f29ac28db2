//! Python module `netsel`.

use netsel::chain::{self, EigenMethod};
use netsel::montecarlo;
use netsel::replicator::{self, IntegrationOptions};
use netsel::{BetaSpec, InitialState, SimulationSpec};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(netsel, NetselError, PyException);

fn to_py(err: netsel::Error) -> PyErr {
    match err {
        netsel::Error::InvalidParameter { .. } | netsel::Error::Domain { .. } => {
            PyValueError::new_err(err.to_string())
        }
        other => NetselError::new_err(other.to_string()),
    }
}

trait IntoPyResult<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPyResult<T> for netsel::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

#[pyclass(name = "NetworkParams", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyNetworkParams(netsel::NetworkParams);

#[pymethods]
impl PyNetworkParams {
    #[new]
    #[pyo3(signature = (capacity, arrival, delay_weight, price_primary, price_secondary = 0.0))]
    fn new(
        capacity: f64,
        arrival: f64,
        delay_weight: f64,
        price_primary: f64,
        price_secondary: f64,
    ) -> PyResult<Self> {
        netsel::NetworkParams::new(
            capacity,
            arrival,
            delay_weight,
            price_primary,
            price_secondary,
        )
        .py()
        .map(Self)
    }

    /// Prices with `p2 = 0` and `p1` placing the equilibrium at `target_share`.
    #[staticmethod]
    fn calibrated(
        capacity: f64,
        arrival: f64,
        delay_weight: f64,
        target_share: f64,
    ) -> PyResult<Self> {
        netsel::NetworkParams::calibrated(capacity, arrival, delay_weight, target_share)
            .py()
            .map(Self)
    }

    #[getter]
    fn capacity(&self) -> f64 {
        self.0.capacity()
    }

    #[getter]
    fn arrival(&self) -> f64 {
        self.0.arrival()
    }

    #[getter]
    fn delay_weight(&self) -> f64 {
        self.0.delay_weight()
    }

    #[getter]
    fn price_primary(&self) -> f64 {
        self.0.price_primary()
    }

    #[getter]
    fn price_secondary(&self) -> f64 {
        self.0.price_secondary()
    }

    fn with_arrival(&self, arrival: f64) -> PyResult<Self> {
        self.0.with_arrival(arrival).py().map(Self)
    }

    fn utility_primary(&self, k: usize, n: usize) -> PyResult<f64> {
        self.0.utility_primary(k, n).py()
    }

    fn utility_secondary(&self) -> f64 {
        self.0.utility_secondary()
    }

    fn payoff_gap(&self, k: usize, n: usize) -> PyResult<f64> {
        self.0.payoff_gap(k, n).py()
    }

    /// `(rate_primary, share_primary, boundary_flag)`.
    fn equilibrium(&self) -> PyResult<(f64, f64, bool)> {
        let eq = self.0.equilibrium().py()?;
        Ok((eq.rate_primary, eq.share_primary, eq.boundary_flag))
    }

    fn critical_state(&self, n: usize) -> PyResult<usize> {
        self.0.critical_state(n).py()
    }

    fn social_welfare(&self, share: f64) -> PyResult<f64> {
        self.0.social_welfare(share).py()
    }

    /// `(share, total_delay)` of the minimiser.
    fn social_optimum(&self) -> (f64, f64) {
        let opt = self.0.social_optimum();
        (opt.share, opt.total_delay)
    }

    fn poa_at(&self, share: f64) -> PyResult<f64> {
        self.0.poa_at(share).py()
    }

    fn poa_absorbing(&self) -> f64 {
        self.0.poa_absorbing()
    }

    fn expected_poa(&self, psi: Vec<f64>) -> PyResult<f64> {
        self.0.expected_poa(&psi).py()
    }

    fn __repr__(&self) -> String {
        format!(
            "NetworkParams(capacity={}, arrival={}, delay_weight={}, price_primary={}, price_secondary={})",
            self.0.capacity(),
            self.0.arrival(),
            self.0.delay_weight(),
            self.0.price_primary(),
            self.0.price_secondary()
        )
    }
}

#[pyclass(name = "PopulationConfig", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyPopulationConfig(chain::PopulationConfig);

#[pymethods]
impl PyPopulationConfig {
    #[new]
    #[pyo3(signature = (n, anchored_primary = 0, anchored_secondary = 0))]
    fn new(n: usize, anchored_primary: usize, anchored_secondary: usize) -> PyResult<Self> {
        chain::PopulationConfig::new(n, anchored_primary, anchored_secondary)
            .py()
            .map(Self)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn anchored_primary(&self) -> usize {
        self.0.anchored_primary()
    }

    #[getter]
    fn anchored_secondary(&self) -> usize {
        self.0.anchored_secondary()
    }
}

#[pyclass(name = "ImitationRule", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyImitationRule(netsel::ImitationRule);

#[pymethods]
impl PyImitationRule {
    #[staticmethod]
    fn fermi(beta: f64) -> PyResult<Self> {
        netsel::ImitationRule::fermi(beta).py().map(Self)
    }

    /// Fermi rule with `beta = ratio / beta_0` for this environment and size.
    #[staticmethod]
    fn fermi_ratio(ratio: f64, params: &PyNetworkParams, n: usize) -> PyResult<Self> {
        netsel::ImitationRule::fermi_from_spec(BetaSpec::Ratio(ratio), &params.0, n)
            .py()
            .map(Self)
    }

    #[staticmethod]
    #[pyo3(signature = (scale = 1.0))]
    fn pairwise_proportional(scale: f64) -> PyResult<Self> {
        netsel::ImitationRule::pairwise_proportional(scale)
            .py()
            .map(Self)
    }

    fn imitation_probability(&self, payoff_diff: f64) -> f64 {
        self.0.imitation_probability(payoff_diff)
    }

    fn is_noise_free(&self) -> bool {
        self.0.is_noise_free()
    }

    fn __repr__(&self) -> String {
        format!("ImitationRule.{}", self.0)
    }
}

#[pyclass(name = "TransitionKernel", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyTransitionKernel(chain::TransitionKernel);

#[pymethods]
impl PyTransitionKernel {
    #[staticmethod]
    fn build(
        params: &PyNetworkParams,
        population: &PyPopulationConfig,
        rule: &PyImitationRule,
    ) -> Self {
        Self(chain::build_kernel(&params.0, &population.0, &rule.0))
    }

    #[staticmethod]
    fn from_rates(up: Vec<f64>, down: Vec<f64>) -> PyResult<Self> {
        chain::TransitionKernel::from_rates(up, down).py().map(Self)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn up(&self) -> Vec<f64> {
        self.0.up().to_vec()
    }

    #[getter]
    fn down(&self) -> Vec<f64> {
        self.0.down().to_vec()
    }

    #[getter]
    fn stay(&self) -> Vec<f64> {
        self.0.stay().to_vec()
    }

    /// `"absorbing"`, `"irreducible"` or a diagnostic description.
    fn classify(&self) -> String {
        chain::classify(&self.0).to_string()
    }
}

#[pyclass(name = "StationaryDistribution", frozen)]
pub struct PyStationaryDistribution(chain::StationaryDistribution);

#[pymethods]
impl PyStationaryDistribution {
    #[getter]
    fn psi(&self) -> Vec<f64> {
        self.0.psi().to_vec()
    }

    #[getter]
    fn kind(&self) -> String {
        self.0.kind().to_string()
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    fn variance(&self) -> f64 {
        self.0.variance()
    }

    fn support(&self) -> Vec<usize> {
        self.0.support()
    }

    fn mode(&self) -> Vec<usize> {
        chain::distribution_mode(&self.0)
    }

    fn __len__(&self) -> usize {
        self.0.psi().len()
    }
}

#[pyfunction]
fn stationary_product(kernel: &PyTransitionKernel) -> PyResult<PyStationaryDistribution> {
    chain::stationary_product(&kernel.0)
        .py()
        .map(PyStationaryDistribution)
}

#[pyfunction]
fn stationary_noise_free(kernel: &PyTransitionKernel) -> PyResult<PyStationaryDistribution> {
    chain::stationary_noise_free(&kernel.0)
        .py()
        .map(PyStationaryDistribution)
}

/// `method` is `"balance"` or `"power"`.
#[pyfunction]
#[pyo3(signature = (kernel, method = "balance", max_iterations = 1_000_000, tolerance = 1e-13))]
fn stationary_eigen(
    kernel: &PyTransitionKernel,
    method: &str,
    max_iterations: usize,
    tolerance: f64,
) -> PyResult<PyStationaryDistribution> {
    let method = match method {
        "balance" => EigenMethod::Balance,
        "power" => EigenMethod::PowerIteration {
            max_iterations,
            tolerance,
        },
        other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
    };
    chain::stationary_eigen(&kernel.0, method)
        .py()
        .map(PyStationaryDistribution)
}

/// `(prob_absorb_at_0, prob_absorb_at_n, expected_steps)` from `initial`.
#[pyfunction]
fn absorption_analysis(kernel: &PyTransitionKernel, initial: usize) -> PyResult<(f64, f64, f64)> {
    let r = chain::absorption_analysis(&kernel.0, initial).py()?;
    Ok((r.prob_absorb_at_0, r.prob_absorb_at_n, r.expected_steps))
}

#[pyfunction]
#[pyo3(signature = (params, share, gain = 1.0))]
fn replicator_rhs(params: &PyNetworkParams, share: f64, gain: f64) -> PyResult<f64> {
    replicator::replicator_rhs(&params.0, share, gain).py()
}

#[pyfunction]
fn mean_dynamics_rhs(
    rule: &PyImitationRule,
    params: &PyNetworkParams,
    share: f64,
) -> PyResult<f64> {
    replicator::mean_dynamics_rhs(&rule.0, &params.0, share).py()
}

/// Integrates to the fixed point; returns `(times, shares)`.
#[pyfunction]
#[pyo3(signature = (params, x0, gain = 1.0, rtol = 1e-8, horizon = 1e7))]
fn integrate(
    py: Python<'_>,
    params: &PyNetworkParams,
    x0: f64,
    gain: f64,
    rtol: f64,
    horizon: f64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let options = IntegrationOptions {
        gain,
        rtol,
        horizon,
        ..IntegrationOptions::default()
    };
    let traj = py
        .detach(|| replicator::integrate(&params.0, x0, &options))
        .py()?;
    Ok(traj
        .samples
        .iter()
        .map(|s| (s.time, s.share_primary))
        .unzip())
}

fn initial_state(initial: Option<usize>) -> InitialState {
    initial.map_or(InitialState::UniformInterior, InitialState::State)
}

/// Occupancy frequencies after burn-in and the final state of each replica.
/// `initial=None` starts each replica uniformly in `1..N`.
#[pyfunction]
#[pyo3(signature = (kernel, steps, seed, burn_in = None, replicas = 1, initial = None))]
fn simulate(
    py: Python<'_>,
    kernel: &PyTransitionKernel,
    steps: u64,
    seed: u64,
    burn_in: Option<u64>,
    replicas: usize,
    initial: Option<usize>,
) -> PyResult<(Vec<f64>, Vec<usize>)> {
    let spec = SimulationSpec {
        seed,
        steps,
        burn_in: burn_in.unwrap_or_else(|| montecarlo::default_burn_in(kernel.0.n())),
        replicas,
        initial_state: initial_state(initial),
        decimation: None,
    };
    let out = py.detach(|| montecarlo::run(&spec, &kernel.0)).py()?;
    Ok((out.histogram.frequencies(), out.final_states))
}

/// `(fraction_at_0, fraction_at_n, mean_steps)` over replicas run until
/// absorption or `max_steps` events.
#[pyfunction]
#[pyo3(signature = (kernel, replicas, seed, max_steps = 100_000_000, initial = None))]
fn absorption_frequency(
    py: Python<'_>,
    kernel: &PyTransitionKernel,
    replicas: usize,
    seed: u64,
    max_steps: u64,
    initial: Option<usize>,
) -> PyResult<(f64, f64, f64)> {
    let spec = SimulationSpec {
        seed,
        steps: max_steps,
        burn_in: 0,
        replicas,
        initial_state: initial_state(initial),
        decimation: None,
    };
    let f = py
        .detach(|| montecarlo::absorption_frequency(&spec, &kernel.0))
        .py()?;
    Ok((f.fraction_at_0, f.fraction_at_n, f.mean_steps))
}

#[pymodule]
#[pyo3(name = "netsel")]
pub fn netsel_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NetselError", m.py().get_type::<NetselError>())?;
    m.add_class::<PyNetworkParams>()?;
    m.add_class::<PyPopulationConfig>()?;
    m.add_class::<PyImitationRule>()?;
    m.add_class::<PyTransitionKernel>()?;
    m.add_class::<PyStationaryDistribution>()?;
    m.add_function(wrap_pyfunction!(stationary_product, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_noise_free, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_eigen, m)?)?;
    m.add_function(wrap_pyfunction!(absorption_analysis, m)?)?;
    m.add_function(wrap_pyfunction!(replicator_rhs, m)?)?;
    m.add_function(wrap_pyfunction!(mean_dynamics_rhs, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(absorption_frequency, m)?)?;
    Ok(())
}
