//! Python bindings for the coupled entropy library.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

use coupled_entropy::algebra::{self, CouplingContext};
use coupled_entropy::distributions::{self as dist, Family};
use coupled_entropy::entropy as ent;
use coupled_entropy::escort::{self, DiscreteDist};
use coupled_entropy::{maxent, sde, thermo, Error};

fn py_err(e: Error) -> PyErr {
    if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

type PyRes<T> = PyResult<T>;

fn ctx(kappa: f64, alpha: f64, dim: u32) -> PyRes<CouplingContext> {
    CouplingContext::new(kappa, alpha, dim).map_err(py_err)
}

fn discrete(p: Vec<f64>, dim: u32) -> PyRes<DiscreteDist> {
    DiscreteDist::new(p, dim).map_err(py_err)
}

#[pyfunction]
fn coupled_exp(x: f64, kappa: f64) -> f64 {
    algebra::coupled_exp(x, kappa)
}

#[pyfunction]
fn coupled_log(x: f64, kappa: f64) -> PyRes<f64> {
    algebra::coupled_log(x, kappa).map_err(py_err)
}

#[pyfunction]
fn coupled_sum(x: f64, y: f64, kappa: f64) -> f64 {
    algebra::coupled_sum(x, y, kappa)
}

#[pyfunction]
#[pyo3(signature = (kappa, alpha = 1.0, dim = 1))]
fn q_of(kappa: f64, alpha: f64, dim: u32) -> PyRes<f64> {
    Ok(algebra::q_of(&ctx(kappa, alpha, dim)?))
}

#[pyfunction]
#[pyo3(signature = (kappa, alpha = 1.0, dim = 1))]
fn risk_aversion(kappa: f64, alpha: f64, dim: u32) -> PyRes<f64> {
    algebra::risk_aversion(&ctx(kappa, alpha, dim)?).map_err(py_err)
}

/// Shannon, Tsallis, normalized Tsallis and coupled entropy.
#[pyclass(get_all, frozen, skip_from_py_object)]
struct EntropyReport {
    shannon: f64,
    tsallis: f64,
    normalized_tsallis: f64,
    coupled: f64,
}

#[pymethods]
impl EntropyReport {
    fn __repr__(&self) -> String {
        format!(
            "EntropyReport(shannon={}, tsallis={}, normalized_tsallis={}, coupled={})",
            self.shannon, self.tsallis, self.normalized_tsallis, self.coupled
        )
    }
}

impl From<ent::EntropyReport> for EntropyReport {
    fn from(r: ent::EntropyReport) -> Self {
        Self { shannon: r.shannon, tsallis: r.tsallis, normalized_tsallis: r.normalized_tsallis, coupled: r.coupled }
    }
}

#[pyfunction]
#[pyo3(signature = (p, kappa, alpha = 1.0, dim = 1))]
fn entropy_report(p: Vec<f64>, kappa: f64, alpha: f64, dim: u32) -> PyRes<EntropyReport> {
    ent::entropy_report(&discrete(p, dim)?, &ctx(kappa, alpha, dim)?).map(Into::into).map_err(py_err)
}

#[pyfunction]
#[pyo3(name = "coupled_entropy", signature = (p, kappa, dim = 1))]
fn discrete_coupled_entropy(p: Vec<f64>, kappa: f64, dim: u32) -> PyRes<f64> {
    ent::coupled_entropy_i(&discrete(p, dim)?, &ctx(kappa, 1.0, dim)?).map_err(py_err)
}

#[pyfunction]
fn closed_form_entropies_gpd(sigma: f64, kappa: f64) -> PyRes<EntropyReport> {
    ent::closed_form_entropies_gpd(sigma, kappa).map(Into::into).map_err(py_err)
}

#[pyfunction]
#[pyo3(name = "escort", signature = (p, q))]
fn escort_probs(p: Vec<f64>, q: f64) -> PyRes<Vec<f64>> {
    Ok(escort::escort_discrete(&discrete(p, 1)?, q).map_err(py_err)?.probs().to_vec())
}

/// Member of the coupled exponential family.
#[pyclass(name = "CoupledDistribution", frozen)]
struct PyDistribution {
    inner: dist::CoupledDistribution,
}

#[pymethods]
impl PyDistribution {
    /// `family` is one of "exponential", "weibull", "gaussian", "stretched".
    #[new]
    #[pyo3(signature = (family, mu, sigma, kappa, alpha = None))]
    fn new(family: &str, mu: f64, sigma: f64, kappa: f64, alpha: Option<f64>) -> PyRes<Self> {
        let family = match family {
            "exponential" | "gpd" => Family::Exponential,
            "weibull" => Family::Weibull,
            "gaussian" => Family::Gaussian,
            "stretched" => Family::Stretched {
                alpha: alpha.ok_or_else(|| PyValueError::new_err("stretched family needs alpha"))?,
            },
            other => return Err(PyValueError::new_err(format!("unknown family {other:?}"))),
        };
        Ok(Self { inner: dist::CoupledDistribution::new(family, mu, sigma, kappa).map_err(py_err)? })
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa()
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma()
    }

    fn density(&self, x: f64) -> f64 {
        self.inner.density(x)
    }

    fn survival(&self, x: f64) -> PyRes<f64> {
        self.inner.survival(x).map_err(py_err)
    }

    fn cdf(&self, x: f64) -> PyRes<f64> {
        self.inner.cdf(x).map_err(py_err)
    }

    /// Inverse survival function.
    fn quantile(&self, u: f64) -> PyRes<f64> {
        self.inner.quantile(u).map_err(py_err)
    }

    fn sample(&self, n: usize, seed: u64) -> PyRes<Vec<f64>> {
        self.inner.sample(n, seed).map_err(py_err)
    }

    fn ie_moment(&self, m: u32) -> PyRes<f64> {
        escort::ie_moment(&self.inner, m).map_err(py_err)
    }

    /// Entropies by quadrature.
    #[pyo3(signature = (dim = 1))]
    fn entropies(&self, dim: u32) -> PyRes<EntropyReport> {
        let c = ctx(self.inner.kappa(), self.inner.alpha(), dim)?;
        ent::entropy_report_continuous(&self.inner, &c).map(Into::into).map_err(py_err)
    }
}

#[pyfunction]
fn partition_function(energies: Vec<f64>, beta: f64, kappa: f64) -> PyRes<f64> {
    thermo::partition_function(&thermo::Ensemble::new(energies, beta, kappa).map_err(py_err)?).map_err(py_err)
}

#[pyfunction]
fn internal_energy(energies: Vec<f64>, beta: f64, kappa: f64) -> PyRes<f64> {
    thermo::internal_energy(&thermo::Ensemble::new(energies, beta, kappa).map_err(py_err)?).map_err(py_err)
}

/// Returns `(violations, max_delta_h, stationarity_residual)`.
#[pyfunction]
#[pyo3(signature = (sigma, kappa, trials = 100, seed = 7))]
fn maxent_check(sigma: f64, kappa: f64, trials: usize, seed: u64) -> PyRes<(usize, f64, Option<f64>)> {
    let r = maxent::maxent_check(sigma, kappa, trials, seed).map_err(py_err)?;
    Ok((r.violations, r.max_delta_h, r.stationarity_residual))
}

/// Stationary samples of the multiplicative-noise process.
#[pyfunction]
#[pyo3(signature = (a, m, tau, dt, n_steps, n_paths, seed, thin = None))]
#[allow(clippy::too_many_arguments)]
fn simulate_sde(
    py: Python<'_>,
    a: f64,
    m: f64,
    tau: f64,
    dt: f64,
    n_steps: u64,
    n_paths: u64,
    seed: u64,
    thin: Option<u64>,
) -> PyRes<Vec<f64>> {
    let mut cfg = sde::SdeConfig::new(a, m, tau, dt, n_steps, n_paths, seed).map_err(py_err)?;
    if let Some(t) = thin {
        cfg = cfg.with_thin(t);
    }
    py.detach(|| sde::simulate(&cfg)).map_err(py_err)
}

/// `(kappa, sigma)` of the stationary coupled Gaussian.
#[pyfunction]
fn sde_theory(a: f64, m: f64, tau: f64) -> PyRes<(f64, f64)> {
    let cfg = sde::SdeConfig::new(a, m, tau, 1e-6, 1, 1, 0).map_err(py_err)?;
    let t = sde::theoretical_params(&cfg);
    Ok((t.kappa, t.sigma))
}

#[pymodule]
fn pycoupled(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<EntropyReport>()?;
    m.add_class::<PyDistribution>()?;
    m.add_function(wrap_pyfunction!(coupled_exp, m)?)?;
    m.add_function(wrap_pyfunction!(coupled_log, m)?)?;
    m.add_function(wrap_pyfunction!(coupled_sum, m)?)?;
    m.add_function(wrap_pyfunction!(q_of, m)?)?;
    m.add_function(wrap_pyfunction!(risk_aversion, m)?)?;
    m.add_function(wrap_pyfunction!(entropy_report, m)?)?;
    m.add_function(wrap_pyfunction!(discrete_coupled_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_entropies_gpd, m)?)?;
    m.add_function(wrap_pyfunction!(escort_probs, m)?)?;
    m.add_function(wrap_pyfunction!(partition_function, m)?)?;
    m.add_function(wrap_pyfunction!(internal_energy, m)?)?;
    m.add_function(wrap_pyfunction!(maxent_check, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_sde, m)?)?;
    m.add_function(wrap_pyfunction!(sde_theory, m)?)?;
    Ok(())
}
