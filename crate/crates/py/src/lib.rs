//! Python bindings: two-level parameters, general models, steady states,
//! spectra, propagation, the Lyapunov function and the reference cases.
//!
//! Matrices cross the boundary as lists of rows of Python `complex`.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pumped_core::dynamics::{
    integrate_direct_at, normalize_lyapunov, propagate_spectral, steady_state, Trajectory,
};
use pumped_core::ensemble::{accumulate_for_model, stencil_times, verify_master_equation};
use pumped_core::model::{build_superoperator, validate, DensityMatrix, ModelSpec, PumpMatrix, RelaxationSpec};
use pumped_core::spectral::{build_metric, decompose_default, verify_similarity};
use pumped_core::twolevel::{
    analytic_population_difference, eta_squared, reference_case, reference_cases as bundled_cases, to_model,
    to_reversed_order, TwoLevelParams,
};
use pumped_core::{ComplexMatrix, Error, C64};

type Rows = Vec<Vec<C64>>;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Validation(_)
        | Error::Domain(_)
        | Error::Dimension(_)
        | Error::UnboundedGrowth(_)
        | Error::UnsupportedRelaxation(_)
        | Error::InvalidFixture(_)
        | Error::Trajectory(_) => PyValueError::new_err(e.to_string()),
        _ => PyArithmeticError::new_err(e.to_string()),
    }
}

fn to_rows(m: &ComplexMatrix) -> Rows {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn from_rows(rows: &Rows) -> PyResult<ComplexMatrix> {
    ComplexMatrix::from_rows(rows).map_err(py_err)
}

#[pyclass(name = "TwoLevelParams", module = "pumped", skip_from_py_object)]
#[derive(Clone)]
struct PyTwoLevelParams {
    inner: TwoLevelParams,
}

#[pymethods]
impl PyTwoLevelParams {
    #[new]
    #[pyo3(signature = (*, decay_1, decay_2, coherence_decay, pump_1 = 0.0, pump_2 = 0.0, pump_21 = C64::new(0.0, 0.0), detuning = 0.0, coupling_v = 0.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        decay_1: f64,
        decay_2: f64,
        coherence_decay: f64,
        pump_1: f64,
        pump_2: f64,
        pump_21: C64,
        detuning: f64,
        coupling_v: f64,
    ) -> Self {
        Self {
            inner: TwoLevelParams {
                pump_1,
                pump_2,
                pump_21,
                decay_1,
                decay_2,
                coherence_decay,
                detuning,
                coupling: coupling_v,
            },
        }
    }

    /// Parameters of one of the bundled reference cases (1-4).
    #[staticmethod]
    fn reference_case(case_id: u32) -> PyResult<Self> {
        Ok(Self {
            inner: reference_case(case_id).map_err(py_err)?.params,
        })
    }

    fn get(&self, name: &str) -> PyResult<f64> {
        self.inner
            .get(name)
            .ok_or_else(|| PyValueError::new_err(format!("unknown parameter `{name}`")))
    }

    fn set(&mut self, name: &str, value: f64) -> PyResult<()> {
        self.inner.set(name, value).map_err(py_err)
    }

    /// Physical constraints the parameters break, empty when valid.
    fn violations(&self) -> Vec<String> {
        self.inner.violations()
    }

    fn model(&self) -> PyResult<PyModel> {
        Ok(PyModel {
            inner: to_model(&self.inner).map_err(py_err)?,
        })
    }

    /// Closed-form steady `ρ22 - ρ11` (requires both decay rates positive).
    fn analytic_population_difference(&self) -> PyResult<f64> {
        analytic_population_difference(&self.inner).map_err(py_err)
    }

    fn eta_squared(&self) -> PyResult<f64> {
        eta_squared(&self.inner).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "TwoLevelParams(pump_1={}, pump_2={}, pump_21={}, decay_1={}, decay_2={}, coherence_decay={}, detuning={}, coupling_v={})",
            p.pump_1, p.pump_2, p.pump_21, p.decay_1, p.decay_2, p.coherence_decay, p.detuning, p.coupling
        )
    }
}

#[pyclass(name = "Model", module = "pumped", skip_from_py_object)]
#[derive(Clone)]
struct PyModel {
    inner: ModelSpec,
}

impl PyModel {
    fn density(&self, rows: &Rows) -> PyResult<DensityMatrix> {
        DensityMatrix::new(from_rows(rows)?).map_err(py_err)
    }
}

#[pymethods]
impl PyModel {
    /// Model with lifetime-broadened coherences, or with explicit coherence
    /// decay rates when `coherence_decay` is given.
    #[new]
    #[pyo3(signature = (hamiltonian, decay, pump = None, coherence_decay = None))]
    fn new(
        hamiltonian: Rows,
        decay: Vec<f64>,
        pump: Option<Rows>,
        coherence_decay: Option<Vec<Vec<f64>>>,
    ) -> PyResult<Self> {
        let h = from_rows(&hamiltonian)?;
        let n = h.rows();
        let relaxation = match coherence_decay {
            Some(c) => RelaxationSpec::decay(decay, c).map_err(py_err)?,
            None => RelaxationSpec::lifetime_broadened(decay),
        };
        let pump = match pump {
            Some(p) => PumpMatrix::new(from_rows(&p)?).map_err(py_err)?,
            None => PumpMatrix::zeros(n),
        };
        Ok(Self {
            inner: ModelSpec::new(h, relaxation, pump).map_err(py_err)?,
        })
    }

    #[getter]
    fn levels(&self) -> usize {
        self.inner.dim()
    }

    /// `[(name, passed, detail), ...]`
    fn validate(&self) -> Vec<(String, bool, String)> {
        validate(&self.inner)
            .checks
            .into_iter()
            .map(|c| (c.name.to_string(), c.passed, c.detail))
            .collect()
    }

    /// The Liouvillian in row-major vectorization.
    fn superoperator(&self) -> PyResult<Rows> {
        Ok(to_rows(build_superoperator(&self.inner).map_err(py_err)?.matrix()))
    }

    fn steady_state(&self) -> PyResult<Rows> {
        let l = build_superoperator(&self.inner).map_err(py_err)?;
        Ok(to_rows(steady_state(&l, self.inner.pump()).map_err(py_err)?.matrix()))
    }

    /// Two-level steady state as `[ρ22, ρ21, ρ12, ρ11]`.
    fn steady_state_reversed(&self) -> PyResult<Vec<C64>> {
        if self.inner.dim() != 2 {
            return Err(PyValueError::new_err("reversed ordering is defined for two levels"));
        }
        let l = build_superoperator(&self.inner).map_err(py_err)?;
        let rho0 = steady_state(&l, self.inner.pump()).map_err(py_err)?;
        Ok(to_reversed_order(&rho0.vectorize()).iter().copied().collect())
    }

    fn eigenvalues(&self) -> PyResult<Vec<C64>> {
        let l = build_superoperator(&self.inner).map_err(py_err)?;
        Ok(decompose_default(&l).map_err(py_err)?.eigenvalues().to_vec())
    }

    /// Residuals of the spectral decomposition and the metric operator.
    fn spectral_residuals<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let l = build_superoperator(&self.inner).map_err(py_err)?;
        let dec = decompose_default(&l).map_err(py_err)?;
        let m = build_metric(&dec).map_err(py_err)?;
        let sim = verify_similarity(&l, &dec, &m);
        let d = PyDict::new(py);
        d.set_item("similarity", sim.similarity)?;
        d.set_item("rearranged_similarity", sim.rearranged)?;
        d.set_item("biorthonormality", dec.biorthonormality_residual())?;
        d.set_item("completeness", dec.completeness_residual())?;
        d.set_item("metric_inverse", m.inverse_residual())?;
        Ok(d)
    }

    /// States at `times` from `initial`, by eigenmode expansion
    /// (`"spectral"`) or fixed-step RK4 (`"direct"`).
    #[pyo3(signature = (initial, times, method = "spectral", dt = 1e-3))]
    fn propagate(&self, initial: Rows, times: Vec<f64>, method: &str, dt: f64) -> PyResult<Vec<Rows>> {
        let init = self.density(&initial)?;
        let l = build_superoperator(&self.inner).map_err(py_err)?;
        let traj: Trajectory = match method {
            "spectral" => {
                let dec = decompose_default(&l).map_err(py_err)?;
                let rho0 = steady_state(&l, self.inner.pump()).map_err(py_err)?;
                propagate_spectral(&dec, &rho0, &init, &times).map_err(py_err)?
            }
            "direct" => integrate_direct_at(&l, self.inner.pump(), &init, dt, &times).map_err(py_err)?,
            other => {
                return Err(PyValueError::new_err(format!(
                    "method must be \"spectral\" or \"direct\", got {other:?}"
                )))
            }
        };
        Ok(traj.states().iter().map(|s| to_rows(s.matrix())).collect())
    }

    /// `M_Ω(ρ(t) - ρ₀)` at `times`, divided by its value at the first time
    /// when `normalized`.
    #[pyo3(signature = (initial, times, normalized = true))]
    fn lyapunov(&self, initial: Rows, times: Vec<f64>, normalized: bool) -> PyResult<Vec<f64>> {
        let init = self.density(&initial)?;
        let l = build_superoperator(&self.inner).map_err(py_err)?;
        let dec = decompose_default(&l).map_err(py_err)?;
        let m = build_metric(&dec).map_err(py_err)?;
        let rho0 = steady_state(&l, self.inner.pump()).map_err(py_err)?;
        let traj = propagate_spectral(&dec, &rho0, &init, &times)
            .and_then(|t| t.with_lyapunov(&m, &rho0))
            .map_err(py_err)?;
        let values = traj.lyapunov_values().expect("attached above");
        Ok(if normalized {
            normalize_lyapunov(values)
        } else {
            values.to_vec()
        })
    }

    /// Density matrix of the continuously injected ensemble at `times`.
    #[pyo3(signature = (times, quad_step = 1e-3))]
    fn ensemble(&self, times: Vec<f64>, quad_step: f64) -> PyResult<Vec<Rows>> {
        let res = accumulate_for_model(&self.inner, &times, quad_step).map_err(py_err)?;
        Ok(res.states.iter().map(|s| to_rows(s.matrix())).collect())
    }

    /// Largest master-equation residual of the injected ensemble, from
    /// centered differences of width `quad_step` around each of `centers`.
    #[pyo3(signature = (centers, quad_step = 1e-3))]
    fn ensemble_residual(&self, centers: Vec<f64>, quad_step: f64) -> PyResult<f64> {
        let res = accumulate_for_model(&self.inner, &stencil_times(&centers, quad_step), quad_step)
            .map_err(py_err)?;
        verify_master_equation(&res, &self.inner).map_err(py_err)
    }
}

/// The bundled reference cases as dictionaries.
#[pyfunction]
fn reference_cases(py: Python<'_>) -> PyResult<Vec<Bound<'_, PyDict>>> {
    bundled_cases()
        .into_iter()
        .map(|f| {
            let d = PyDict::new(py);
            d.set_item("case_id", f.case_id)?;
            d.set_item("params", PyTwoLevelParams { inner: f.params })?;
            d.set_item("steady_state_reversed", f.steady_state.to_vec())?;
            d.set_item("eigenvalues", f.eigenvalues.to_vec())?;
            Ok(d)
        })
        .collect()
}

/// `ρ22 - ρ11` of a 2x2 density matrix.
#[pyfunction]
fn population_difference(rho: Rows) -> PyResult<f64> {
    let rho = DensityMatrix::new(from_rows(&rho)?).map_err(py_err)?;
    if rho.dim() != 2 {
        return Err(PyValueError::new_err("expected a 2x2 density matrix"));
    }
    Ok(pumped_core::twolevel::population_difference(&rho))
}

#[pymodule]
fn pumped(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTwoLevelParams>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(reference_cases, m)?)?;
    m.add_function(wrap_pyfunction!(population_difference, m)?)?;
    Ok(())
}
