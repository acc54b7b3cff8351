//! Python bindings for `nrf-core`. Objects cross the boundary as wrapped
//! Rust values; everything can be read from and written to the same JSON
//! files the `nrfctl` CLI uses.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use nrf_core::dimpl::{self, RealizationBundle};
use nrf_core::factor::{self, youla_shift, DoublyCoprime};
use nrf_core::nalgebra::{Complex, DMatrix};
use nrf_core::nrfsyn::{self, CertMode, NrfPair, SparsityTriple};
use nrf_core::simkit::{self, ScenarioFile};
use nrf_core::{grid5, sstate, NrfError, RationalMatrix, StateSpace};

create_exception!(nrf_py, NrfException, PyException);

fn err(e: NrfError) -> PyErr {
    NrfException::new_err(e.to_string())
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[pyclass(name = "RationalMatrix", frozen, skip_from_py_object, module = "nrf_py")]
#[derive(Clone)]
struct PyRationalMatrix(RationalMatrix);

#[pymethods]
impl PyRationalMatrix {
    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        RationalMatrix::from_json(s).map(Self).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    /// Value at a point of the complex plane, as nested lists.
    fn eval(&self, z: Complex<f64>) -> PyResult<Vec<Vec<Complex<f64>>>> {
        let v = self.0.eval(z).map_err(err)?;
        Ok(v.row_iter().map(|r| r.iter().copied().collect()).collect())
    }

    fn is_stable(&self) -> bool {
        self.0.is_stable()
    }

    /// Unstable poles counted with McMillan multiplicity.
    fn unstable_poles(&self) -> PyResult<Vec<Complex<f64>>> {
        self.0.unstable_poles().map_err(err)
    }

    fn max_coeff_diff(&self, other: &Self) -> Option<f64> {
        self.0.max_coeff_diff(&other.0)
    }

    fn __repr__(&self) -> String {
        let (r, c) = self.0.shape();
        format!("RationalMatrix({r}x{c}, {})", self.0.domain().name())
    }
}

#[pyclass(name = "StateSpace", frozen, skip_from_py_object, module = "nrf_py")]
#[derive(Clone)]
struct PyStateSpace(StateSpace);

#[pymethods]
impl PyStateSpace {
    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        StateSpace::from_json(s).map(Self).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn order(&self) -> usize {
        self.0.order()
    }

    /// `(A, B, C, D)` as nested lists.
    fn matrices(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
        (rows_of(&self.0.a), rows_of(&self.0.b), rows_of(&self.0.c), rows_of(&self.0.d))
    }

    fn eigenvalues(&self) -> Vec<Complex<f64>> {
        self.0.eigenvalues()
    }

    fn minimal(&self) -> Self {
        Self(sstate::minimal(&self.0))
    }

    fn transfer_matrix(&self) -> PyRationalMatrix {
        PyRationalMatrix(sstate::ss_to_tf(&self.0))
    }

    fn __repr__(&self) -> String {
        format!("StateSpace(order={}, inputs={}, outputs={})", self.0.order(), self.0.inputs(), self.0.outputs())
    }
}

#[pyclass(name = "DoublyCoprime", frozen, skip_from_py_object, module = "nrf_py")]
#[derive(Clone)]
struct PyDcf(DoublyCoprime);

#[pymethods]
impl PyDcf {
    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        DoublyCoprime::from_json(s).map(Self).map_err(err)
    }

    /// Observer/state-feedback factorization with closed-loop `targets`
    /// (default: the domain's default target for every state). Stable modes
    /// that cannot be moved are kept when exact placement is impossible.
    #[staticmethod]
    #[pyo3(signature = (plant, targets = None))]
    fn from_state_space(plant: &PyStateSpace, targets: Option<Vec<Complex<f64>>>) -> PyResult<Self> {
        let sys = &plant.0;
        let targets =
            targets.unwrap_or_else(|| vec![Complex::new(sys.domain.default_target(), 0.0); sys.order()]);
        let (f, l) = match factor::place_gains(sys, &targets) {
            Err(NrfError::PlacementFailed(_)) => factor::stabilizing_gains(sys, &targets),
            other => other,
        }
        .map_err(err)?;
        factor::dcf_from_ss(sys, &f, &l).map(Self).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn bezout_residual(&self) -> PyResult<f64> {
        self.0.bezout_residual().map_err(err)
    }

    /// `M̃⁻¹Ñ`.
    fn plant(&self) -> PyResult<PyRationalMatrix> {
        self.0.plant().map(PyRationalMatrix).map_err(err)
    }

    #[getter]
    fn m(&self) -> PyRationalMatrix {
        PyRationalMatrix(self.0.m.clone())
    }

    #[getter]
    fn n(&self) -> PyRationalMatrix {
        PyRationalMatrix(self.0.n.clone())
    }
}

#[pyclass(name = "NrfPair", frozen, skip_from_py_object, module = "nrf_py")]
#[derive(Clone)]
struct PyNrfPair(NrfPair);

#[pymethods]
impl PyNrfPair {
    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        NrfPair::from_json(s).map(Self).map_err(err)
    }

    /// NRF pair of the controller parameterized by the stable `q`.
    #[staticmethod]
    fn from_dcf(dcf: &PyDcf, q: &PyRationalMatrix) -> PyResult<Self> {
        let shift = youla_shift(&dcf.0, &q.0).map_err(err)?;
        nrfsyn::nrf_from_dcf(&dcf.0, &shift).map(Self).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn phi(&self) -> PyRationalMatrix {
        PyRationalMatrix(self.0.phi().clone())
    }

    #[getter]
    fn gamma(&self) -> PyRationalMatrix {
        PyRationalMatrix(self.0.gamma().clone())
    }

    fn controller(&self) -> PyResult<PyRationalMatrix> {
        self.0.controller().map(PyRationalMatrix).map_err(err)
    }

    /// Whether `Phi` and `Gamma` fit the `Y` and `X` patterns of a
    /// patterns JSON document.
    fn conforms(&self, patterns_json: &str) -> PyResult<bool> {
        let t = SparsityTriple::from_json(patterns_json).map_err(err)?;
        Ok(self.0.phi().conforms(&t.y).map_err(err)? && self.0.gamma().conforms(&t.x).map_err(err)?)
    }
}

/// Unstable poles of the witness for `mode` ("mr2" or "mr3").
#[pyfunction]
fn certificate_poles(dcf: &PyDcf, q: &PyRationalMatrix, mode: &str) -> PyResult<Vec<Complex<f64>>> {
    let mode: CertMode = mode.parse().map_err(err)?;
    let shift = youla_shift(&dcf.0, &q.0).map_err(err)?;
    let cert = nrfsyn::certificate(&dcf.0, &shift, mode).map_err(err)?;
    Ok(cert.unstable_poles)
}

fn groups(grouping: Option<&str>) -> PyResult<Option<Vec<Vec<usize>>>> {
    grouping.map(dimpl::parse_grouping).transpose().map_err(err)
}

/// Per-row (or grouped, e.g. `"1;2,3;4;5"`) realization. Returns the
/// sub-controller orders and the bundle JSON.
#[pyfunction]
#[pyo3(signature = (nrf, grouping = None))]
fn realize(nrf: &PyNrfPair, grouping: Option<&str>) -> PyResult<(Vec<usize>, String)> {
    let g = groups(grouping)?;
    let rows = dimpl::realize_rows(&nrf.0, g.as_deref()).map_err(err)?;
    let orders = rows.iter().map(|r| r.order()).collect();
    Ok((orders, RealizationBundle::from_rows(&rows).to_json()))
}

/// Eigenvalues of the closed-loop state matrix of `plant` with the
/// distributed controller realized from `nrf`.
#[pyfunction]
#[pyo3(signature = (plant, nrf, grouping = None))]
fn closed_loop_eigenvalues(plant: &PyStateSpace, nrf: &PyNrfPair, grouping: Option<&str>) -> PyResult<Vec<Complex<f64>>> {
    let g = groups(grouping)?;
    let rows = dimpl::realize_rows(&nrf.0, g.as_deref()).map_err(err)?;
    let ctrl = dimpl::assemble(&rows).map_err(err)?;
    let cl = dimpl::closed_loop_state_matrix(&plant.0, &ctrl).map_err(err)?;
    Ok(cl.eigenvalues())
}

/// Runs a scenario JSON document and returns the trace as CSV text.
#[pyfunction]
#[pyo3(signature = (scenario_json, seed = None))]
fn simulate(scenario_json: &str, seed: Option<u64>) -> PyResult<String> {
    let mut file = ScenarioFile::from_json(scenario_json).map_err(err)?;
    if let Some(s) = seed {
        file.spec.seed = s;
    }
    let trace = simkit::simulate(&file.build().map_err(err)?).map_err(err)?;
    trace.to_csv_string().map_err(err)
}

#[pyfunction]
fn grid5_plant() -> PyStateSpace {
    PyStateSpace(grid5::plant_ss())
}

#[pyfunction]
fn grid5_plant_tfm() -> PyRationalMatrix {
    PyRationalMatrix(grid5::plant_tfm())
}

#[pyfunction]
fn grid5_dcf() -> PyDcf {
    PyDcf(grid5::reference_dcf())
}

#[pyfunction]
fn grid5_q() -> PyRationalMatrix {
    PyRationalMatrix(grid5::youla_q())
}

#[pyfunction]
fn grid5_patterns_json() -> String {
    grid5::patterns().to_json()
}

#[pyfunction]
#[pyo3(signature = (seed = 42, horizon = 100))]
fn grid5_scenario_json(seed: u64, horizon: usize) -> PyResult<String> {
    let dcf = grid5::reference_dcf();
    let shift = youla_shift(&dcf, &grid5::youla_q()).map_err(err)?;
    let nrf = nrfsyn::nrf_from_dcf(&dcf, &shift).map_err(err)?;
    let file = ScenarioFile { spec: grid5::scenario_spec(seed, horizon), plant: grid5::plant_ss(), nrf, grouping: None };
    Ok(file.to_json())
}

#[pymodule]
fn nrf_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NrfException", m.py().get_type::<NrfException>())?;
    m.add_class::<PyRationalMatrix>()?;
    m.add_class::<PyStateSpace>()?;
    m.add_class::<PyDcf>()?;
    m.add_class::<PyNrfPair>()?;
    m.add_function(wrap_pyfunction!(certificate_poles, m)?)?;
    m.add_function(wrap_pyfunction!(realize, m)?)?;
    m.add_function(wrap_pyfunction!(closed_loop_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(grid5_plant, m)?)?;
    m.add_function(wrap_pyfunction!(grid5_plant_tfm, m)?)?;
    m.add_function(wrap_pyfunction!(grid5_dcf, m)?)?;
    m.add_function(wrap_pyfunction!(grid5_q, m)?)?;
    m.add_function(wrap_pyfunction!(grid5_patterns_json, m)?)?;
    m.add_function(wrap_pyfunction!(grid5_scenario_json, m)?)?;
    Ok(())
}
