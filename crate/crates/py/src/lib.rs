use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qtc_core::chain::ChainPartition;
use qtc_core::linalg::random::{random_density, stream_rng};
use qtc_core::linalg::{CMatrix, DensityState as CoreState, HermitianOp, RegisterShape};
use qtc_core::states::HypergraphHamiltonian;
use qtc_core::{concentration, curvature, dobrushin, harness, recovery, states, w1};

create_exception!(qtc, QtcError, PyValueError);

fn err(e: qtc_core::Error) -> PyErr {
    QtcError::new_err(e.to_string())
}

type Rows = Vec<Vec<Complex64>>;

fn to_matrix(rows: &Rows) -> PyResult<CMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(QtcError::new_err("matrix must be square"));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn to_rows(m: &CMatrix) -> Rows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Register with `sites` (default `0..n`) inferred from the matrix size.
fn shape_for(dim: usize, d: usize, sites: Option<Vec<usize>>) -> PyResult<RegisterShape> {
    let sites = match sites {
        Some(s) => s,
        None => {
            let mut n = 0;
            let mut size = 1;
            while size < dim {
                size *= d;
                n += 1;
            }
            if size != dim {
                return Err(QtcError::new_err(format!("dimension {dim} is not a power of {d}")));
            }
            (0..n).collect()
        }
    };
    let shape = RegisterShape::new(sites, d).map_err(err)?;
    if shape.dim() != dim {
        return Err(QtcError::new_err(format!("matrix dimension {dim} does not match the register ({})", shape.dim())));
    }
    Ok(shape)
}

/// Hermitian operator on a qudit register.
#[pyclass(module = "qtc", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Operator {
    inner: HermitianOp,
}

#[pymethods]
impl Operator {
    #[new]
    #[pyo3(signature = (matrix, sites=None, d=2))]
    fn new(matrix: Rows, sites: Option<Vec<usize>>, d: usize) -> PyResult<Self> {
        let m = to_matrix(&matrix)?;
        let shape = shape_for(m.nrows(), d, sites)?;
        Ok(Operator { inner: HermitianOp::new(shape, m).map_err(err)? })
    }

    fn matrix(&self) -> Rows {
        to_rows(self.inner.matrix())
    }

    #[getter]
    fn sites(&self) -> Vec<usize> {
        self.inner.shape().sites().to_vec()
    }

    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues()
    }

    fn trace_norm(&self) -> f64 {
        self.inner.trace_norm()
    }

    /// `(lower, upper)` bracket of the quantum Lipschitz constant.
    #[pyo3(signature = (refine=true))]
    fn lipschitz(&self, refine: bool) -> (f64, f64) {
        let b = w1::lip_const_with(&self.inner, &w1::LipOptions { refine, ..Default::default() });
        (b.lower, b.upper)
    }

    /// Certified W1 norm of a traceless operator as a dict.
    #[pyo3(signature = (gap_tol=1e-6))]
    fn w1_norm<'py>(&self, py: Python<'py>, gap_tol: f64) -> PyResult<Bound<'py, PyDict>> {
        let c = w1::w1_norm(&self.inner, &w1::W1Options { gap_tol, ..Default::default() }).map_err(err)?;
        certificate(py, &c)
    }

    fn __repr__(&self) -> String {
        format!("Operator(sites={:?}, d={})", self.inner.shape().sites(), self.inner.shape().local_dim())
    }
}

/// Density matrix on a qudit register.
#[pyclass(module = "qtc", frozen, skip_from_py_object)]
#[derive(Clone)]
struct State {
    inner: CoreState,
}

#[pymethods]
impl State {
    #[new]
    #[pyo3(signature = (matrix, sites=None, d=2))]
    fn new(matrix: Rows, sites: Option<Vec<usize>>, d: usize) -> PyResult<Self> {
        let op = Operator::new(matrix, sites, d)?;
        Ok(State { inner: CoreState::new(op.inner).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, d=2))]
    fn maximally_mixed(n: usize, d: usize) -> PyResult<Self> {
        let shape = RegisterShape::new((0..n).collect(), d).map_err(err)?;
        Ok(State { inner: CoreState::maximally_mixed(shape) })
    }

    /// Seeded random state of the given rank (full rank by default).
    #[staticmethod]
    #[pyo3(signature = (n, seed, rank=None, d=2))]
    fn random(n: usize, seed: u64, rank: Option<usize>, d: usize) -> PyResult<Self> {
        let shape = RegisterShape::new((0..n).collect(), d).map_err(err)?;
        let mut rng = stream_rng(seed, 0);
        let r = rank.unwrap_or(shape.dim());
        Ok(State { inner: random_density(&shape, r, &mut rng) })
    }

    #[staticmethod]
    fn gibbs(h: &Hamiltonian, beta: f64) -> PyResult<Self> {
        Ok(State { inner: states::gibbs(&h.inner, beta).map_err(err)?.state })
    }

    #[staticmethod]
    fn microcanonical(h: &Hamiltonian, energy: f64, delta: f64) -> PyResult<Self> {
        Ok(State { inner: states::microcanonical(&h.inner, energy, delta).map_err(err)? })
    }

    fn matrix(&self) -> Rows {
        to_rows(self.inner.matrix())
    }

    #[getter]
    fn sites(&self) -> Vec<usize> {
        self.inner.shape().sites().to_vec()
    }

    fn entropy(&self) -> f64 {
        self.inner.entropy()
    }

    fn marginal(&self, sites: Vec<usize>) -> PyResult<State> {
        Ok(State { inner: self.inner.marginal(&sites).map_err(err)? })
    }

    /// `λ·self + (1−λ)·other`.
    fn mix(&self, other: &State, weight: f64) -> PyResult<State> {
        Ok(State { inner: self.inner.mix(&other.inner, weight).map_err(err)? })
    }

    fn __repr__(&self) -> String {
        format!("State(sites={:?}, d={})", self.inner.shape().sites(), self.inner.shape().local_dim())
    }
}

/// Sum of hyperedge terms on a qudit register.
#[pyclass(module = "qtc", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Hamiltonian {
    inner: HypergraphHamiltonian,
}

#[pymethods]
impl Hamiltonian {
    /// `edges` is a list of `(sites, matrix)` pairs.
    #[new]
    #[pyo3(signature = (sites, edges, d=2))]
    fn new(sites: Vec<usize>, edges: Vec<(Vec<usize>, Rows)>, d: usize) -> PyResult<Self> {
        let shape = RegisterShape::new(sites, d).map_err(err)?;
        let mut terms = Vec::with_capacity(edges.len());
        for (s, rows) in edges {
            let m = to_matrix(&rows)?;
            let local = RegisterShape::new(s.clone(), d).map_err(err)?;
            terms.push((s, HermitianOp::new(local, m).map_err(err)?));
        }
        Ok(Hamiltonian { inner: HypergraphHamiltonian::new(shape, terms).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, coupling=1.0))]
    fn ising_chain(n: usize, coupling: f64) -> PyResult<Self> {
        Ok(Hamiltonian { inner: HypergraphHamiltonian::ising_chain(n, coupling).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, coupling=1.0))]
    fn ising_ring(n: usize, coupling: f64) -> PyResult<Self> {
        Ok(Hamiltonian { inner: HypergraphHamiltonian::ising_ring(n, coupling).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, field=1.0))]
    fn product_field(n: usize, field: f64) -> PyResult<Self> {
        Ok(Hamiltonian { inner: HypergraphHamiltonian::product_field(n, field).map_err(err)? })
    }

    fn operator(&self) -> Operator {
        Operator { inner: self.inner.matrix().clone() }
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    fn is_commuting(&self) -> bool {
        self.inner.is_commuting()
    }
}

fn certificate<'py>(py: Python<'py>, c: &w1::W1Certificate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("value_upper", c.value_upper)?;
    d.set_item("value_lower", c.value_lower)?;
    d.set_item("gap", c.gap)?;
    d.set_item("iterations", c.iterations)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (rho, sigma, gap_tol=1e-6))]
fn w1_distance<'py>(py: Python<'py>, rho: &State, sigma: &State, gap_tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let c = w1::w1_distance(&rho.inner, &sigma.inner, &w1::W1Options { gap_tol, ..Default::default() }).map_err(err)?;
    certificate(py, &c)
}

#[pyfunction]
fn rel_entropy(rho: &State, sigma: &State) -> f64 {
    states::rel_entropy(&rho.inner, &sigma.inner)
}

/// `(S(ρ_AB‖ω_AB) − S(ρ_A‖ω_A), ½‖ρ_AB − Φ(ρ_A)‖_1²)`.
#[pyfunction]
#[pyo3(signature = (rho, omega, a, b, tol=1e-8))]
fn recoverability_gap(rho: &State, omega: &State, a: Vec<usize>, b: Vec<usize>, tol: f64) -> PyResult<(f64, f64)> {
    recovery::recoverability_gap(&rho.inner, &omega.inner, &a, &b, tol).map_err(err)
}

/// Dobrushin coefficient over single-site blocks, bounded by diamond norms.
#[pyfunction]
#[pyo3(signature = (omega, tol=1e-8))]
fn eta_diamond(omega: &State, tol: f64) -> PyResult<f64> {
    let p = ChainPartition::sites(omega.inner.shape());
    Ok(dobrushin::eta_diamond(&omega.inner, &p, tol).map_err(err)?.eta)
}

/// TCI constant for a Markov chain with single-site blocks.
#[pyfunction]
fn tci_markov_bound(n: usize, eta: f64) -> PyResult<f64> {
    let shape = RegisterShape::qubits(n).map_err(err)?;
    dobrushin::tci_markov_bound(&ChainPartition::sites(&shape), eta).map_err(err)
}

/// `(lower, upper)` on the contraction coefficient of the averaged map.
#[pyfunction]
#[pyo3(signature = (h, beta, seed=0, restarts=8, sweeps=10))]
fn contraction_coefficient(h: &Hamiltonian, beta: f64, seed: u64, restarts: usize, sweeps: usize) -> PyResult<(f64, f64)> {
    let g = states::gibbs(&h.inner, beta).map_err(err)?;
    let opts = curvature::ContractionOptions { seed, restarts, sweeps, ..Default::default() };
    let k = curvature::contraction_coefficient(&g, &opts).map_err(err)?;
    Ok((k.lower, k.upper))
}

#[pyfunction]
fn beta_critical(degree: usize, local_dim: usize, max_term_norm: f64) -> PyResult<f64> {
    Ok(curvature::beta_critical(degree, local_dim, max_term_norm).map_err(err)?.beta_c)
}

#[pyfunction]
fn tci_curvature_bound(n: usize, degree: usize, kappa: f64) -> PyResult<f64> {
    curvature::tci_curvature_bound(n, degree, kappa).map_err(err)
}

/// Certified lower bound on the TCI constant from the dual formula.
#[pyfunction]
#[pyo3(signature = (omega, iterations=20, seed=0))]
fn tci_dual_lower(omega: &State, iterations: usize, seed: u64) -> PyResult<f64> {
    Ok(concentration::tci_dual_lower(&omega.inner, iterations, seed).map_err(err)?.value)
}

/// `(max W1 upper²/S, max W1 lower²/S, pass)` over seeded samples.
#[pyfunction]
#[pyo3(signature = (omega, constant, trials=20, seed=0))]
fn verify_tci_empirical(omega: &State, constant: f64, trials: usize, seed: u64) -> PyResult<(f64, f64, bool)> {
    let r = dobrushin::verify_tci_empirical(&omega.inner, constant, trials, seed, &Default::default()).map_err(err)?;
    Ok((r.max_ratio_upper, r.max_ratio_lower, r.pass))
}

#[pyfunction]
#[pyo3(signature = (o, omega, r, centered=true))]
fn tail_prob(o: &Operator, omega: &State, r: f64, centered: bool) -> f64 {
    concentration::tail_prob(&o.inner, &omega.inner, r, centered)
}

/// `(general, commuting or None)` Gaussian tail bounds.
#[pyfunction]
fn gaussian_tail_bound(o: &Operator, omega: &State, r: f64, c: f64) -> PyResult<(f64, Option<f64>)> {
    let g = concentration::gaussian_tail_bound(&o.inner, &omega.inner, r, c).map_err(err)?;
    Ok((g.general, g.commuting))
}

/// Runs a JSON config and returns `(report_json, csv_summary, pass)`.
#[pyfunction]
#[pyo3(signature = (text, seed=None, trials=None))]
fn run_config(text: &str, seed: Option<u64>, trials: Option<usize>) -> PyResult<(String, String, bool)> {
    let cfg = harness::parse_config(text).map_err(err)?;
    let opts = harness::RunOptions { seed, trials, ..Default::default() };
    let report = harness::run(&cfg, &opts);
    Ok((harness::emit_json(&report), harness::emit_csv(&report), report.pass))
}

#[pyfunction]
fn demo_config(name: &str) -> PyResult<String> {
    harness::demo_config(name).map(str::to_string).ok_or_else(|| QtcError::new_err(format!("unknown demo `{name}`")))
}

#[pymodule]
fn qtc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("QtcError", m.py().get_type::<QtcError>())?;
    m.add_class::<Operator>()?;
    m.add_class::<State>()?;
    m.add_class::<Hamiltonian>()?;
    m.add_function(wrap_pyfunction!(w1_distance, m)?)?;
    m.add_function(wrap_pyfunction!(rel_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(recoverability_gap, m)?)?;
    m.add_function(wrap_pyfunction!(eta_diamond, m)?)?;
    m.add_function(wrap_pyfunction!(tci_markov_bound, m)?)?;
    m.add_function(wrap_pyfunction!(contraction_coefficient, m)?)?;
    m.add_function(wrap_pyfunction!(beta_critical, m)?)?;
    m.add_function(wrap_pyfunction!(tci_curvature_bound, m)?)?;
    m.add_function(wrap_pyfunction!(tci_dual_lower, m)?)?;
    m.add_function(wrap_pyfunction!(verify_tci_empirical, m)?)?;
    m.add_function(wrap_pyfunction!(tail_prob, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_tail_bound, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(demo_config, m)?)?;
    Ok(())
}
