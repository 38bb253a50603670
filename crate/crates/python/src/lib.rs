//! Python bindings for `powres`.
//!
//! Domain errors raise `ValueError`; exceeded size caps raise
//! `powres.ScaleLimitError` (an `OverflowError`). Caps honour the same
//! environment variables as the command line.

use num_complex::Complex64;
use num_rational::Ratio;
use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyOverflowError, PyValueError};
use pyo3::prelude::*;

use powres::{sweep, Caps, Error};

create_exception!(powres, ScaleLimitError, PyOverflowError);

fn to_py(err: Error) -> PyErr {
    match err {
        e if e.is_scale_limit() => ScaleLimitError::new_err(e.to_string()),
        Error::Io(e) => PyOSError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn caps() -> PyResult<Caps> {
    Caps::from_env().map_err(PyValueError::new_err)
}

fn context(p: u64) -> PyResult<powres::PrimeContext> {
    powres::build_prime_context(p).map_err(to_py)
}

fn ratio(r: &Ratio<u128>) -> (u128, u128) {
    (*r.numer(), *r.denom())
}

#[pyclass(name = "PrimeContext", module = "powres", frozen, skip_from_py_object)]
struct PyPrimeContext(powres::PrimeContext);

#[pymethods]
impl PyPrimeContext {
    #[new]
    fn new(p: u64) -> PyResult<Self> {
        context(p).map(Self)
    }

    #[getter]
    fn p(&self) -> u64 {
        self.0.p()
    }

    #[getter]
    fn g(&self) -> u64 {
        self.0.g()
    }

    /// Factorization of p - 1 as (prime, exponent) pairs.
    #[getter]
    fn factors(&self) -> Vec<(u64, u32)> {
        self.0.factors().to_vec()
    }

    fn order_of(&self, a: u64) -> u64 {
        self.0.order_of(a)
    }

    fn __repr__(&self) -> String {
        format!("PrimeContext(p={}, g={})", self.0.p(), self.0.g())
    }
}

#[pyclass(name = "KResult", module = "powres", frozen, skip_from_py_object)]
struct PyKResult(powres::KResult);

#[pymethods]
impl PyKResult {
    #[getter]
    fn p(&self) -> u64 {
        self.0.p
    }

    #[getter]
    fn n(&self) -> u64 {
        self.0.n
    }

    #[getter]
    fn k(&self) -> u64 {
        self.0.k
    }

    /// (numerator, denominator)
    #[getter]
    fn lower(&self) -> (u128, u128) {
        ratio(&self.0.lower)
    }

    #[getter]
    fn upper_exclusive(&self) -> (u128, u128) {
        ratio(&self.0.upper_exclusive)
    }

    /// "pass", "fail" or "skipped" (n = 1).
    #[getter]
    fn sandwich(&self) -> &'static str {
        match self.0.sandwich() {
            powres::Sandwich::Pass => "pass",
            powres::Sandwich::Fail => "fail",
            powres::Sandwich::Skipped => "skipped",
        }
    }

    fn __repr__(&self) -> String {
        format!("KResult(p={}, n={}, k={})", self.0.p, self.0.n, self.0.k)
    }
}

#[pyclass(name = "Subgroup", module = "powres", frozen, skip_from_py_object)]
struct PySubgroup {
    ctx: powres::PrimeContext,
    spec: powres::SubgroupSpec,
}

#[pymethods]
impl PySubgroup {
    #[getter]
    fn p(&self) -> u64 {
        self.spec.p()
    }

    #[getter]
    fn order(&self) -> u64 {
        self.spec.order()
    }

    #[getter]
    fn generator(&self) -> u64 {
        self.spec.generator()
    }

    /// Elements in generation order, or None past the enumeration cap.
    #[getter]
    fn elements(&self) -> Option<Vec<u64>> {
        self.spec.elements().map(<[u64]>::to_vec)
    }

    fn __contains__(&self, x: u64) -> bool {
        self.spec.contains(x)
    }

    fn __len__(&self) -> usize {
        self.spec.order() as usize
    }

    fn __repr__(&self) -> String {
        format!("Subgroup(p={}, order={})", self.spec.p(), self.spec.order())
    }
}

#[pyclass(name = "ExpSumProfile", module = "powres", frozen, skip_from_py_object)]
struct PyExpSumProfile(powres::ExpSumProfile);

#[pymethods]
impl PyExpSumProfile {
    #[getter]
    fn p(&self) -> u64 {
        self.0.p
    }

    #[getter]
    fn subgroup_order(&self) -> u64 {
        self.0.subgroup_order
    }

    #[getter]
    fn coset_values(&self) -> Vec<(u64, Complex64)> {
        self.0.coset_values.clone()
    }

    #[getter]
    fn max_magnitude(&self) -> f64 {
        self.0.max_magnitude
    }

    #[getter]
    fn argmax_a(&self) -> u64 {
        self.0.argmax_a
    }

    #[getter]
    fn parseval_residual(&self) -> f64 {
        self.0.parseval_residual
    }

    #[getter]
    fn ratio(&self) -> f64 {
        self.0.ratio()
    }

    fn empirical_delta(&self) -> PyResult<f64> {
        powres::empirical_delta(&self.0).map_err(to_py)
    }
}

#[pyclass(name = "Decomposition", module = "powres", frozen, skip_from_py_object)]
struct PyDecomposition(powres::DecompositionResult);

#[pymethods]
impl PyDecomposition {
    #[getter]
    fn m(&self) -> u64 {
        self.0.m
    }

    #[getter]
    fn radius(&self) -> u64 {
        self.0.radius
    }

    #[getter]
    fn exact_count(&self) -> u64 {
        self.0.exact_count
    }

    #[getter]
    fn main_term(&self) -> f64 {
        self.0.main_term
    }

    #[getter]
    fn error_term(&self) -> f64 {
        self.0.error_term
    }

    #[getter]
    fn reconstruction(&self) -> f64 {
        self.0.reconstruction
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.0.residual()
    }
}

#[pyclass(name = "SweepRow", module = "powres", frozen, skip_from_py_object)]
struct PySweepRow(sweep::SweepRow);

impl PySweepRow {
    fn rec<T>(&self, f: impl FnOnce(&powres::SweepRecord) -> T) -> Option<T> {
        self.0.record().map(f)
    }
}

#[pymethods]
impl PySweepRow {
    #[getter]
    fn p(&self) -> u64 {
        self.0.key().0
    }

    #[getter]
    fn n(&self) -> u64 {
        self.0.key().1
    }

    #[getter]
    fn k(&self) -> Option<u64> {
        self.rec(|r| r.k)
    }

    #[getter]
    fn lower(&self) -> Option<(u128, u128)> {
        self.rec(|r| ratio(&r.lower))
    }

    #[getter]
    fn upper_exclusive(&self) -> Option<(u128, u128)> {
        self.rec(|r| ratio(&r.upper_exclusive))
    }

    #[getter]
    fn normalized(&self) -> Option<f64> {
        self.rec(|r| r.normalized)
    }

    #[getter]
    fn max_expsum_ratio(&self) -> Option<f64> {
        self.rec(|r| r.max_expsum_ratio).flatten()
    }

    #[getter]
    fn delta_emp(&self) -> Option<f64> {
        self.rec(|r| r.delta_emp).flatten()
    }

    /// Why the case was skipped; None for computed rows.
    #[getter]
    fn reason(&self) -> Option<String> {
        match &self.0 {
            sweep::SweepRow::Skipped { reason, .. } => Some(reason.clone()),
            sweep::SweepRow::Record(_) => None,
        }
    }

    fn __repr__(&self) -> String {
        let (p, n) = self.0.key();
        match self.k() {
            Some(k) => format!("SweepRow(p={p}, n={n}, k={k})"),
            None => format!("SweepRow(p={p}, n={n}, skipped)"),
        }
    }
}

#[pyfunction]
fn is_prime(m: u64) -> bool {
    powres::is_prime(m)
}

#[pyfunction]
fn factorize(m: u64) -> Vec<(u64, u32)> {
    powres::factorize(m)
}

#[pyfunction]
fn powmod(a: u64, e: u64, p: u64) -> PyResult<u64> {
    if p == 0 || p >= powres::modmath::MODULUS_CAP {
        return Err(PyValueError::new_err("modulus must lie in [1, 2^62)"));
    }
    Ok(powres::powmod(a, e, p))
}

#[pyfunction]
fn chowla_london_bounds(p: u64, n: u64) -> PyResult<((u128, u128), (u128, u128))> {
    let (lo, hi) = powres::chowla_london_bounds(p, n).map_err(to_py)?;
    Ok((ratio(&lo), ratio(&hi)))
}

#[pyfunction]
fn compute_k(p: u64, n: u64) -> PyResult<PyKResult> {
    powres::compute_k(&context(p)?, n, &caps()?)
        .map(PyKResult)
        .map_err(to_py)
}

#[pyfunction]
fn brute_force_k(p: u64, n: u64) -> PyResult<u64> {
    powres::brute_force_k(&context(p)?, n).map_err(to_py)
}

#[pyfunction]
fn is_nth_residue(p: u64, n: u64, m: u64) -> PyResult<bool> {
    powres::is_nth_residue(&context(p)?, n, m).map_err(to_py)
}

#[pyfunction]
fn nth_root_solutions(p: u64, n: u64, m: u64) -> PyResult<Vec<u64>> {
    powres::nth_root_solutions(&context(p)?, n, m, &caps()?).map_err(to_py)
}

#[pyfunction]
fn roots_of_unity_subgroup(p: u64, n: u64) -> PyResult<PySubgroup> {
    let ctx = context(p)?;
    let spec = powres::roots_of_unity_subgroup(&ctx, n, &caps()?).map_err(to_py)?;
    Ok(PySubgroup { ctx, spec })
}

#[pyfunction]
fn power_residue_subgroup(p: u64, n: u64) -> PyResult<PySubgroup> {
    let ctx = context(p)?;
    let spec = powres::power_residue_subgroup(&ctx, n, &caps()?).map_err(to_py)?;
    Ok(PySubgroup { ctx, spec })
}

#[pyfunction]
fn subgroup_expsum(h: PyRef<'_, PySubgroup>, a: u64) -> PyResult<Complex64> {
    powres::subgroup_expsum(&h.spec, a).map_err(to_py)
}

#[pyfunction]
fn expsum_profile(h: PyRef<'_, PySubgroup>) -> PyResult<PyExpSumProfile> {
    powres::expsum_profile(&h.ctx, &h.spec)
        .map(PyExpSumProfile)
        .map_err(to_py)
}

#[pyfunction]
fn interval_expsum(p: u64, r: u64, k: u64) -> PyResult<Complex64> {
    powres::interval_expsum(p, r, k).map_err(to_py)
}

#[pyfunction]
fn interval_bound(p: u64, r: u64, k: u64) -> PyResult<f64> {
    powres::interval_bound(p, r, k).map_err(to_py)
}

/// Returns (lhs, rhs, ok).
#[pyfunction]
fn harmonic_bound_check(p: u64) -> PyResult<(f64, f64, bool)> {
    if p < 3 {
        return Err(PyValueError::new_err("p must be at least 3"));
    }
    let c = powres::harmonic_bound_check(p);
    Ok((c.lhs, c.rhs, c.ok))
}

#[pyfunction]
fn count_solutions_in_interval(p: u64, n: u64, m: u64, k: u64) -> PyResult<u64> {
    powres::count_solutions_in_interval(&context(p)?, n, m, k, &caps()?).map_err(to_py)
}

#[pyfunction]
fn orthogonality_decomposition(p: u64, n: u64, m: u64, k: u64) -> PyResult<PyDecomposition> {
    powres::orthogonality_decomposition(&context(p)?, n, m, k, &caps()?)
        .map(PyDecomposition)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (p_min, p_max, *, n_min=3, epsilon=0.0, policy="all", n=None, with_expsums=false, workers=1))]
#[allow(clippy::too_many_arguments)]
fn run_sweep(
    py: Python<'_>,
    p_min: u64,
    p_max: u64,
    n_min: u64,
    epsilon: f64,
    policy: &str,
    n: Option<u64>,
    with_expsums: bool,
    workers: usize,
) -> PyResult<Vec<PySweepRow>> {
    let n_policy = match (policy, n) {
        ("all", _) => sweep::NPolicy::AllOddDivisors,
        ("largest", _) => sweep::NPolicy::LargestOddDivisor,
        ("fixed", Some(n)) => sweep::NPolicy::Fixed(n),
        ("fixed", None) => return Err(PyValueError::new_err("policy 'fixed' needs n")),
        (other, _) => return Err(PyValueError::new_err(format!("unknown policy {other:?}"))),
    };
    let config = sweep::SweepConfig {
        p_min,
        p_max,
        n_min,
        epsilon,
        n_policy,
        with_expsums,
        workers,
        caps: caps()?,
        timing: false,
    };
    let rows = py
        .detach(|| sweep::run_sweep(&config))
        .map_err(to_py)?;
    Ok(rows.into_iter().map(PySweepRow).collect())
}

/// Returns (slope, intercept, r_squared, n_points) over the computed rows.
#[pyfunction]
fn fit_exponent(rows: Vec<PyRef<'_, PySweepRow>>) -> PyResult<(f64, f64, f64, usize)> {
    let fit = sweep::fit_exponent(rows.iter().filter_map(|r| r.0.record())).map_err(to_py)?;
    Ok((fit.slope, fit.intercept, fit.r_squared, fit.n_points))
}

#[pyfunction]
#[pyo3(signature = (rows, path, format="csv"))]
fn write_records(rows: Vec<PyRef<'_, PySweepRow>>, path: &str, format: &str) -> PyResult<()> {
    let format: sweep::RecordFormat = format.parse().map_err(to_py)?;
    let rows: Vec<_> = rows.iter().map(|r| r.0.clone()).collect();
    sweep::write_records(&rows, path, format).map_err(to_py)
}

#[pymodule(name = "powres")]
fn powres_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ScaleLimitError", m.py().get_type::<ScaleLimitError>())?;
    m.add_class::<PyPrimeContext>()?;
    m.add_class::<PyKResult>()?;
    m.add_class::<PySubgroup>()?;
    m.add_class::<PyExpSumProfile>()?;
    m.add_class::<PyDecomposition>()?;
    m.add_class::<PySweepRow>()?;

    m.add_function(wrap_pyfunction!(is_prime, m)?)?;
    m.add_function(wrap_pyfunction!(factorize, m)?)?;
    m.add_function(wrap_pyfunction!(powmod, m)?)?;
    m.add_function(wrap_pyfunction!(chowla_london_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(compute_k, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_k, m)?)?;
    m.add_function(wrap_pyfunction!(is_nth_residue, m)?)?;
    m.add_function(wrap_pyfunction!(nth_root_solutions, m)?)?;
    m.add_function(wrap_pyfunction!(roots_of_unity_subgroup, m)?)?;
    m.add_function(wrap_pyfunction!(power_residue_subgroup, m)?)?;
    m.add_function(wrap_pyfunction!(subgroup_expsum, m)?)?;
    m.add_function(wrap_pyfunction!(expsum_profile, m)?)?;
    m.add_function(wrap_pyfunction!(interval_expsum, m)?)?;
    m.add_function(wrap_pyfunction!(interval_bound, m)?)?;
    m.add_function(wrap_pyfunction!(harmonic_bound_check, m)?)?;
    m.add_function(wrap_pyfunction!(count_solutions_in_interval, m)?)?;
    m.add_function(wrap_pyfunction!(orthogonality_decomposition, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(fit_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(write_records, m)?)?;
    Ok(())
}
