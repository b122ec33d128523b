//! Python bindings: `import hermite_lab`.

use hermite_core::basis::MultiIndex;
use hermite_core::grid::SpatialGrid;
use hermite_core::multiplier::{self, MultiplierSymbol};
use hermite_core::runner::{self, ExperimentConfig};
use hermite_core::semigroup::{self, FractionalOrder};
use hermite_core::{sobolev, symbol_expr, Error, HermiteExpansion, ValueSpace};
use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        Error::NonConvergence { .. } | Error::NonFinite(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn index(k: Vec<usize>) -> PyResult<MultiIndex> {
    MultiIndex::new(k).map_err(err)
}

/// Normalized Hermite function `h_m(x)`.
#[pyfunction]
fn eval_hermite(m: usize, x: f64) -> f64 {
    hermite_core::eval_hermite(m, x)
}

/// Mehler kernel of `e^{-tH}` at `(x, y)`.
#[pyfunction]
fn mehler_kernel(t: f64, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    semigroup::mehler_kernel(t, &x, &y).map_err(err)
}

/// `∂_t^α e^{-tμ}`.
#[pyfunction]
fn fractional_derivative(mu: f64, alpha: f64, t: f64) -> PyResult<Complex64> {
    let order = FractionalOrder::new(alpha).map_err(err)?;
    semigroup::fractional_derivative_scalar(mu, order, t).map_err(err)
}

/// A multiplier symbol from the catalog or an expression in `z1 … zn`.
#[pyclass(frozen)]
struct Symbol {
    inner: MultiplierSymbol,
}

#[pymethods]
impl Symbol {
    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Value at real arguments.
    fn __call__(&self, z: Vec<f64>) -> PyResult<Complex64> {
        if z.len() != self.inner.dim() {
            return Err(err(Error::DimensionMismatch { expected: self.inner.dim(), found: z.len() }));
        }
        Ok(self.inner.eval_real(&z))
    }

    /// `max |m|` over lattice points with every `k_j ≤ cap`.
    fn sampled_bound(&self, cap: usize) -> PyResult<f64> {
        self.inner.sampled_bound(cap).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Symbol({:?}, dim={})", self.inner.name(), self.inner.dim())
    }
}

/// Expression symbol, checked for finiteness on the lattice `k_j ≤ cap`.
#[pyfunction]
#[pyo3(signature = (expr, dim = 1, cap = 16))]
fn parse_symbol(expr: &str, dim: usize, cap: usize) -> PyResult<Symbol> {
    Ok(Symbol { inner: symbol_expr::parse_symbol(expr, dim, cap).map_err(err)? })
}

/// Built-in symbol, e.g. `"sqrt-ratio"` or `"riesz:1,0:1"`.
#[pyfunction]
fn catalog_symbol(spec: &str, dim: usize) -> PyResult<Symbol> {
    Ok(Symbol { inner: MultiplierSymbol::catalog(spec, dim).map_err(err)? })
}

/// Mellin-type transform `𝓜_α(t, u)` of a symbol.
#[pyfunction]
fn mellin(symbol: &Symbol, alpha: Vec<usize>, t: Vec<f64>, u: Vec<f64>) -> PyResult<Complex64> {
    multiplier::mellin_value(&symbol.inner, &index(alpha)?, &t, &u).map_err(err)
}

/// Finite scalar Hermite expansion.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Expansion {
    inner: HermiteExpansion,
}

#[pymethods]
impl Expansion {
    /// Zero expansion on `ℝ^dim` with per-axis degree cap.
    #[new]
    #[pyo3(signature = (dim, cap, complex = false))]
    fn new(dim: usize, cap: usize, complex: bool) -> PyResult<Self> {
        let space = if complex { ValueSpace::Complex } else { ValueSpace::Real };
        Ok(Expansion { inner: HermiteExpansion::new(dim, cap, space).map_err(err)? })
    }

    /// Standard normal coefficients on every index `≤ cap`.
    #[staticmethod]
    fn random(dim: usize, cap: usize, seed: u64) -> PyResult<Self> {
        let mut rng = hermite_core::rng::stream(seed, 0, u64::MAX);
        Ok(Expansion { inner: HermiteExpansion::random(dim, cap, ValueSpace::Real, &mut rng).map_err(err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn __setitem__(&mut self, k: Vec<usize>, value: Complex64) -> PyResult<()> {
        self.inner.insert(index(k)?, vec![value]).map_err(err)
    }

    fn __getitem__(&self, k: Vec<usize>) -> PyResult<Complex64> {
        Ok(self.inner.coeff(&index(k)?))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Nonzero coefficients as `(index, value)` pairs.
    fn items(&self) -> Vec<(Vec<usize>, Complex64)> {
        self.inner.iter().map(|(k, v)| (k.entries().to_vec(), v[0])).collect()
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<Complex64> {
        Ok(self.inner.synthesize(&x).map_err(err)?[0])
    }

    fn l2_norm(&self) -> f64 {
        self.inner.l2_norm()
    }

    /// `‖f‖_{L^p}` on the default grid.
    fn lp_norm(&self, p: f64) -> PyResult<f64> {
        let grid = SpatialGrid::for_cap(self.inner.dim(), self.inner.max_degree()).map_err(err)?;
        self.inner.lp_norm(&grid, p).map_err(err)
    }

    fn heat(&self, t: f64) -> PyResult<Self> {
        Ok(Expansion { inner: semigroup::heat_apply(&self.inner, t).map_err(err)? })
    }

    fn poisson(&self, t: f64) -> PyResult<Self> {
        Ok(Expansion { inner: semigroup::poisson_apply(&self.inner, t).map_err(err)? })
    }

    fn negative_power(&self, beta: f64) -> PyResult<Self> {
        Ok(Expansion { inner: semigroup::negative_power(&self.inner, beta).map_err(err)? })
    }

    fn imaginary_power(&self, beta: Vec<f64>) -> PyResult<Self> {
        Ok(Expansion { inner: multiplier::imaginary_power(&self.inner, &beta).map_err(err)? })
    }

    fn apply(&self, symbol: &Symbol) -> PyResult<Self> {
        Ok(Expansion { inner: multiplier::apply_multiplier(&self.inner, &symbol.inner).map_err(err)? })
    }

    /// Ladder operator `A_j`; negative `j` raises.
    fn ladder(&self, j: i32) -> PyResult<Self> {
        let axis = sobolev::SignedAxis::new(j, self.inner.dim()).map_err(err)?;
        Ok(Expansion { inner: sobolev::ladder_apply(&self.inner, axis).map_err(err)? })
    }

    fn riesz(&self, m: Vec<usize>, split: usize) -> PyResult<Self> {
        Ok(Expansion { inner: sobolev::riesz_transform(&self.inner, &index(m)?, split).map_err(err)? })
    }

    fn max_abs_diff(&self, other: &Expansion) -> f64 {
        self.inner.max_abs_diff(&other.inner)
    }

    fn __repr__(&self) -> String {
        format!("Expansion(dim={}, terms={})", self.inner.dim(), self.inner.len())
    }
}

/// Runs an experiment from `key = value` text and returns the JSON report.
#[pyfunction]
fn run_experiment(py: Python<'_>, config: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::parse(config).map_err(err)?;
    py.detach(|| runner::run(&cfg).and_then(|r| r.to_json())).map_err(err)
}

#[pymodule]
fn hermite_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", runner::VERSION)?;
    m.add_class::<Expansion>()?;
    m.add_class::<Symbol>()?;
    m.add_function(wrap_pyfunction!(eval_hermite, m)?)?;
    m.add_function(wrap_pyfunction!(mehler_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(fractional_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(parse_symbol, m)?)?;
    m.add_function(wrap_pyfunction!(catalog_symbol, m)?)?;
    m.add_function(wrap_pyfunction!(mellin, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
