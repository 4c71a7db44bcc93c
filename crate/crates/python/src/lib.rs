//! Python bindings: `import hullbound_py`.

use hullbound::markov::VerificationReport;
use hullbound::{self as hb, BoundsReport, ConstantsReport, DEFAULT_RESOLUTION};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Parsed expression in the variable `x`.
#[pyclass(frozen, module = "hullbound_py")]
struct Expr {
    inner: hb::Expr,
}

#[pymethods]
impl Expr {
    #[new]
    fn new(source: &str) -> PyResult<Self> {
        hb::parse(source).map(|inner| Self { inner }).map_err(err)
    }

    fn eval(&self, x: f64) -> PyResult<f64> {
        self.inner.eval(x).map_err(err)
    }

    fn __call__(&self, x: f64) -> PyResult<f64> {
        self.eval(x)
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth()
    }

    fn __str__(&self) -> String {
        self.inner.root().to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expr({:?})", self.inner.source())
    }
}

#[pyfunction]
fn parse(source: &str) -> PyResult<Expr> {
    Expr::new(source)
}

fn bounds_dict<'py>(py: Python<'py>, r: &BoundsReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mean_x", r.mean_x)?;
    d.set_item("lower", r.lower)?;
    d.set_item("upper", r.upper)?;
    d.set_item("f_at_mean", r.f_at_mean)?;
    d.set_item("jensen_reduced", r.jensen_reduced)?;
    Ok(d)
}

fn constants_dict<'py>(py: Python<'py>, c: &ConstantsReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mean_x", c.mean_x)?;
    d.set_item("c_l_at", c.c_l_at)?;
    d.set_item("c_u_at", c.c_u_at)?;
    d.set_item("s_l", c.s_l)?;
    d.set_item("s_u", c.s_u)?;
    d.set_item("c_hat_l", c.c_hat_l)?;
    d.set_item("c_hat_u", c.c_hat_u)?;
    d.set_item("obvious_inf", c.obvious_inf)?;
    d.set_item("obvious_sup", c.obvious_sup)?;
    d.set_item("obvious_ratio_lo", c.obvious_ratio_lo)?;
    d.set_item("obvious_ratio_hi", c.obvious_ratio_hi)?;
    Ok(d)
}

fn report_dict<'py>(py: Python<'py>, r: &VerificationReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("checked", r.checked)?;
    d.set_item("violations", r.violations)?;
    d.set_item("worst_margin", r.worst_margin)?;
    d.set_item("tolerance", r.tolerance)?;
    let rows: Vec<(f64, f64, f64, f64, bool)> = r
        .coordinates
        .iter()
        .map(|c| (c.mean_x, c.mean_f, c.lower, c.upper, c.pass))
        .collect();
    d.set_item("coordinates", rows)?;
    Ok(d)
}

/// Sampled graph of `f` on a domain, its convex hull and envelopes.
#[pyclass(frozen, module = "hullbound_py")]
struct Analysis {
    inner: hb::Analysis,
}

#[pymethods]
impl Analysis {
    #[new]
    #[pyo3(signature = (f, domain, resolution = DEFAULT_RESOLUTION))]
    fn new(f: &str, domain: &str, resolution: usize) -> PyResult<Self> {
        hb::Analysis::parse(f, domain, resolution)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[getter]
    fn resolution(&self) -> usize {
        self.inner.graph.resolution
    }

    #[getter]
    fn domain(&self) -> Vec<(f64, f64)> {
        self.inner
            .domain()
            .intervals()
            .iter()
            .map(|iv| (iv.lo, iv.hi))
            .collect()
    }

    #[getter]
    fn jensen_reduced(&self) -> bool {
        self.inner.jensen_reduced()
    }

    /// Breakpoints of the convex lower envelope.
    fn lower(&self) -> Vec<(f64, f64)> {
        self.inner.lower().breakpoints().to_vec()
    }

    /// Breakpoints of the concave upper envelope.
    fn upper(&self) -> Vec<(f64, f64)> {
        self.inner.upper().breakpoints().to_vec()
    }

    /// Hull vertices, counterclockwise.
    fn hull(&self) -> Vec<(f64, f64)> {
        self.inner.hull.vertices().to_vec()
    }

    fn samples(&self) -> Vec<(f64, f64)> {
        self.inner.graph.points.clone()
    }

    fn eval_lower(&self, x: f64) -> PyResult<f64> {
        self.inner.lower().eval(x).map_err(err)
    }

    fn eval_upper(&self, x: f64) -> PyResult<f64> {
        self.inner.upper().eval(x).map_err(err)
    }

    fn bounds_at<'py>(&self, py: Python<'py>, mean: f64) -> PyResult<Bound<'py, PyDict>> {
        bounds_dict(py, &self.inner.bounds_at(mean).map_err(err)?)
    }

    #[pyo3(signature = (mean = None))]
    fn constants<'py>(&self, py: Python<'py>, mean: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
        constants_dict(py, &self.inner.constants(mean).map_err(err)?)
    }

    /// `(support, weights)` of a distribution with at most three atoms whose
    /// moment pair is `(x, y)`.
    fn witness(&self, x: f64, y: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let w = self.inner.witness((x, y)).map_err(err)?;
        Ok((w.distribution.support().to_vec(), w.distribution.weights().to_vec()))
    }

    /// `(E[X], E[f(X)])` for a finite distribution on the domain.
    fn moments(&self, support: Vec<f64>, weights: Vec<f64>) -> PyResult<(f64, f64)> {
        let d = hb::DiscreteDistribution::new(support, weights, self.inner.domain()).map_err(err)?;
        d.moments(&self.inner.f).map_err(err)
    }

    #[pyo3(signature = (x, y, tol = 1e-9))]
    fn contains(&self, x: f64, y: f64, tol: f64) -> bool {
        self.inner.contains((x, y), tol)
    }

    #[pyo3(signature = (trials = 10_000, seed = None, tolerance = 1e-9))]
    fn oracle<'py>(
        &self,
        py: Python<'py>,
        trials: usize,
        seed: Option<u64>,
        tolerance: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let base = hb::OracleConfig::default();
        let cfg = hb::OracleConfig {
            n_trials: trials,
            seed: seed.unwrap_or(base.seed),
            tolerance,
            ..base
        };
        let s = py
            .detach(|| hb::run_oracle(&self.inner.hull, &self.inner.graph, &cfg))
            .map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("trials", s.trials)?;
        d.set_item("passed", s.passed)?;
        d.set_item("worst_margin", s.worst_margin)?;
        Ok(d)
    }

    fn verify_markov<'py>(&self, py: Python<'py>, op: &MarkovOperator, x: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let a = &self.inner;
        let r = hb::verify_markov_bounds(&op.inner, &x, &a.f, a.domain(), a.lower(), a.upper()).map_err(err)?;
        report_dict(py, &r)
    }

    fn verify_conditional<'py>(
        &self,
        py: Python<'py>,
        weights: Vec<f64>,
        partition: Vec<Vec<usize>>,
        x: Vec<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let a = &self.inner;
        let c = hb::FiniteConditioning::new(weights, partition).map_err(err)?;
        let r = hb::verify_conditional_bounds(&c, &x, &a.f, a.domain(), a.lower(), a.upper()).map_err(err)?;
        report_dict(py, &r)
    }
}

/// Row-stochastic matrix.
#[pyclass(frozen, module = "hullbound_py")]
struct MarkovOperator {
    inner: hb::MarkovOperator,
}

#[pymethods]
impl MarkovOperator {
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        hb::MarkovOperator::from_rows(rows)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn random(rows: usize, cols: usize, seed: u64) -> Self {
        Self {
            inner: hb::MarkovOperator::random(rows, cols, seed),
        }
    }

    #[staticmethod]
    fn identity(n: usize) -> Self {
        Self {
            inner: hb::MarkovOperator::identity(n),
        }
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.rows(), self.inner.cols())
    }

    fn apply(&self, v: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.apply(&v).map_err(err)
    }

    /// `self ∘ first`: apply `first`, then `self`.
    fn compose(&self, first: &MarkovOperator) -> PyResult<Self> {
        self.inner
            .compose(&first.inner)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    fn to_rows(&self) -> Vec<Vec<f64>> {
        self.inner.to_rows()
    }
}

#[pyfunction]
fn conditional_expectation(weights: Vec<f64>, partition: Vec<Vec<usize>>, values: Vec<f64>) -> PyResult<Vec<f64>> {
    let c = hb::FiniteConditioning::new(weights, partition).map_err(err)?;
    c.conditional_expectation(&values).map_err(err)
}

#[pyfunction]
fn convex_hull(points: Vec<(f64, f64)>) -> PyResult<Vec<(f64, f64)>> {
    hb::convex_hull_2d(&points).map(|h| h.vertices().to_vec()).map_err(err)
}

#[pymodule]
fn hullbound_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("DEFAULT_RESOLUTION", DEFAULT_RESOLUTION)?;
    m.add_class::<Expr>()?;
    m.add_class::<Analysis>()?;
    m.add_class::<MarkovOperator>()?;
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add_function(wrap_pyfunction!(conditional_expectation, m)?)?;
    m.add_function(wrap_pyfunction!(convex_hull, m)?)?;
    Ok(())
}
