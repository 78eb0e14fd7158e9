//! Python module `dislocore`: domains, Green's functions, energies, the
//! gradient flow, boundary-datum functionals and scenario runs. Points are
//! `(x, y)` tuples; structured results come back as plain dicts and lists.

use std::path::Path;

use ::dislocore::dirichlet::{BoundaryDatum, DatumSpec, DirichletOptions, DirichletProblem};
use ::dislocore::dynamics::{self, SimulationOptions};
use ::dislocore::energy::{self, Configuration};
use ::dislocore::geometry::{self, Vec2};
use ::dislocore::green::{self, Backend};
use ::dislocore::minimize::{self, MinimizeOptions, Objective};
use ::dislocore::quadrature::QuadratureOptions;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

type Pt = (f64, f64);

fn v(p: Pt) -> Vec2 {
    Vec2::new(p.0, p.1)
}

fn pt(p: Vec2) -> Pt {
    (p.x, p.y)
}

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Hands a serializable value to Python through `json.loads`.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (s,))
}

#[pyclass(module = "dislocore", frozen)]
struct Domain {
    inner: geometry::Domain,
}

#[pymethods]
impl Domain {
    #[staticmethod]
    fn unit_disk() -> Self {
        Self { inner: geometry::Domain::unit_disk() }
    }

    #[staticmethod]
    #[pyo3(signature = (radius, center = (0.0, 0.0)))]
    fn disk(radius: f64, center: Pt) -> PyResult<Self> {
        Ok(Self { inner: geometry::Domain::disk(v(center), radius).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (semi_x, semi_y, center = (0.0, 0.0), samples = 256))]
    fn ellipse(semi_x: f64, semi_y: f64, center: Pt, samples: usize) -> PyResult<Self> {
        Ok(Self { inner: geometry::Domain::ellipse(v(center), semi_x, semi_y, samples).map_err(err)? })
    }

    /// Domain bounded by the smooth closed curve through counterclockwise samples.
    #[staticmethod]
    fn from_points(points: Vec<Pt>) -> PyResult<Self> {
        let c = geometry::SmoothCurve::from_samples(points.into_iter().map(v).collect()).map_err(err)?;
        Ok(Self { inner: geometry::Domain::from_curve(c).map_err(err)? })
    }

    fn contains(&self, p: Pt) -> bool {
        self.inner.contains(v(p))
    }

    fn boundary_distance(&self, p: Pt) -> f64 {
        self.inner.boundary_distance(v(p))
    }

    fn nearest_boundary(&self, p: Pt) -> Pt {
        pt(self.inner.nearest_boundary(v(p)).boundary_point.position)
    }

    #[getter]
    fn diameter(&self) -> f64 {
        self.inner.diameter()
    }

    #[getter]
    fn perimeter(&self) -> f64 {
        self.inner.perimeter()
    }

    #[getter]
    fn is_convex(&self) -> bool {
        self.inner.is_convex()
    }

    fn __repr__(&self) -> String {
        match self.inner.as_disk() {
            Some((c, r)) => format!("Domain.disk({r}, center=({}, {}))", c.x, c.y),
            None => format!("Domain(curve, perimeter={:.6})", self.inner.perimeter()),
        }
    }
}

/// Green's function evaluator. `backend` is "auto", "image" or "boundary_integral".
#[pyclass(module = "dislocore", frozen)]
struct GreenEngine {
    inner: green::GreenEngine,
}

#[pymethods]
impl GreenEngine {
    #[new]
    #[pyo3(signature = (domain, backend = "auto", panels = 256))]
    fn new(domain: &Domain, backend: &str, panels: usize) -> PyResult<Self> {
        let b = match backend {
            "auto" => Backend::auto(&domain.inner),
            "image" => Backend::Image,
            "boundary_integral" | "bie" => Backend::BoundaryIntegral { panels },
            other => return Err(PyValueError::new_err(format!("unknown backend {other:?}"))),
        };
        Ok(Self { inner: green::GreenEngine::new(domain.inner.clone(), b).map_err(err)? })
    }

    fn green(&self, x: Pt, y: Pt) -> PyResult<f64> {
        self.inner.green(v(x), v(y)).map_err(err)
    }

    fn regular_part(&self, x: Pt, y: Pt) -> PyResult<f64> {
        self.inner.regular_part(v(x), v(y)).map_err(err)
    }

    fn robin(&self, x: Pt) -> PyResult<f64> {
        self.inner.robin_function(v(x)).map_err(err)
    }

    fn grad_robin(&self, x: Pt) -> PyResult<Pt> {
        self.inner.grad_robin(v(x)).map(pt).map_err(err)
    }

    /// Renormalized energy of dislocations with moduli ±1.
    fn energy(&self, positions: Vec<Pt>, moduli: Vec<i32>) -> PyResult<f64> {
        let c = config(positions, moduli)?;
        energy::renormalized_energy(&c, &self.inner).map_err(err)
    }

    /// `(energy, forces)`.
    fn energy_and_forces(&self, positions: Vec<Pt>, moduli: Vec<i32>) -> PyResult<(f64, Vec<Pt>)> {
        let c = config(positions, moduli)?;
        let (e, f) = energy::energy_and_forces(&c, &self.inner).map_err(err)?;
        Ok((e, f.into_iter().map(pt).collect()))
    }

    /// Gradient flow until the first collision (or `t_max`); returns a dict
    /// with `t`, `positions` (None once removed), `events` and `stats`.
    #[pyo3(signature = (positions, moduli, t_max = 1.0, rel_tol = 1e-9, collision_radius = None))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        positions: Vec<Pt>,
        moduli: Vec<i32>,
        t_max: f64,
        rel_tol: f64,
        collision_radius: Option<f64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let c = config(positions, moduli)?;
        let opts = SimulationOptions { t_max, rel_tol, collision_radius, ..SimulationOptions::default() };
        let tr = dynamics::simulate(&c, &self.inner, &opts).map_err(err)?;
        #[derive(Serialize)]
        struct Out<'a> {
            t: Vec<f64>,
            positions: Vec<Vec<Option<Pt>>>,
            events: &'a [dynamics::Event],
            stats: &'a dynamics::IntegratorStats,
        }
        let out = Out {
            t: tr.samples.iter().map(|s| s.t).collect(),
            positions: tr.samples.iter().map(|s| s.positions.iter().map(|p| p.map(pt)).collect()).collect(),
            events: &tr.events,
            stats: &tr.stats,
        };
        to_py(py, &out)
    }
}

fn config(positions: Vec<Pt>, moduli: Vec<i32>) -> PyResult<Configuration> {
    Configuration::new(positions.into_iter().map(v).collect(), moduli).map_err(err)
}

/// Boundary-datum problem on a convex domain. `datum` is None for the
/// uniform datum or `(arc_lengths, values)` for a piecewise-linear one.
#[pyclass(module = "dislocore", frozen)]
struct Dirichlet {
    inner: DirichletProblem,
}

fn quad(tight: bool) -> QuadratureOptions {
    if tight {
        QuadratureOptions::tight()
    } else {
        QuadratureOptions::default()
    }
}

#[pymethods]
impl Dirichlet {
    #[new]
    #[pyo3(signature = (domain, datum = None))]
    fn new(domain: &Domain, datum: Option<(Vec<f64>, Vec<f64>)>) -> PyResult<Self> {
        let spec = match datum {
            None => DatumSpec::Uniform,
            Some((arc, values)) => DatumSpec::Table { arc, values },
        };
        let d = BoundaryDatum::from_spec(&domain.inner, &spec).map_err(err)?;
        Ok(Self { inner: DirichletProblem::new(domain.inner.clone(), d, DirichletOptions::default()).map_err(err)? })
    }

    #[pyo3(signature = (a, tight = false))]
    fn limit_functional(&self, a: Pt, tight: bool) -> PyResult<f64> {
        self.inner.limit_functional(v(a), &quad(tight)).map_err(err)
    }

    #[pyo3(signature = (centers, tight = false))]
    fn limit_functional_n(&self, centers: Vec<Pt>, tight: bool) -> PyResult<f64> {
        let c: Vec<Vec2> = centers.into_iter().map(v).collect();
        self.inner.limit_functional_n(&c, &quad(tight)).map_err(err)
    }

    #[pyo3(signature = (centers, eps, tight = false))]
    fn finite_eps_energy(&self, centers: Vec<Pt>, eps: f64, tight: bool) -> PyResult<f64> {
        let c: Vec<Vec2> = centers.into_iter().map(v).collect();
        self.inner.finite_eps_energy(&c, eps, &quad(tight)).map_err(err)
    }

    /// `F_ε = E_ε - πn|log ε|`.
    #[pyo3(signature = (centers, eps, tight = false))]
    fn renormalized(&self, centers: Vec<Pt>, eps: f64, tight: bool) -> PyResult<f64> {
        let c: Vec<Vec2> = centers.into_iter().map(v).collect();
        self.inner.renormalize(&c, eps, &quad(tight)).map_err(err)
    }

    #[pyo3(signature = (a, b, tight = false))]
    fn cross_term(&self, a: Pt, b: Pt, tight: bool) -> PyResult<f64> {
        self.inner.cross_term(v(a), v(b), &quad(tight)).map_err(err)
    }

    /// Strain `ΣK_{a_i} + ∇v` at `x`.
    fn field(&self, centers: Vec<Pt>, x: Pt) -> PyResult<Pt> {
        let c: Vec<Vec2> = centers.into_iter().map(v).collect();
        Ok(pt(self.inner.corrector(&c).map_err(err)?.field(v(x))))
    }

    /// Multistart minimization of `F` (or `F_ε` when `eps` is given); returns the report dict.
    #[pyo3(signature = (n, eps = None, starts = None, seed = 0))]
    fn minimize<'py>(
        &self,
        py: Python<'py>,
        n: usize,
        eps: Option<f64>,
        starts: Option<usize>,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let obj = eps.map_or(Objective::Limit, |eps| Objective::FiniteEps { eps });
        let opts = MinimizeOptions { starts, seed, ..MinimizeOptions::default() };
        let r = minimize::minimize(&self.inner, n, obj, &opts).map_err(err)?;
        to_py(py, &r)
    }
}

/// Runs a scenario given as JSON text, writing artifacts into `out_dir`.
/// Returns `(summary, passed, files)`.
#[pyfunction]
fn run_scenario(json: &str, out_dir: &str) -> PyResult<(String, bool, Vec<String>)> {
    let s = dislocore_cli::Scenario::from_json(json).map_err(|e| PyValueError::new_err(format!("{e:#}")))?;
    let o = dislocore_cli::run(&s, Path::new(out_dir)).map_err(|e| PyRuntimeError::new_err(format!("{e:#}")))?;
    Ok((o.summary, o.passed, o.files.iter().map(|p| p.display().to_string()).collect()))
}

#[pymodule]
#[pyo3(name = "dislocore")]
fn dislocore_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Domain>()?;
    m.add_class::<GreenEngine>()?;
    m.add_class::<Dirichlet>()?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
