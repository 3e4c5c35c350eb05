//! Python bindings: `import orbit_localize`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use orbit_localize::fixedpoints::MultiplicityMode;
use orbit_localize::localize::{casimir_check, default_mode, fourier_value, OrbitSpec, CALIBRATED_SPLIT_S0};
use orbit_localize::verify::{compact_agreement, run_suite, SuiteParams};
use orbit_localize::{AlgebraElement, AlgebraSpec, Error, Family};

fn err(e: Error) -> PyErr {
    match e {
        Error::CalibrationZero { .. } => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn family(name: &str) -> PyResult<Family> {
    match name {
        "su" => Ok(Family::Su),
        "sl_real" => Ok(Family::SlReal),
        other => Err(err(Error::UnsupportedFamily(other.into()))),
    }
}

fn mode(name: Option<&str>, fam: Family, multiplicities: Option<BTreeMap<String, f64>>) -> PyResult<MultiplicityMode> {
    match name {
        None => Ok(default_mode(fam)),
        Some("compact") => Ok(MultiplicityMode::Compact),
        Some("maximally_split") => Ok(MultiplicityMode::MaximallySplit),
        Some("user_supplied") => Ok(MultiplicityMode::UserSupplied {
            values: multiplicities.ok_or_else(|| PyValueError::new_err("user_supplied mode needs multiplicities"))?,
        }),
        Some(other) => Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
    }
}

/// A real form `su(n)` or `sl(n, R)` with its basis and Killing form.
#[pyclass(name = "Algebra", module = "orbit_localize", frozen)]
struct PyAlgebra {
    inner: Arc<AlgebraSpec>,
}

#[pymethods]
impl PyAlgebra {
    #[new]
    fn new(family_name: &str, n: usize) -> PyResult<Self> {
        Ok(PyAlgebra {
            inner: Arc::new(AlgebraSpec::build(family(family_name)?, n).map_err(err)?),
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn rank(&self) -> usize {
        self.inner.rank()
    }

    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    fn killing_form(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        self.check(&x)?;
        self.check(&y)?;
        let b = self
            .inner
            .killing_form(&AlgebraElement::from_real(&x), &AlgebraElement::from_real(&y))
            .map_err(err)?;
        Ok(b.re)
    }

    fn bracket(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check(&x)?;
        self.check(&y)?;
        let z = self
            .inner
            .bracket(&AlgebraElement::from_real(&x), &AlgebraElement::from_real(&y))
            .map_err(err)?;
        Ok(z.real_coords())
    }

    fn is_regular(&self, x: Vec<f64>) -> PyResult<bool> {
        self.check(&x)?;
        self.inner.is_regular_semisimple(&AlgebraElement::from_real(&x)).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Algebra('{}', {})", self.inner.family(), self.inner.n())
    }
}

impl PyAlgebra {
    fn check(&self, x: &[f64]) -> PyResult<()> {
        if x.len() != self.inner.dim() {
            return Err(err(Error::DimensionMismatch {
                expected: self.inner.dim(),
                found: x.len(),
            }));
        }
        Ok(())
    }
}

/// A regular orbit parameter `lambda = i c` with multiplicity data.
#[pyclass(name = "Orbit", module = "orbit_localize", frozen)]
struct PyOrbit {
    inner: OrbitSpec,
}

#[pymethods]
impl PyOrbit {
    #[new]
    #[pyo3(signature = (family_name, n, lam, mode_name=None, s0=None, multiplicities=None))]
    fn new(
        family_name: &str,
        n: usize,
        lam: Vec<f64>,
        mode_name: Option<&str>,
        s0: Option<i32>,
        multiplicities: Option<BTreeMap<String, f64>>,
    ) -> PyResult<Self> {
        let fam = family(family_name)?;
        let algebra = Arc::new(AlgebraSpec::build(fam, n).map_err(err)?);
        let m = mode(mode_name, fam, multiplicities)?;
        let s0 = s0.unwrap_or(if m == MultiplicityMode::Compact { 1 } else { CALIBRATED_SPLIT_S0 });
        Ok(PyOrbit {
            inner: OrbitSpec::new(algebra, &lam, m, s0).map_err(err)?,
        })
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.inner.mode().tag()
    }

    #[getter]
    fn s0(&self) -> i32 {
        self.inner.s0()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.algebra().dim()
    }

    #[getter]
    fn casimir_eigenvalue(&self) -> Complex64 {
        self.inner.casimir_eigenvalue()
    }

    /// Algebra coordinates of the Cartan element with the given coordinates.
    fn cartan_element(&self, coords: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.cartan_element(&coords).map_err(err)?.real_coords())
    }

    fn reference_point(&self, scale: f64) -> Vec<f64> {
        self.inner.reference_point(scale).real_coords()
    }

    /// `F(X)`; raises ValueError on non-regular or wall inputs.
    fn fourier_value(&self, x: Vec<f64>) -> PyResult<Complex64> {
        Ok(fourier_value(&self.inner, &self.element(&x)?).map_err(err)?.total)
    }

    /// Full breakdown: total, per-term values and flags.
    fn evaluate<'py>(&self, py: Python<'py>, x: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let r = fourier_value(&self.inner, &self.element(&x)?).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("total", r.total)?;
        d.set_item("support_empty", r.support_empty)?;
        d.set_item("wall_distance", r.wall_distance)?;
        let terms: Vec<(String, Complex64, Complex64, i32, Complex64)> = r
            .terms
            .iter()
            .map(|t| (t.label.clone(), t.exponent, t.denominator, t.multiplicity, t.value))
            .collect();
        d.set_item("terms", terms)?;
        Ok(d)
    }

    /// `(label, sign, multiplicity)` per fixed point.
    fn fixed_points(&self) -> Vec<(String, i32, i32)> {
        self.inner
            .fixed_points()
            .iter()
            .map(|f| (f.label.clone(), f.sign, f.multiplicity))
            .collect()
    }

    #[pyo3(signature = (x, h=1e-3))]
    fn casimir_residual(&self, x: Vec<f64>, h: f64) -> PyResult<f64> {
        Ok(casimir_check(&self.inner, &self.element(&x)?, h).map_err(err)?.residual)
    }

    /// Calibrated Monte Carlo comparison at random points (compact forms).
    #[pyo3(signature = (seed, samples=100_000, points=20))]
    fn oracle_agreement<'py>(
        &self,
        py: Python<'py>,
        seed: u64,
        samples: usize,
        points: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let a = py
            .detach(|| compact_agreement(&self.inner, seed, samples, points))
            .map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("constant", a.calibration.constant)?;
        d.set_item("misses", a.misses)?;
        let z: Vec<f64> = a.rows.iter().map(|r| r.z_score).collect();
        d.set_item("z_scores", z)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "Orbit('{}', {}, lambda={:?}, mode='{}', s0={})",
            self.inner.algebra().family(),
            self.inner.algebra().n(),
            self.inner.lambda_real(),
            self.inner.mode().tag(),
            self.inner.s0()
        )
    }
}

impl PyOrbit {
    fn element(&self, x: &[f64]) -> PyResult<AlgebraElement> {
        let dim = self.inner.algebra().dim();
        if x.len() != dim {
            return Err(err(Error::DimensionMismatch {
                expected: dim,
                found: x.len(),
            }));
        }
        Ok(AlgebraElement::from_real(x))
    }
}

/// `(suite, name, measured, threshold, passed)`.
type CheckRow = (String, String, f64, f64, bool);

/// Runs a named property suite.
#[pyfunction]
#[pyo3(signature = (suite, orbit, seed=0, points=100, oracle_samples=200_000))]
fn verify(
    py: Python<'_>,
    suite: &str,
    orbit: &PyOrbit,
    seed: u64,
    points: usize,
    oracle_samples: usize,
) -> PyResult<Vec<CheckRow>> {
    let spec = &orbit.inner;
    let params = SuiteParams {
        family: spec.algebra().family(),
        n: spec.algebra().n(),
        lambda: spec.lambda_real().to_vec(),
        mode: spec.mode().clone(),
        s0: spec.s0(),
        seed,
        points,
        casimir_step: 1e-3,
        min_wall_distance: 1e-3,
        oracle_samples,
        oracle_points: 20,
        eps_schedule: vec![0.1, 0.05, 0.025],
        mesh: (1200, 256),
        kappa: 0.3,
        geometry_samples: 2000,
    };
    let suite = suite.parse().map_err(err)?;
    let checks = py.detach(|| run_suite(suite, &params)).map_err(err)?;
    Ok(checks
        .into_iter()
        .map(|c| (c.suite, c.name, c.measured, c.threshold, c.passed))
        .collect())
}

#[pymodule(name = "orbit_localize")]
fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAlgebra>()?;
    m.add_class::<PyOrbit>()?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
