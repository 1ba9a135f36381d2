//! Python bindings for the ensemble laboratory: model construction from
//! JSON, finite-N tail estimation, the radial mean-field pipeline, and the
//! concave-analysis helpers.

use ensemble_lab::curve::Provenance;
use ensemble_lab::duality;
use ensemble_lab::macroscopic::{self, DiscretizedModel, SolverOptions};
use ensemble_lab::micro::{self, Tail};
use ensemble_lab::{LabError, ModelJson, ModelSpec, SampledCurve};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: LabError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn curve_from_xy(x: Vec<f64>, y: Vec<f64>) -> PyResult<SampledCurve> {
    SampledCurve::new(x, y, None, Provenance::Synthetic).map_err(err)
}

fn curve_to_tuple(c: &SampledCurve) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let se = c.stderr.clone().unwrap_or_else(|| vec![0.0; c.x.len()]);
    (c.x.clone(), c.y.clone(), se)
}

/// A fully built interaction model (domain, kernel, potential, prior, N).
#[pyclass]
struct Model {
    spec: ModelSpec,
}

#[pymethods]
impl Model {
    /// Build from the same JSON schema the CLI accepts.
    #[new]
    fn new(json: &str) -> PyResult<Self> {
        let spec = ModelJson::from_str(json).map_err(err)?.build().map_err(err)?;
        Ok(Model { spec })
    }

    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn n_particles(&self) -> Option<usize> {
        self.spec.n_particles
    }

    /// Per-particle energies of `count` prior configurations.
    fn sample_energies(&self, count: usize, seed: u64) -> PyResult<Vec<f64>> {
        micro::sample_energies(&self.spec, count, seed).map_err(err)
    }

    /// (e, value, stderr) of (1/N) log P(H/N >< e) by direct counting.
    /// `direction` is "lower" or "upper"; empty-count points come back as
    /// -inf with infinite stderr.
    fn tail_logprob(
        &self,
        e_grid: Vec<f64>,
        direction: &str,
        samples: usize,
        seed: u64,
    ) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let tail = match direction {
            "lower" => Tail::Lower,
            "upper" => Tail::Upper,
            other => return Err(PyValueError::new_err(format!("bad direction {other:?}"))),
        };
        let c = micro::tail_logprob_direct(&self.spec, &e_grid, tail, samples, seed).map_err(err)?;
        Ok(curve_to_tuple(&c))
    }

    /// Analytic critical inverse temperature 2d over the limiting slope.
    fn beta_c(&self) -> PyResult<f64> {
        let profile = self
            .spec
            .kernel
            .as_radial()
            .ok_or_else(|| PyValueError::new_err("beta_c needs a radial kernel"))?;
        duality::beta_c_analytic(profile, self.spec.dim()).map_err(err)
    }
}

/// Radial shell discretization with the mean-field functionals.
#[pyclass]
struct RadialGrid {
    dm: DiscretizedModel,
}

#[pymethods]
impl RadialGrid {
    #[new]
    fn new(model: &Model, shells: usize, r_max: f64) -> PyResult<Self> {
        Ok(RadialGrid { dm: macroscopic::discretize_radial(&model.spec, shells, r_max).map_err(err)? })
    }

    fn prior_energy(&self) -> f64 {
        self.dm.energy(&self.dm.mass0)
    }

    fn energy(&self, mu: Vec<f64>) -> f64 {
        self.dm.energy(&mu)
    }

    fn entropy(&self, mu: Vec<f64>) -> f64 {
        self.dm.entropy(&mu)
    }

    /// Minimize beta E - S; returns a dict with the minimizer and its
    /// functional values.
    fn solve<'py>(&self, py: Python<'py>, beta: f64) -> PyResult<Bound<'py, PyDict>> {
        let sol = macroscopic::solve_mean_field(&self.dm, beta, None, &SolverOptions::default())
            .map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("mu", sol.mu)?;
        d.set_item("free_energy", sol.free_energy)?;
        d.set_item("energy", sol.energy)?;
        d.set_item("entropy", sol.entropy)?;
        d.set_item("converged", sol.converged)?;
        d.set_item("iterations", sol.iterations)?;
        Ok(d)
    }

    /// F(beta) over a grid (warm-started sweep).
    fn free_energy_curve(&self, betas: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let (curve, _) =
            macroscopic::free_energy_curve(&self.dm, &betas, &SolverOptions::default())
                .map_err(err)?;
        Ok((curve.x, curve.y))
    }

    /// S(e) via the dual formula, bracketing beta in [beta_lo, beta_hi].
    fn entropy_curve(
        &self,
        e_grid: Vec<f64>,
        beta_lo: f64,
        beta_hi: f64,
    ) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let c = macroscopic::entropy_curve_dual(
            &self.dm,
            &e_grid,
            beta_lo,
            beta_hi,
            &SolverOptions::default(),
        )
        .map_err(err)?;
        Ok((c.x, c.y))
    }
}

/// Concave Legendre-Fenchel transform of sampled (x, y).
#[pyfunction]
fn legendre(x: Vec<f64>, y: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let c = duality::legendre_concave(&curve_from_xy(x, y)?, 1).map_err(err)?;
    Ok((c.x, c.y))
}

/// Upper concave hull evaluated at the sample abscissae.
#[pyfunction]
fn concave_envelope(x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
    let c = duality::concave_envelope(&curve_from_xy(x, y)?).map_err(err)?;
    Ok(c.y)
}

/// Extrapolated slope at the upper end of a sampled curve.
#[pyfunction]
fn asymptotic_slope(x: Vec<f64>, y: Vec<f64>, window: usize) -> PyResult<f64> {
    Ok(duality::asymptotic_slope(&curve_from_xy(x, y)?, window)
        .map_err(err)?
        .slope)
}

/// Best core-halo member at a target energy for w(r) = r^-alpha on the
/// unit disc: returns (mass, eps, entropy, energy).
#[pyfunction]
fn best_core_halo(alpha: f64, e_target: f64) -> PyResult<(f64, f64, f64, f64)> {
    let ch = macroscopic::best_core_halo_at_energy(alpha, e_target).map_err(err)?;
    Ok((ch.mass, ch.eps, ch.entropy, ch.energy))
}

#[pymodule]
fn ensemble_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_class::<RadialGrid>()?;
    m.add_function(wrap_pyfunction!(legendre, m)?)?;
    m.add_function(wrap_pyfunction!(concave_envelope, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_slope, m)?)?;
    m.add_function(wrap_pyfunction!(best_core_halo, m)?)?;
    Ok(())
}
