//! Python bindings: exact field evaluation, symbolic certificates, residual
//! scans, energy and blowup-rate fits, and manufactured-solution runs.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use blowlab_core::checks::{
    self, BlowupQuantity, Normalization, ProbeRegion, SampleDomain, TolerancePolicy, RICHARDSON_STEP,
};
use blowlab_core::fields;
use blowlab_core::solver::{self, DtScaling, Grid2D, RunConfig, TimeScheme, ERROR_SERIES_HEADER};
use blowlab_core::symbolic::{parse, Certificate, ReducedFields};
use blowlab_core::{CartPoint, CylPoint, Family};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn family(name: &str) -> PyResult<Family> {
    name.parse().map_err(err)
}

/// Parameters `(a, k, T*, ν)` and the family, `"A"` (swirl `k/r`) or `"B"`
/// (swirl `k r τ^{2a}`).
#[pyclass(name = "SolutionParams", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PySolutionParams {
    inner: fields::SolutionParams,
}

#[pymethods]
impl PySolutionParams {
    #[new]
    #[pyo3(signature = (a, k, t_star, nu, family = "B"))]
    fn new(a: f64, k: f64, t_star: f64, nu: f64, family: &str) -> PyResult<Self> {
        let inner = fields::SolutionParams::new(a, k, t_star, nu, self::family(family)?).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a()
    }

    #[getter]
    fn k(&self) -> f64 {
        self.inner.k()
    }

    #[getter]
    fn t_star(&self) -> f64 {
        self.inner.t_star()
    }

    #[getter]
    fn nu(&self) -> f64 {
        self.inner.nu()
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family().name()
    }

    /// `(v^r, v^θ, v^z)`.
    fn velocity_cyl(&self, t: f64, r: f64, z: f64) -> PyResult<(f64, f64, f64)> {
        let v = fields::velocity_cyl(&self.inner, &CylPoint::new(t, r, z)).map_err(err)?;
        Ok((v[0], v[1], v[2]))
    }

    fn velocity_cart(&self, t: f64, x1: f64, x2: f64, x3: f64) -> PyResult<(f64, f64, f64)> {
        let v = fields::velocity_cart(&self.inner, &CartPoint::new(t, x1, x2, x3)).map_err(err)?;
        Ok((v[0], v[1], v[2]))
    }

    /// Row `i`, column `j` holds `∂v_i/∂x_j`.
    fn velocity_gradient(&self, t: f64, x1: f64, x2: f64, x3: f64) -> PyResult<Vec<Vec<f64>>> {
        let g = fields::velocity_gradient_cart(&self.inner, &CartPoint::new(t, x1, x2, x3)).map_err(err)?;
        Ok(g.iter().map(|row| row.to_vec()).collect())
    }

    fn vorticity_cyl(&self, t: f64, r: f64, z: f64) -> PyResult<(f64, f64, f64)> {
        let w = fields::vorticity_cyl(&self.inner, &CylPoint::new(t, r, z)).map_err(err)?;
        Ok((w[0], w[1], w[2]))
    }

    fn stream_function(&self, t: f64, r: f64, z: f64) -> PyResult<f64> {
        fields::stream_phi_theta(&self.inner, &CylPoint::new(t, r, z)).map_err(err)
    }

    fn pressure(&self, t: f64, r: f64, z: f64) -> PyResult<f64> {
        fields::pressure_exact(&self.inner, &CylPoint::new(t, r, z)).map_err(err)
    }

    /// `(v1, ω1, φ1)`: swirl, vorticity and stream function divided by `r`.
    fn transformed(&self, t: f64, r: f64, z: f64) -> PyResult<(f64, f64, f64)> {
        let e = fields::transformed_exact(&self.inner, &CylPoint::new(t, r, z)).map_err(err)?;
        Ok((e[0], e[1], e[2]))
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "SolutionParams(a={}, k={}, t_star={}, nu={}, family='{}')",
            p.a(),
            p.k(),
            p.t_star(),
            p.nu(),
            p.family()
        )
    }
}

/// Exact symbolic certificate. Returns `(all_pass, text)`.
#[pyfunction]
#[pyo3(signature = (family, vtheta = None))]
fn certify(family: &str, vtheta: Option<&str>) -> PyResult<(bool, String)> {
    let fam = self::family(family)?;
    let fields = match vtheta {
        Some(text) => ReducedFields::with_swirl(parse(text).map_err(err)?),
        None => ReducedFields::family(fam),
    };
    let cert = Certificate::run_with(fam, &fields).map_err(err)?;
    Ok((cert.all_pass(), cert.render()))
}

/// Finite-difference residual battery. Returns `(all_pass, summary_lines)`.
#[pyfunction]
#[pyo3(signature = (params, n_samples = 1000, seed = 42, rel_tol = 1e-6, abs_tol = 1e-14, fd_step = 1e-4))]
fn residual_scan(
    params: &PySolutionParams,
    n_samples: usize,
    seed: u64,
    rel_tol: f64,
    abs_tol: f64,
    fd_step: f64,
) -> PyResult<(bool, Vec<String>)> {
    let pol = TolerancePolicy::new(abs_tol, rel_tol, fd_step, Normalization::MaxTerm).map_err(err)?;
    let report = checks::residual_scan(&params.inner, &pol, &SampleDomain::default(), n_samples, seed, RICHARDSON_STEP)
        .map_err(err)?;
    Ok((report.all_pass(), report.lines()))
}

/// Kinetic energy in the ball of the given radius; `r_min` cuts out the axis.
#[pyfunction]
#[pyo3(signature = (params, t, radius, r_min = 0.0, quad_n = 64))]
fn energy_ball(params: &PySolutionParams, t: f64, radius: f64, r_min: f64, quad_n: usize) -> PyResult<f64> {
    checks::energy_ball_with_cutoff(&params.inner, t, radius, r_min, quad_n).map_err(err)
}

/// Log-log fit of a closed-form quantity against `τ`. Returns
/// `(amplitude, exponent, r2)`. Probe quantities need `probe=(r, z)`.
#[pyfunction]
#[pyo3(signature = (params, quantity = "grad_sup", tau_max = 0.5, tau_min = 1e-4, n = 20, probe = None))]
fn blowup_fit(
    params: &PySolutionParams,
    quantity: &str,
    tau_max: f64,
    tau_min: f64,
    n: usize,
    probe: Option<(f64, f64)>,
) -> PyResult<(f64, f64, f64)> {
    let q = BlowupQuantity::from_name(quantity).ok_or_else(|| err(format!("unknown quantity '{quantity}'")))?;
    let region = match probe {
        Some((r, z)) => ProbeRegion::Point { r, z },
        None => ProbeRegion::unit_ball(params.inner.family()),
    };
    let times = checks::log_spaced_times(params.inner.t_star(), tau_max, tau_min, n);
    let fit = checks::blowup_fit(&params.inner, q, &region, &times).map_err(err)?;
    Ok((fit.amplitude_c, fit.exponent, fit.r2_goodness))
}

fn run_config(
    params: &PySolutionParams,
    domain: (f64, f64, f64, f64),
    nodes: (usize, usize),
    t_end: f64,
    scheme: &str,
) -> PyResult<RunConfig> {
    let (r_min, r_max, z_min, z_max) = domain;
    let grid = Grid2D::new(r_min, r_max, z_min, z_max, nodes.0, nodes.1).map_err(err)?;
    let mut cfg = RunConfig::new(params.inner, grid, t_end);
    cfg.time_scheme = scheme.parse::<TimeScheme>().map_err(err)?;
    Ok(cfg)
}

/// Column names of the rows returned by [`run_manufactured`].
#[pyfunction]
fn error_series_header() -> Vec<&'static str> {
    ERROR_SERIES_HEADER.to_vec()
}

/// Manufactured-solution run of the transformed system. Returns one row per
/// step in `error_series_header()` order.
#[pyfunction]
#[pyo3(signature = (params, domain, nodes, t_end, scheme = "rk2_explicit"))]
fn run_manufactured(
    params: &PySolutionParams,
    domain: (f64, f64, f64, f64),
    nodes: (usize, usize),
    t_end: f64,
    scheme: &str,
) -> PyResult<Vec<[f64; 8]>> {
    let cfg = run_config(params, domain, nodes, t_end, scheme)?;
    let series = solver::run_manufactured(&cfg).map_err(err)?;
    Ok(series
        .rows
        .iter()
        .map(|r| {
            [
                r.time,
                r.err_v1_inf,
                r.err_v1_l2,
                r.err_phi1_inf,
                r.err_omega1_inf,
                r.dt_used,
                r.poisson_residual,
                r.poisson_threshold,
            ]
        })
        .collect())
}

/// Observed orders over a ladder of square grids. Returns `(all_pass, lines)`.
#[pyfunction]
#[pyo3(signature = (params, domain, levels, t_end, scheme = "rk2_explicit"))]
fn convergence_study(
    params: &PySolutionParams,
    domain: (f64, f64, f64, f64),
    levels: Vec<usize>,
    t_end: f64,
    scheme: &str,
) -> PyResult<(bool, Vec<String>)> {
    let first = *levels.first().ok_or_else(|| err("levels must not be empty"))?;
    let cfg = run_config(params, domain, (first, first), t_end, scheme)?;
    let report = solver::convergence_study(&cfg, &levels, DtScaling::Square).map_err(err)?;
    Ok((report.all_pass(), report.lines()))
}

#[pymodule]
fn blowlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySolutionParams>()?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(residual_scan, m)?)?;
    m.add_function(wrap_pyfunction!(energy_ball, m)?)?;
    m.add_function(wrap_pyfunction!(blowup_fit, m)?)?;
    m.add_function(wrap_pyfunction!(error_series_header, m)?)?;
    m.add_function(wrap_pyfunction!(run_manufactured, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_study, m)?)?;
    Ok(())
}
