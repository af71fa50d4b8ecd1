//! Floating-point verification of the exact families: finite-difference
//! residuals, quadrature of the energy in a ball, and power-law fits of the
//! blowup rate.

mod energy;
mod fit;
mod residuals;

use std::f64::consts::TAU as TWO_PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fields::{CartPoint, FieldError, SolutionParams};
use crate::table::{header_comment, Table};

pub use energy::{
    dissipation_ball, energy_ball, energy_ball_with_cutoff, strain_energy_ball, DEFAULT_QUAD_N, QUAD_SELF_CHECK_REL,
};
pub use fit::{
    blowup_fit, fit_log_log, log_spaced_times, BlowupFit, BlowupQuantity, ProbeRegion, MIN_FIT_DECADES, MIN_FIT_SAMPLES,
};
pub use residuals::{
    biot_savart_check, divergence_fd, fd_ns_residual, fd_ns_residual_with_pressure, pressure_poisson_consistency,
    pressure_poisson_with, richardson, FdResidual, Richardson,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("finite-difference stencil at {point} reaches the singular set: {reason}")]
    StencilCrossesSingularity { point: String, reason: String },
    #[error("quadrature under-resolved: n={n} and 2n differ by {rel_change:.3e} relative")]
    QuadratureUnderResolved { n: usize, rel_change: f64 },
    #[error("insufficient samples for a fit: {0}")]
    InsufficientSamples(String),
    #[error("quantity is not positive at tau = {tau}: {value}")]
    NonPositiveQuantity { tau: f64, value: f64 },
    #[error("invalid tolerance policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, CheckError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Divide by the largest individual term of the equation at the point.
    MaxTerm,
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TolerancePolicy {
    abs_tol: f64,
    rel_tol: f64,
    fd_step: f64,
    normalization: Normalization,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self { abs_tol: 1e-14, rel_tol: 1e-6, fd_step: 1e-4, normalization: Normalization::MaxTerm }
    }
}

impl TolerancePolicy {
    pub fn new(abs_tol: f64, rel_tol: f64, fd_step: f64, normalization: Normalization) -> Result<Self> {
        for (name, v) in [("abs_tol", abs_tol), ("rel_tol", rel_tol), ("fd_step", fd_step)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CheckError::InvalidPolicy(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if rel_tol < 100.0 * f64::EPSILON {
            return Err(CheckError::InvalidPolicy(format!(
                "rel_tol = {rel_tol:e} is below 100 machine epsilons ({:e})",
                100.0 * f64::EPSILON
            )));
        }
        Ok(Self { abs_tol, rel_tol, fd_step, normalization })
    }

    pub fn abs_tol(&self) -> f64 {
        self.abs_tol
    }
    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }
    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }
    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn with_fd_step(&self, h: f64) -> Result<Self> {
        Self::new(self.abs_tol, self.rel_tol, h, self.normalization)
    }

    /// Stencil spacing for a coordinate of magnitude `x`.
    pub fn step_for(&self, x: f64) -> f64 {
        self.fd_step * x.abs().max(1.0)
    }
}

/// Numerical checks run by a residual scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CheckId {
    NsMomentum,
    Divergence,
    BiotSavart,
    PressurePoisson,
}

impl CheckId {
    pub const ALL: [CheckId; 4] =
        [CheckId::NsMomentum, CheckId::Divergence, CheckId::BiotSavart, CheckId::PressurePoisson];

    pub fn name(self) -> &'static str {
        match self {
            CheckId::NsMomentum => "NS_MOMENTUM",
            CheckId::Divergence => "DIVERGENCE",
            CheckId::BiotSavart => "BIOT_SAVART",
            CheckId::PressurePoisson => "PRESSURE_POISSON",
        }
    }

    /// Residual at one point, reduced to `(max_abs, normalized)`.
    pub fn evaluate(self, p: &SolutionParams, q: &CartPoint, pol: &TolerancePolicy) -> Result<FdResidual> {
        match self {
            CheckId::NsMomentum => fd_ns_residual(p, q, pol),
            CheckId::Divergence => divergence_fd(p, q, pol),
            CheckId::BiotSavart => biot_savart_check(p, &q.to_cyl(), pol),
            CheckId::PressurePoisson => pressure_poisson_consistency(p, q, pol),
        }
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub equation_id: CheckId,
    pub sample_count: usize,
    pub max_abs: f64,
    pub max_rel: f64,
    pub pass: bool,
    pub worst_point: CartPoint,
}

impl ResidualReport {
    /// Reduce per-point residuals with max/argmax.
    pub fn reduce(id: CheckId, results: &[(CartPoint, FdResidual)], pol: &TolerancePolicy) -> Self {
        let mut max_abs = 0.0f64;
        let mut max_rel = 0.0f64;
        let mut worst = results.first().map(|(q, _)| *q).unwrap_or(CartPoint::new(0.0, 0.0, 0.0, 0.0));
        for (q, r) in results {
            max_abs = max_abs.max(r.max_abs());
            let rel = r.normalized(pol.normalization);
            if rel > max_rel || rel.is_nan() {
                max_rel = rel;
                worst = *q;
            }
        }
        let pass = max_rel <= pol.rel_tol || max_abs <= pol.abs_tol;
        Self { equation_id: id, sample_count: results.len(), max_abs, max_rel, pass, worst_point: worst }
    }

    pub fn line(&self) -> String {
        let q = &self.worst_point;
        format!(
            "{} {} n={} max_abs={:.3e} max_rel={:.3e} worst=(t={:.6}, x=({:.6}, {:.6}, {:.6}))",
            pass_word(self.pass),
            self.equation_id,
            self.sample_count,
            self.max_abs,
            self.max_rel,
            q.t,
            q.x1,
            q.x2,
            q.x3
        )
    }
}

/// Summary of Richardson ratios over the points where they are measurable.
#[derive(Debug, Clone, PartialEq)]
pub struct RichardsonSummary {
    pub equation_id: CheckId,
    pub step: f64,
    pub measured: usize,
    pub below_floor: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub pass: bool,
}

/// Accepted band for `residual(h) / residual(h/2)`.
pub const RICHARDSON_BAND: (f64, f64) = (3.5, 4.5);

impl RichardsonSummary {
    pub fn reduce(id: CheckId, step: f64, outcomes: &[Richardson]) -> Self {
        let ratios: Vec<f64> = outcomes
            .iter()
            .filter_map(|o| match o {
                Richardson::Ratio(r) => Some(*r),
                Richardson::BelowFloor => None,
            })
            .collect();
        let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pass = ratios.iter().all(|r| (RICHARDSON_BAND.0..=RICHARDSON_BAND.1).contains(r));
        Self {
            equation_id: id,
            step,
            measured: ratios.len(),
            below_floor: outcomes.len() - ratios.len(),
            min_ratio,
            max_ratio,
            pass,
        }
    }

    pub fn line(&self) -> String {
        if self.measured == 0 {
            return format!(
                "{} RICHARDSON_{} h={:e} measured=0 below_floor={} (residual at rounding floor everywhere)",
                pass_word(self.pass),
                self.equation_id,
                self.step,
                self.below_floor
            );
        }
        format!(
            "{} RICHARDSON_{} h={:e} measured={} below_floor={} ratio in [{:.4}, {:.4}]",
            pass_word(self.pass),
            self.equation_id,
            self.step,
            self.measured,
            self.below_floor,
            self.min_ratio,
            self.max_ratio
        )
    }
}

pub(crate) fn pass_word(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Bounds of the randomized sample domain, as fractions or absolute values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleDomain {
    /// Latest sampled time as a fraction of `T*`.
    pub t_frac_max: f64,
    pub r: (f64, f64),
    pub z: (f64, f64),
}

impl Default for SampleDomain {
    fn default() -> Self {
        Self { t_frac_max: 0.95, r: (0.2, 3.0), z: (-3.0, 3.0) }
    }
}

/// Deterministic sample points for a seed.
pub fn sample_points(p: &SolutionParams, domain: &SampleDomain, n: usize, seed: u64) -> Vec<CartPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let t = rng.random_range(0.0..=domain.t_frac_max * p.t_star());
            let r = rng.random_range(domain.r.0..=domain.r.1);
            let theta = rng.random_range(0.0..TWO_PI);
            let z = rng.random_range(domain.z.0..=domain.z.1);
            CartPoint::new(t, r * theta.cos(), r * theta.sin(), z)
        })
        .collect()
}

/// Everything a residual scan produces.
#[derive(Debug, Clone)]
pub struct ScanReport {
    pub params: SolutionParams,
    pub seed: u64,
    pub policy: TolerancePolicy,
    pub reports: Vec<ResidualReport>,
    pub richardson: Vec<RichardsonSummary>,
    pub points: Vec<CartPoint>,
    /// `rel[i][j]`: normalized residual of check `j` at point `i`.
    pub rel: Vec<[f64; 4]>,
}

impl ScanReport {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass) && self.richardson.iter().all(|r| r.pass)
    }

    pub fn lines(&self) -> Vec<String> {
        self.reports.iter().map(|r| r.line()).chain(self.richardson.iter().map(|r| r.line())).collect()
    }

    pub fn points_table(&self) -> Table {
        let mut t = Table::new(
            header_comment(Some(self.seed), &self.params.to_string()),
            ["sample", "t", "x1", "x2", "x3", "ns_momentum", "divergence", "biot_savart", "pressure_poisson"],
        );
        for (i, (q, rel)) in self.points.iter().zip(&self.rel).enumerate() {
            t.push(
                [i.to_string(), q.t.to_string(), q.x1.to_string(), q.x2.to_string(), q.x3.to_string()]
                    .into_iter()
                    .chain(rel.iter().map(|v| v.to_string())),
            );
        }
        t
    }

    pub fn summary_table(&self) -> Table {
        let mut t = Table::new(
            header_comment(Some(self.seed), &self.params.to_string()),
            ["equation_id", "n", "max_abs", "max_rel", "pass", "worst_t", "worst_x1", "worst_x2", "worst_x3"],
        );
        for r in &self.reports {
            let q = r.worst_point;
            t.push([
                r.equation_id.to_string(),
                r.sample_count.to_string(),
                r.max_abs.to_string(),
                r.max_rel.to_string(),
                r.pass.to_string(),
                q.t.to_string(),
                q.x1.to_string(),
                q.x2.to_string(),
                q.x3.to_string(),
            ]);
        }
        t
    }
}

/// Companion step used for Richardson ratios: large enough that truncation
/// error dominates rounding at most sample points.
pub const RICHARDSON_STEP: f64 = 1e-2;

/// Run every check at `n` seeded sample points.
pub fn residual_scan(
    p: &SolutionParams,
    pol: &TolerancePolicy,
    domain: &SampleDomain,
    n: usize,
    seed: u64,
    richardson_step: f64,
) -> Result<ScanReport> {
    if n == 0 {
        return Err(CheckError::InvalidInput("n_samples must be at least 1".into()));
    }
    let points = sample_points(p, domain, n, seed);
    let coarse = pol.with_fd_step(richardson_step)?;
    let mut per_check: Vec<Vec<(CartPoint, FdResidual)>> = (0..4).map(|_| Vec::with_capacity(n)).collect();
    let mut ratios: Vec<Vec<Richardson>> = (0..4).map(|_| Vec::with_capacity(n)).collect();
    let mut rel = Vec::with_capacity(n);
    for q in &points {
        let mut row = [0.0; 4];
        for (j, id) in CheckId::ALL.iter().enumerate() {
            let res = id.evaluate(p, q, pol)?;
            row[j] = res.normalized(pol.normalization);
            per_check[j].push((*q, res));
            ratios[j].push(richardson(|h| id.evaluate(p, q, h), &coarse)?);
        }
        rel.push(row);
    }
    let reports = CheckId::ALL.iter().zip(&per_check).map(|(id, r)| ResidualReport::reduce(*id, r, pol)).collect();
    let richardson =
        CheckId::ALL.iter().zip(&ratios).map(|(id, r)| RichardsonSummary::reduce(*id, richardson_step, r)).collect();
    Ok(ScanReport { params: *p, seed, policy: *pol, reports, richardson, points, rel })
}
