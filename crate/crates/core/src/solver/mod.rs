//! Finite-difference solver for the transformed axisymmetric system
//!
//! ```text
//! ∂_t v1 + v^r ∂_r v1 + v^z ∂_z v1 = ν L3 v1 + 2 v1 ∂_z φ1
//! ∂_t ω1 + v^r ∂_r ω1 + v^z ∂_z ω1 = ν L3 ω1 + ∂_z(v1²)
//! -L3 φ1 = ω1,   v^r = -r ∂_z φ1,   v^z = 2 φ1 + r ∂_r φ1
//! ```
//!
//! with `L3 = ∂_r² + (3/r)∂_r + ∂_z²`, run against the exact families as
//! manufactured solutions.
//!
//! Edges: every field takes exact values on the `r` edges. On the `z` edges
//! `φ1` is prescribed while `v1` and `ω1` use a mirror ghost (`∂_z = 0`),
//! which both exact families satisfy. When `r_min = 0` the axis row is
//! closed by evenness in `r`.

mod grid;
mod operator;
mod poisson;
mod stepper;
mod study;

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use thiserror::Error;

use crate::checks::CheckError;
use crate::fields::{transformed_exact, CylPoint, Family, FieldError, SolutionParams};

pub use grid::{Grid2D, MIN_NODES};
pub use operator::{EdgeKind, Stencil5};
pub use poisson::{poisson_solve, PoissonConfig, PoissonMethod, PoissonSolver, PoissonStats};
pub use stepper::{
    biot_savart_velocities, discrete_divergence, rhs, run_manufactured, step, ErrorRow, ErrorSeries, Solver,
    ERROR_SERIES_HEADER,
};
pub use study::{
    blowup_chase, convergence_study, ChaseQuantity, ConvergenceLevel, ConvergenceReport, DtScaling, FieldOrders, Order,
    DELTA_FLOOR_REL, EXACT_FLOOR_REL, ORDER_BAND,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("Poisson solve did not converge after {iterations} iterations: residual {residual:.3e} > {threshold:.3e}")]
    NoConvergence { iterations: usize, residual: f64, threshold: f64 },
    #[error("time step {dt:.3e} exceeds the stability limit {limit:.3e} ({reason})")]
    CflViolation { dt: f64, limit: f64, reason: &'static str },
    #[error("step budget of {max_steps} exceeded before t = {t_end}")]
    BudgetExceeded { max_steps: usize, t_end: f64 },
    #[error("non-finite values at t = {0}")]
    NonFinite(f64),
}

pub type Result<T> = std::result::Result<T, SolverError>;

/// Unknowns of the transformed system on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub v1: Array2<f64>,
    pub omega1: Array2<f64>,
    pub phi1: Array2<f64>,
    pub time: f64,
}

impl State {
    pub fn zeros(grid: &Grid2D, time: f64) -> Self {
        Self {
            v1: Array2::zeros(grid.shape()),
            omega1: Array2::zeros(grid.shape()),
            phi1: Array2::zeros(grid.shape()),
            time,
        }
    }

    /// Exact fields sampled on the grid.
    pub fn exact(params: &SolutionParams, grid: &Grid2D, time: f64) -> Result<Self> {
        let mut s = Self::zeros(grid, time);
        for i in 0..grid.nr() {
            for j in 0..grid.nz() {
                let e = transformed_exact(params, &CylPoint::new(time, grid.r(i), grid.z(j)))?;
                s.v1[[i, j]] = e[0];
                s.omega1[[i, j]] = e[1];
                s.phi1[[i, j]] = e[2];
            }
        }
        Ok(s)
    }

    pub fn is_finite(&self) -> bool {
        [&self.v1, &self.omega1, &self.phi1].iter().all(|a| a.iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtRule {
    Fixed(f64),
    /// Safety factor in `(0, 1)` applied to the advective and, for the
    /// explicit scheme, diffusive limits.
    Cfl(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeScheme {
    /// Heun's method on every term.
    Rk2Explicit,
    /// Heun on advection and sources, Crank–Nicolson on diffusion.
    ImexDiffusion,
}

impl FromStr for TimeScheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "rk2_explicit" | "rk2" => Ok(Self::Rk2Explicit),
            "imex_diffusion" | "imex" => Ok(Self::ImexDiffusion),
            other => Err(format!("unknown time scheme '{other}' (rk2_explicit, imex_diffusion)")),
        }
    }
}

impl fmt::Display for TimeScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TimeScheme::Rk2Explicit => "rk2_explicit",
            TimeScheme::ImexDiffusion => "imex_diffusion",
        })
    }
}

/// Discretization of the advection terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Advection {
    Central,
    /// First-order upwind differences; a negative control for order checks.
    Upwind1,
}

impl fmt::Display for Advection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Advection::Central => "central",
            Advection::Upwind1 => "upwind1",
        })
    }
}

impl FromStr for Advection {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "central" => Ok(Self::Central),
            "upwind1" => Ok(Self::Upwind1),
            other => Err(format!("unknown advection stencil '{other}' (central, upwind1)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub params: SolutionParams,
    pub grid: Grid2D,
    pub t_end: f64,
    pub dt_rule: DtRule,
    pub time_scheme: TimeScheme,
    pub poisson: PoissonConfig,
    pub advection: Advection,
    /// Smallest allowed `T* - t_end`.
    pub min_gap: f64,
    pub max_steps: usize,
}

impl RunConfig {
    pub fn new(params: SolutionParams, grid: Grid2D, t_end: f64) -> Self {
        Self {
            params,
            grid,
            t_end,
            dt_rule: DtRule::Cfl(0.4),
            time_scheme: TimeScheme::Rk2Explicit,
            poisson: PoissonConfig::default(),
            advection: Advection::Central,
            min_gap: 1e-3 * params.t_star(),
            max_steps: 2_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.poisson.validate()?;
        if !(self.min_gap > 0.0) {
            return Err(SolverError::InvalidConfig(format!("min_gap must be positive, got {}", self.min_gap)));
        }
        if !(self.t_end > 0.0 && self.t_end <= self.params.t_star() - self.min_gap) {
            return Err(SolverError::InvalidConfig(format!(
                "t_end = {} must lie in (0, T* - min_gap] = (0, {}]",
                self.t_end,
                self.params.t_star() - self.min_gap
            )));
        }
        match self.dt_rule {
            DtRule::Fixed(dt) if !(dt > 0.0) => {
                return Err(SolverError::InvalidConfig(format!("dt must be positive, got {dt}")))
            }
            DtRule::Cfl(s) if !(s > 0.0 && s < 1.0) => {
                return Err(SolverError::InvalidConfig(format!("CFL safety must lie in (0, 1), got {s}")))
            }
            _ => {}
        }
        if self.params.family() == Family::A && self.grid.r_min() <= 0.0 {
            return Err(SolverError::InvalidConfig("the k/r family is singular on the axis; use r_min > 0".into()));
        }
        if self.max_steps == 0 {
            return Err(SolverError::InvalidConfig("max_steps must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(f: Family) -> SolutionParams {
        SolutionParams::new(1.0, 1.0, 1.0, 0.1, f).unwrap()
    }

    #[test]
    fn config_validation() {
        let g = Grid2D::new(0.0, 2.0, -1.0, 1.0, 17, 17).unwrap();
        assert!(RunConfig::new(params(Family::B), g, 0.5).validate().is_ok());
        assert!(RunConfig::new(params(Family::A), g, 0.5).validate().is_err());
        assert!(RunConfig::new(params(Family::B), g, 1.0).validate().is_err());
        let mut c = RunConfig::new(params(Family::B), g, 0.5);
        c.dt_rule = DtRule::Cfl(1.0);
        assert!(c.validate().is_err());
        c.dt_rule = DtRule::Fixed(-1.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn exact_state_matches_closed_forms() {
        let g = Grid2D::new(0.0, 2.0, -1.0, 1.0, 9, 9).unwrap();
        let s = State::exact(&params(Family::B), &g, 0.5).unwrap();
        assert!((s.v1[[3, 3]] - 0.25).abs() < 1e-15);
        assert!((s.phi1[[0, 8]] + 2.0).abs() < 1e-15);
        assert!(s.omega1.iter().all(|v| *v == 0.0));
    }
}
