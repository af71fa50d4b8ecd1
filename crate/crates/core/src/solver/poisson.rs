//! `-L3 φ1 = ω1` with Dirichlet data on the outer edges.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array2, Zip};

use super::grid::Grid2D;
use super::operator::{EdgeKind, Stencil5};
use super::{Result, SolverError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoissonMethod {
    /// Red–black successive over-relaxation.
    GaussSeidelSor,
    /// BiCGSTAB.
    ConjugateGradientLike,
    /// Sine transform in `z` and tridiagonal solves in `r`.
    Direct,
}

impl PoissonMethod {
    pub fn name(self) -> &'static str {
        match self {
            PoissonMethod::GaussSeidelSor => "gauss_seidel_sor",
            PoissonMethod::ConjugateGradientLike => "conjugate_gradient_like",
            PoissonMethod::Direct => "direct",
        }
    }
}

impl fmt::Display for PoissonMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PoissonMethod {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gauss_seidel_sor" | "sor" => Ok(Self::GaussSeidelSor),
            "conjugate_gradient_like" | "bicgstab" => Ok(Self::ConjugateGradientLike),
            "direct" => Ok(Self::Direct),
            other => {
                Err(format!("unknown Poisson method '{other}' (gauss_seidel_sor, conjugate_gradient_like, direct)"))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonConfig {
    pub method: PoissonMethod,
    /// Relative to `‖ω1‖∞` plus the boundary scale.
    pub tol: f64,
    pub max_iters: usize,
    pub sor_omega: f64,
}

impl Default for PoissonConfig {
    fn default() -> Self {
        Self { method: PoissonMethod::Direct, tol: 1e-10, max_iters: 50_000, sor_omega: 1.7 }
    }
}

impl PoissonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(SolverError::InvalidConfig(format!("poisson.tol must be positive, got {}", self.tol)));
        }
        if !(self.sor_omega > 0.0 && self.sor_omega < 2.0) {
            return Err(SolverError::InvalidConfig(format!(
                "poisson.sor_omega must lie in (0, 2), got {}",
                self.sor_omega
            )));
        }
        if self.max_iters == 0 {
            return Err(SolverError::InvalidConfig("poisson.max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of one solve; `residual` is the max-norm of `b - Aφ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonStats {
    pub iterations: usize,
    pub residual: f64,
    pub threshold: f64,
}

/// Reusable solver for one grid: the operator and, for the direct method,
/// the sine basis.
#[derive(Debug, Clone)]
pub struct PoissonSolver {
    grid: Grid2D,
    cfg: PoissonConfig,
    op: Stencil5,
    sine: Option<Array2<f64>>,
}

impl PoissonSolver {
    pub fn new(grid: &Grid2D, cfg: &PoissonConfig) -> Result<Self> {
        cfg.validate()?;
        let op = Stencil5::l3(grid, EdgeKind::Dirichlet).affine(0.0, -1.0);
        let sine = (cfg.method == PoissonMethod::Direct).then(|| {
            let m = grid.nz() - 2;
            Array2::from_shape_fn((m, m), |(j, k)| (PI * ((j + 1) * (k + 1)) as f64 / (m + 1) as f64).sin())
        });
        Ok(Self { grid: *grid, cfg: *cfg, op, sine })
    }

    pub fn operator(&self) -> &Stencil5 {
        &self.op
    }

    /// Right-hand side: `ω1` on free nodes, the boundary values on fixed ones.
    pub fn assemble(&self, omega1: &Array2<f64>, boundary: &Array2<f64>) -> Array2<f64> {
        let mut b = omega1.clone();
        Zip::from(&mut b).and(boundary).and(&self.op.fixed).for_each(|b, &g, &f| {
            if f {
                *b = g;
            }
        });
        b
    }

    /// Residual threshold `tol · (‖ω1‖∞ + max|boundary| · max diagonal)`.
    pub fn threshold(&self, omega1: &Array2<f64>, boundary: &Array2<f64>) -> f64 {
        let w = Zip::from(omega1).and(&self.op.fixed).fold(0.0f64, |m, v, f| if *f { m } else { m.max(v.abs()) });
        let g = Zip::from(boundary).and(&self.op.fixed).fold(0.0f64, |m, v, f| if *f { m.max(v.abs()) } else { m });
        self.cfg.tol * (w + g * self.op.diagonal_scale())
    }

    /// Solve in place; `phi1` is the initial guess for iterative methods.
    pub fn solve(&self, phi1: &mut Array2<f64>, omega1: &Array2<f64>, boundary: &Array2<f64>) -> Result<PoissonStats> {
        let b = self.assemble(omega1, boundary);
        let threshold = self.threshold(omega1, boundary);
        let outcome = match self.cfg.method {
            PoissonMethod::GaussSeidelSor => self.op.sor(phi1, &b, self.cfg.sor_omega, threshold, self.cfg.max_iters),
            PoissonMethod::ConjugateGradientLike => self.op.bicgstab(phi1, &b, threshold, self.cfg.max_iters),
            PoissonMethod::Direct => {
                self.direct(phi1, &b);
                Ok((1, self.op.residual_norm(phi1, &b)))
            }
        };
        match outcome {
            Ok((iterations, residual)) if residual <= threshold => Ok(PoissonStats { iterations, residual, threshold }),
            Ok((iterations, residual)) | Err((iterations, residual)) => {
                Err(SolverError::NoConvergence { iterations, residual, threshold })
            }
        }
    }

    fn direct(&self, x: &mut Array2<f64>, b: &Array2<f64>) {
        let g = &self.grid;
        let sine = self.sine.as_ref().expect("sine basis built for the direct method");
        let (nr, nz) = g.shape();
        let m = nz - 2;
        let first = usize::from(!g.has_axis());
        let last = nr - 2;
        for ((i, j), f) in self.op.fixed.indexed_iter() {
            if *f {
                x[[i, j]] = b[[i, j]];
            }
        }
        // Move known neighbours to the right-hand side.
        let mut f = Array2::<f64>::zeros((nr, m));
        for i in first..=last {
            for jj in 0..m {
                let j = jj + 1;
                let mut v = b[[i, j]];
                if i > 0 && self.op.fixed[[i - 1, j]] {
                    v -= self.op.w[[i, j]] * x[[i - 1, j]];
                }
                if self.op.fixed[[i + 1, j]] {
                    v -= self.op.e[[i, j]] * x[[i + 1, j]];
                }
                if j == 1 {
                    v -= self.op.s[[i, j]] * x[[i, 0]];
                }
                if j == m {
                    v -= self.op.n[[i, j]] * x[[i, nz - 1]];
                }
                f[[i, jj]] = v;
            }
        }
        let fhat = f.dot(sine) * (2.0 / (m + 1) as f64);
        let hz2 = g.hz() * g.hz();
        let mut xhat = Array2::<f64>::zeros((nr, m));
        let zz = 2.0 / hz2;
        let mut lower = vec![0.0; nr];
        let mut diag = vec![0.0; nr];
        let mut upper = vec![0.0; nr];
        let mut rhs = vec![0.0; nr];
        for k in 0..m {
            // -∂_z² eigenvalue of mode k; the stored diagonal already holds +2/hz².
            let mu = 4.0 / hz2 * (PI * (k + 1) as f64 / (2.0 * (m + 1) as f64)).sin().powi(2);
            for i in first..=last {
                lower[i] = if i > first { self.op.w[[i, 1]] } else { 0.0 };
                upper[i] = if i < last { self.op.e[[i, 1]] } else { 0.0 };
                diag[i] = self.op.c[[i, 1]] - zz + mu;
                rhs[i] = fhat[[i, k]];
            }
            thomas(&lower[first..=last], &mut diag[first..=last], &upper[first..=last], &mut rhs[first..=last]);
            for i in first..=last {
                xhat[[i, k]] = rhs[i];
            }
        }
        let interior = xhat.dot(sine);
        x.slice_mut(s![first..=last, 1..=m]).assign(&interior.slice(s![first..=last, ..]));
    }
}

/// Solve a tridiagonal system in place; `rhs` receives the solution.
fn thomas(lower: &[f64], diag: &mut [f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    for i in 1..n {
        let m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
    }
}

/// One-shot solve of `-L3 φ1 = ω1` with the given boundary values.
pub fn poisson_solve(
    omega1: &Array2<f64>,
    grid: &Grid2D,
    boundary: &Array2<f64>,
    cfg: &PoissonConfig,
) -> Result<(Array2<f64>, PoissonStats)> {
    let solver = PoissonSolver::new(grid, cfg)?;
    let mut phi = boundary.clone();
    let stats = solver.solve(&mut phi, omega1, boundary)?;
    Ok((phi, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grids() -> [Grid2D; 2] {
        [Grid2D::new(0.5, 2.0, -1.0, 1.0, 33, 25).unwrap(), Grid2D::new(0.0, 2.0, -1.0, 1.0, 17, 33).unwrap()]
    }

    fn methods() -> [PoissonMethod; 3] {
        [PoissonMethod::Direct, PoissonMethod::ConjugateGradientLike, PoissonMethod::GaussSeidelSor]
    }

    fn max_abs(a: &Array2<f64>) -> f64 {
        a.fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn affine_stream_function_is_reproduced() {
        for g in grids() {
            let exact = g.fill(|_, z| -z / 0.5);
            for method in methods() {
                let cfg = PoissonConfig { method, ..PoissonConfig::default() };
                let (phi, stats) = poisson_solve(&Array2::zeros(g.shape()), &g, &exact, &cfg).unwrap();
                assert!(max_abs(&(&phi - &exact)) < 1e-9, "{method}");
                assert!(stats.residual <= stats.threshold);
            }
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        for g in grids() {
            let zero = Array2::zeros(g.shape());
            let (phi, _) = poisson_solve(&zero, &g, &zero, &PoissonConfig::default()).unwrap();
            assert_eq!(max_abs(&phi), 0.0);
        }
    }

    #[test]
    fn operator_round_trip() {
        for g in grids() {
            let target = g.fill(|r, z| r * r * z + (3.0 * z).sin() * (1.0 + r));
            for method in methods() {
                let cfg = PoissonConfig { method, tol: 1e-13, ..PoissonConfig::default() };
                let solver = PoissonSolver::new(&g, &cfg).unwrap();
                let omega = solver.operator().apply_free(&target);
                let mut phi = Array2::zeros(g.shape());
                solver.solve(&mut phi, &omega, &target).unwrap();
                assert!(max_abs(&(&phi - &target)) < 1e-8, "{method}: {}", max_abs(&(&phi - &target)));
            }
        }
    }

    #[test]
    fn iteration_cap_is_reported() {
        let g = grids()[0];
        let cfg = PoissonConfig { method: PoissonMethod::GaussSeidelSor, max_iters: 3, ..PoissonConfig::default() };
        let target = g.fill(|r, z| r * z);
        let err = poisson_solve(&Array2::from_elem(g.shape(), 1.0), &g, &target, &cfg).unwrap_err();
        assert!(matches!(err, SolverError::NoConvergence { iterations: 3, .. }));
    }

    #[test]
    fn config_validation() {
        assert!(PoissonConfig { sor_omega: 2.0, ..PoissonConfig::default() }.validate().is_err());
        assert!(PoissonConfig { tol: 0.0, ..PoissonConfig::default() }.validate().is_err());
        assert_eq!("sor".parse::<PoissonMethod>().unwrap(), PoissonMethod::GaussSeidelSor);
    }
}
