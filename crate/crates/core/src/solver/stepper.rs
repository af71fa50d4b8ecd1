use ndarray::{Array2, Zip};

use crate::fields::{transformed_exact, CylPoint, SolutionParams};
use crate::table::{header_comment, Table};

use super::grid::Grid2D;
use super::operator::{EdgeKind, Stencil5};
use super::poisson::{PoissonSolver, PoissonStats};
use super::{Advection, DtRule, Result, RunConfig, SolverError, State, TimeScheme};

/// Second-order derivative of a prescribed-edge field: central inside,
/// one-sided on the edges, zero on the axis by evenness.
fn d_edge(f: &Array2<f64>, grid: &Grid2D, along_r: bool) -> Array2<f64> {
    let (nr, nz) = grid.shape();
    let (n, h) = if along_r { (nr, grid.hr()) } else { (nz, grid.hz()) };
    Array2::from_shape_fn((nr, nz), |(i, j)| {
        let k = if along_r { i } else { j };
        let at = |m: usize| if along_r { f[[m, j]] } else { f[[i, m]] };
        if along_r && i == 0 && grid.has_axis() {
            0.0
        } else if k == 0 {
            (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
        } else if k == n - 1 {
            (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h)
        } else {
            (at(k + 1) - at(k - 1)) / (2.0 * h)
        }
    })
}

/// Central derivative of a transported field; zero on mirror edges and the
/// axis, unused on prescribed rows.
fn d_mirror(f: &Array2<f64>, grid: &Grid2D, along_r: bool) -> Array2<f64> {
    let (nr, nz) = grid.shape();
    Array2::from_shape_fn((nr, nz), |(i, j)| {
        if along_r {
            if i == 0 || i == nr - 1 {
                0.0
            } else {
                (f[[i + 1, j]] - f[[i - 1, j]]) / (2.0 * grid.hr())
            }
        } else if j == 0 || j == nz - 1 {
            0.0
        } else {
            (f[[i, j + 1]] - f[[i, j - 1]]) / (2.0 * grid.hz())
        }
    })
}

/// `u ∂ f` with first-order upwinding.
fn upwind(f: &Array2<f64>, u: &Array2<f64>, grid: &Grid2D, along_r: bool) -> Array2<f64> {
    let (nr, nz) = grid.shape();
    Array2::from_shape_fn((nr, nz), |(i, j)| {
        let v = u[[i, j]];
        if along_r {
            if i == 0 || i == nr - 1 {
                return 0.0;
            }
            let d = if v > 0.0 { f[[i, j]] - f[[i - 1, j]] } else { f[[i + 1, j]] - f[[i, j]] };
            v * d / grid.hr()
        } else {
            if j == 0 || j == nz - 1 {
                return 0.0;
            }
            let d = if v > 0.0 { f[[i, j]] - f[[i, j - 1]] } else { f[[i, j + 1]] - f[[i, j]] };
            v * d / grid.hz()
        }
    })
}

/// `v^r = -r ∂_z φ1`, `v^z = 2 φ1 + r ∂_r φ1`.
pub fn biot_savart_velocities(phi1: &Array2<f64>, grid: &Grid2D) -> (Array2<f64>, Array2<f64>) {
    let dr = d_edge(phi1, grid, true);
    let dz = d_edge(phi1, grid, false);
    let vr = Array2::from_shape_fn(grid.shape(), |(i, j)| -grid.r(i) * dz[[i, j]]);
    let vz = Array2::from_shape_fn(grid.shape(), |(i, j)| 2.0 * phi1[[i, j]] + grid.r(i) * dr[[i, j]]);
    (vr, vz)
}

/// `∂_r(r v^r) + ∂_z(r v^z)` on interior nodes, zero elsewhere.
pub fn discrete_divergence(vr: &Array2<f64>, vz: &Array2<f64>, grid: &Grid2D) -> Array2<f64> {
    let (nr, nz) = grid.shape();
    Array2::from_shape_fn((nr, nz), |(i, j)| {
        if i == 0 || j == 0 || i == nr - 1 || j == nz - 1 {
            return 0.0;
        }
        let flux_r = (grid.r(i + 1) * vr[[i + 1, j]] - grid.r(i - 1) * vr[[i - 1, j]]) / (2.0 * grid.hr());
        let flux_z = grid.r(i) * (vz[[i, j + 1]] - vz[[i, j - 1]]) / (2.0 * grid.hz());
        flux_r + flux_z
    })
}

/// Time derivatives of `(v1, ω1)` with central advection; zero on
/// prescribed nodes.
pub fn rhs(state: &State, params: &SolutionParams, grid: &Grid2D) -> (Array2<f64>, Array2<f64>) {
    let transport = Stencil5::l3(grid, EdgeKind::NeumannZ);
    let (mut dv, mut dw) = explicit_terms(state, grid, &transport, Advection::Central);
    dv.scaled_add(params.nu(), &transport.apply_free(&state.v1));
    dw.scaled_add(params.nu(), &transport.apply_free(&state.omega1));
    (dv, dw)
}

fn explicit_terms(state: &State, grid: &Grid2D, transport: &Stencil5, adv: Advection) -> (Array2<f64>, Array2<f64>) {
    let (vr, vz) = biot_savart_velocities(&state.phi1, grid);
    let advect = |f: &Array2<f64>| -> Array2<f64> {
        match adv {
            Advection::Central => &(&vr * &d_mirror(f, grid, true)) + &(&vz * &d_mirror(f, grid, false)),
            Advection::Upwind1 => &upwind(f, &vr, grid, true) + &upwind(f, &vz, grid, false),
        }
    };
    let dz_phi = d_edge(&state.phi1, grid, false);
    let v1_sq = state.v1.mapv(|v| v * v);
    let mut dv = &(&state.v1 * &dz_phi) * 2.0 - &advect(&state.v1);
    let mut dw = d_mirror(&v1_sq, grid, false) - &advect(&state.omega1);
    for a in [&mut dv, &mut dw] {
        Zip::from(a).and(&transport.fixed).for_each(|v, &f| {
            if f {
                *v = 0.0;
            }
        });
    }
    (dv, dw)
}

/// One row of a manufactured-solution error history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub time: f64,
    pub dt_used: f64,
    pub err_v1_inf: f64,
    pub err_v1_l2: f64,
    pub err_phi1_inf: f64,
    pub err_omega1_inf: f64,
    pub poisson_residual: f64,
    pub poisson_threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    pub config: RunConfig,
    pub rows: Vec<ErrorRow>,
    pub steps: usize,
    pub final_state: State,
}

pub const ERROR_SERIES_HEADER: [&str; 8] = [
    "time",
    "err_v1_inf",
    "err_v1_l2",
    "err_phi1_inf",
    "err_omega1_inf",
    "dt_used",
    "poisson_residual",
    "poisson_threshold",
];

impl ErrorSeries {
    pub fn last(&self) -> &ErrorRow {
        self.rows.last().expect("a run records at least the initial row")
    }

    pub fn max_omega1(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.err_omega1_inf))
    }

    pub fn to_table(&self) -> Table {
        let c = &self.config;
        let g = &c.grid;
        let params = format!(
            "{} grid=[{},{}]x[{},{}] nr={} nz={} t_end={} scheme={} poisson={} advection={}",
            c.params,
            g.r_min(),
            g.r_max(),
            g.z_min(),
            g.z_max(),
            g.nr(),
            g.nz(),
            c.t_end,
            c.time_scheme,
            c.poisson.method,
            c.advection
        );
        let mut t = Table::new(header_comment(None, &params), ERROR_SERIES_HEADER);
        for r in &self.rows {
            t.push([
                r.time,
                r.err_v1_inf,
                r.err_v1_l2,
                r.err_phi1_inf,
                r.err_omega1_inf,
                r.dt_used,
                r.poisson_residual,
                r.poisson_threshold,
            ]);
        }
        t
    }
}

/// Time integrator bound to one configuration.
#[derive(Debug, Clone)]
pub struct Solver {
    cfg: RunConfig,
    poisson: PoissonSolver,
    transport: Stencil5,
}

impl Solver {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg: *cfg,
            poisson: PoissonSolver::new(&cfg.grid, &cfg.poisson)?,
            transport: Stencil5::l3(&cfg.grid, EdgeKind::NeumannZ),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    /// Exact data on the grid at time `t`; only edge nodes are evaluated.
    fn edge_values(&self, t: f64) -> Result<State> {
        let g = &self.cfg.grid;
        let mut s = State::zeros(g, t);
        let (nr, nz) = g.shape();
        for i in 0..nr {
            for j in 0..nz {
                if i != 0 && i != nr - 1 && j != 0 && j != nz - 1 {
                    continue;
                }
                if i == 0 && g.has_axis() && j != 0 && j != nz - 1 {
                    continue;
                }
                let e = transformed_exact(&self.cfg.params, &CylPoint::new(t, g.r(i), g.z(j)))?;
                s.v1[[i, j]] = e[0];
                s.omega1[[i, j]] = e[1];
                s.phi1[[i, j]] = e[2];
            }
        }
        Ok(s)
    }

    /// Overwrite prescribed nodes of `v1`, `ω1` and recover `φ1` at `t`.
    fn close(&self, s: &mut State, edges: &State) -> Result<PoissonStats> {
        for (a, b) in [(&mut s.v1, &edges.v1), (&mut s.omega1, &edges.omega1)] {
            Zip::from(a).and(b).and(&self.transport.fixed).for_each(|x, &g, &f| {
                if f {
                    *x = g;
                }
            });
        }
        self.poisson.solve(&mut s.phi1, &s.omega1, &edges.phi1)
    }

    /// Exact `v1`, `ω1` at `t = 0` with `φ1` recovered by the Poisson solve.
    pub fn initial_state(&self) -> Result<(State, PoissonStats)> {
        let mut s = State::exact(&self.cfg.params, &self.cfg.grid, 0.0)?;
        let edges = self.edge_values(0.0)?;
        let stats = self.close(&mut s, &edges)?;
        Ok((s, stats))
    }

    fn diffusion(&self, f: &Array2<f64>) -> Array2<f64> {
        self.transport.apply_free(f) * self.cfg.params.nu()
    }

    /// Largest stable step and the limit that binds.
    pub fn stability_limit(&self, s: &State) -> (f64, &'static str) {
        let g = &self.cfg.grid;
        let (vr, vz) = biot_savart_velocities(&s.phi1, g);
        let vmax = vr.iter().chain(vz.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
        let adv = if vmax > 0.0 { g.hr().min(g.hz()) / vmax } else { f64::INFINITY };
        let diff = match self.cfg.time_scheme {
            TimeScheme::Rk2Explicit => 1.0 / (self.cfg.params.nu() * self.transport.diagonal_scale()),
            TimeScheme::ImexDiffusion => f64::INFINITY,
        };
        if adv <= diff {
            (adv, "advective CFL")
        } else {
            (diff, "explicit diffusion")
        }
    }

    fn choose_dt(&self, s: &State) -> Result<f64> {
        let (limit, reason) = self.stability_limit(s);
        match self.cfg.dt_rule {
            DtRule::Fixed(dt) if dt > limit => Err(SolverError::CflViolation { dt, limit, reason }),
            DtRule::Fixed(dt) => Ok(dt),
            DtRule::Cfl(safety) => Ok(safety * limit),
        }
    }

    fn implicit_solve(&self, op: &Stencil5, guess: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
        let mut x = guess.clone();
        let scale = b.fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let tol = 1e-13 * scale;
        op.bicgstab(&mut x, b, tol, 10_000).map_err(|(iterations, residual)| SolverError::NoConvergence {
            iterations,
            residual,
            threshold: tol,
        })?;
        Ok(x)
    }

    /// Advance by `dt` with exact edge data.
    pub fn step(&self, s: &State, dt: f64) -> Result<(State, PoissonStats)> {
        let edges = self.edge_values(s.time + dt)?;
        self.step_with_edges(s, dt, &edges)
    }

    /// Advance by `dt`; prescribed nodes of every field are taken from
    /// `edges`, which is read at the new time level.
    pub fn step_with_edges(&self, s: &State, dt: f64, edges: &State) -> Result<(State, PoissonStats)> {
        let t1 = s.time + dt;
        let adv = self.cfg.advection;
        let g = &self.cfg.grid;
        let (e0v, e0w) = explicit_terms(s, g, &self.transport, adv);
        let (d0v, d0w) = (self.diffusion(&s.v1), self.diffusion(&s.omega1));
        let mut mid = s.clone();
        mid.time = t1;
        let mut out = s.clone();
        out.time = t1;
        match self.cfg.time_scheme {
            TimeScheme::Rk2Explicit => {
                mid.v1 = &s.v1 + &((&e0v + &d0v) * dt);
                mid.omega1 = &s.omega1 + &((&e0w + &d0w) * dt);
                self.close(&mut mid, edges)?;
                let (e1v, e1w) = explicit_terms(&mid, g, &self.transport, adv);
                let (d1v, d1w) = (self.diffusion(&mid.v1), self.diffusion(&mid.omega1));
                out.v1 = &s.v1 + &((&e0v + &d0v + &e1v + &d1v) * (0.5 * dt));
                out.omega1 = &s.omega1 + &((&e0w + &d0w + &e1w + &d1w) * (0.5 * dt));
            }
            TimeScheme::ImexDiffusion => {
                let op = self.transport.affine(1.0, -0.5 * dt * self.cfg.params.nu());
                let with_edges = |mut b: Array2<f64>, edge: &Array2<f64>| {
                    Zip::from(&mut b).and(edge).and(&self.transport.fixed).for_each(|x, &e, &f| {
                        if f {
                            *x = e;
                        }
                    });
                    b
                };
                let half_d0v = &d0v * (0.5 * dt);
                let half_d0w = &d0w * (0.5 * dt);
                let bv = with_edges(&s.v1 + &(&e0v * dt) + &half_d0v, &edges.v1);
                let bw = with_edges(&s.omega1 + &(&e0w * dt) + &half_d0w, &edges.omega1);
                mid.v1 = self.implicit_solve(&op, &s.v1, &bv)?;
                mid.omega1 = self.implicit_solve(&op, &s.omega1, &bw)?;
                self.close(&mut mid, edges)?;
                let (e1v, e1w) = explicit_terms(&mid, g, &self.transport, adv);
                let bv = with_edges(&s.v1 + &((&e0v + &e1v) * (0.5 * dt)) + &half_d0v, &edges.v1);
                let bw = with_edges(&s.omega1 + &((&e0w + &e1w) * (0.5 * dt)) + &half_d0w, &edges.omega1);
                out.v1 = self.implicit_solve(&op, &mid.v1, &bv)?;
                out.omega1 = self.implicit_solve(&op, &mid.omega1, &bw)?;
            }
        }
        out.phi1 = mid.phi1.clone();
        let stats = self.close(&mut out, edges)?;
        if !out.is_finite() {
            return Err(SolverError::NonFinite(t1));
        }
        Ok((out, stats))
    }

    fn error_row(&self, s: &State, dt: f64, stats: &PoissonStats) -> Result<ErrorRow> {
        let exact = State::exact(&self.cfg.params, &self.cfg.grid, s.time)?;
        let max_diff =
            |a: &Array2<f64>, b: &Array2<f64>| Zip::from(a).and(b).fold(0.0f64, |m, x, y| m.max((x - y).abs()));
        let sq: f64 = Zip::from(&s.v1).and(&exact.v1).fold(0.0, |acc, x, y| acc + (x - y).powi(2));
        Ok(ErrorRow {
            time: s.time,
            dt_used: dt,
            err_v1_inf: max_diff(&s.v1, &exact.v1),
            err_v1_l2: (sq / s.v1.len() as f64).sqrt(),
            err_phi1_inf: max_diff(&s.phi1, &exact.phi1),
            err_omega1_inf: max_diff(&s.omega1, &exact.omega1),
            poisson_residual: stats.residual,
            poisson_threshold: stats.threshold,
        })
    }

    /// Integrate from the exact data at `t = 0` to `t_end`.
    pub fn run(&self) -> Result<ErrorSeries> {
        let t_end = self.cfg.t_end;
        let (mut s, stats) = self.initial_state()?;
        let mut rows = vec![self.error_row(&s, 0.0, &stats)?];
        let mut steps = 0;
        // Snap the final step instead of leaving a sliver.
        let snap = 1e-12 * t_end.max(1.0);
        while t_end - s.time > snap {
            if steps >= self.cfg.max_steps {
                return Err(SolverError::BudgetExceeded { max_steps: self.cfg.max_steps, t_end });
            }
            let mut dt = self.choose_dt(&s)?;
            if s.time + dt > t_end - snap {
                dt = t_end - s.time;
            }
            let (next, stats) = self.step(&s, dt)?;
            s = next;
            steps += 1;
            rows.push(self.error_row(&s, dt, &stats)?);
        }
        Ok(ErrorSeries { config: self.cfg, rows, steps, final_state: s })
    }
}

/// Advance one step with the configured rule.
pub fn step(state: &State, cfg: &RunConfig) -> Result<State> {
    let solver = Solver::new(cfg)?;
    let dt = solver.choose_dt(state)?;
    Ok(solver.step(state, dt)?.0)
}

/// Run the configured problem and record errors against the exact fields.
pub fn run_manufactured(cfg: &RunConfig) -> Result<ErrorSeries> {
    Solver::new(cfg)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Family;

    fn cfg(family: Family, n: usize) -> RunConfig {
        let p = SolutionParams::new(1.0, 1.0, 1.0, 0.1, family).unwrap();
        let r_min = if family == Family::A { 0.5 } else { 0.0 };
        let g = Grid2D::new(r_min, 2.0, -1.0, 1.0, n, n).unwrap();
        RunConfig::new(p, g, 0.3)
    }

    #[test]
    fn velocities_of_exact_stream_function() {
        // φ1 = -a z/τ gives v^r = a r/τ, v^z = -2a z/τ exactly.
        let c = cfg(Family::B, 17);
        let s = State::exact(&c.params, &c.grid, 0.5).unwrap();
        let (vr, vz) = biot_savart_velocities(&s.phi1, &c.grid);
        for ((i, j), v) in vr.indexed_iter() {
            assert!((v - 2.0 * c.grid.r(i)).abs() < 1e-12);
            assert!((vz[[i, j]] + 4.0 * c.grid.z(j)).abs() < 1e-12);
        }
        let div = discrete_divergence(&vr, &vz, &c.grid);
        assert!(div.iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn rhs_matches_time_derivative_of_swirl() {
        // Family B: v1 = k τ^{2a}, so ∂_t v1 = -2a v1/τ.
        let c = cfg(Family::B, 17);
        let s = State::exact(&c.params, &c.grid, 0.5).unwrap();
        let (dv, dw) = rhs(&s, &c.params, &c.grid);
        let expect = -2.0 * 0.25 / 0.5;
        for ((i, j), v) in dv.indexed_iter() {
            if i < c.grid.nr() - 1 {
                assert!((v - expect).abs() < 1e-12, "({i},{j}) {v}");
            }
        }
        assert!(dw.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn vorticity_stays_zero_and_phi_exact() {
        for family in [Family::A, Family::B] {
            let series = run_manufactured(&cfg(family, 17)).unwrap();
            assert!(series.max_omega1() < 1e-12, "{family}: {}", series.max_omega1());
            let last = series.last();
            assert!(last.err_phi1_inf < 1e-11, "{family}: {}", last.err_phi1_inf);
            assert!(last.err_v1_inf < 5e-2, "{family}: {}", last.err_v1_inf);
            assert!((last.time - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn schemes_agree() {
        let mut c = cfg(Family::A, 17);
        let explicit = run_manufactured(&c).unwrap();
        c.time_scheme = TimeScheme::ImexDiffusion;
        let imex = run_manufactured(&c).unwrap();
        let (a, b) = (explicit.last().err_v1_inf, imex.last().err_v1_inf);
        assert!((a - b).abs() < 1e-2 * a, "{a} {b}");
        assert!(imex.steps < explicit.steps);
    }

    #[test]
    fn zero_is_a_fixed_point() {
        for scheme in [TimeScheme::Rk2Explicit, TimeScheme::ImexDiffusion] {
            let mut c = cfg(Family::B, 17);
            c.time_scheme = scheme;
            let solver = Solver::new(&c).unwrap();
            let zero = State::zeros(&c.grid, 0.0);
            let (next, _) = solver.step_with_edges(&zero, 1e-3, &State::zeros(&c.grid, 1e-3)).unwrap();
            assert!(next.v1.iter().chain(next.omega1.iter()).chain(next.phi1.iter()).all(|v| *v == 0.0));
        }
    }

    #[test]
    fn one_step_error_is_small() {
        let mut c = cfg(Family::B, 33);
        c.dt_rule = DtRule::Fixed(1e-4);
        let solver = Solver::new(&c).unwrap();
        let (s0, _) = solver.initial_state().unwrap();
        let (s1, _) = solver.step(&s0, 1e-4).unwrap();
        let exact = State::exact(&c.params, &c.grid, 1e-4).unwrap();
        let err = (&s1.v1 - &exact.v1).fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn fixed_step_violating_stability_is_rejected() {
        let mut c = cfg(Family::B, 33);
        c.dt_rule = DtRule::Fixed(0.1);
        assert!(matches!(run_manufactured(&c), Err(SolverError::CflViolation { .. })));
    }

    #[test]
    fn step_budget() {
        let mut c = cfg(Family::B, 17);
        c.max_steps = 3;
        assert!(matches!(run_manufactured(&c), Err(SolverError::BudgetExceeded { .. })));
    }

    #[test]
    fn error_table_shape() {
        let series = run_manufactured(&cfg(Family::B, 9)).unwrap();
        let t = series.to_table();
        assert_eq!(t.header.len(), 8);
        assert_eq!(t.rows.len(), series.steps + 1);
        assert!(t.to_csv_string().starts_with("# blowlab "));
    }
}
