//! Grid-refinement order extraction and the approach-to-blowup chase.

use std::fmt;

use crate::checks::{fit_log_log, BlowupFit, BlowupQuantity};
use crate::table::{header_comment, Table};

use super::stepper::{biot_savart_velocities, Solver};
use super::{DtRule, Result, RunConfig, SolverError, State};

/// Accepted observed-order window.
pub const ORDER_BAND: (f64, f64) = (1.7, 2.3);
/// Errors below this multiple of the field scale count as rounding.
pub const EXACT_FLOOR_REL: f64 = 1e-10;
/// `δ ≥ DELTA_FLOOR_REL · T*`.
pub const DELTA_FLOOR_REL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    Observed(f64),
    /// Both errors at the rounding floor.
    Exact,
}

impl Order {
    pub fn passes(self) -> bool {
        self.within(ORDER_BAND)
    }

    pub fn within(self, band: (f64, f64)) -> bool {
        match self {
            Order::Exact => true,
            Order::Observed(p) => p >= band.0 && p <= band.1,
        }
    }

    fn between(coarse: f64, fine: f64, ratio: f64, floor: f64) -> Self {
        if coarse <= floor && fine <= floor {
            Order::Exact
        } else {
            Order::Observed((coarse / fine).ln() / ratio.ln())
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Observed(p) => write!(f, "{p:.4}"),
            Order::Exact => f.write_str("exact"),
        }
    }
}

/// How the step shrinks with the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtScaling {
    /// `dt ∝ h²`; temporal error stays subordinate for a second-order scheme.
    Square,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceLevel {
    pub nodes: usize,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub err_v1: f64,
    pub err_phi1: f64,
    pub max_omega1: f64,
    pub max_poisson_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldOrders {
    pub field: &'static str,
    pub orders: Vec<Order>,
    pub floor: f64,
}

impl FieldOrders {
    pub fn pass(&self) -> bool {
        self.pass_within(ORDER_BAND)
    }

    pub fn pass_within(&self, band: (f64, f64)) -> bool {
        self.orders.iter().all(|o| o.within(band))
    }

    pub fn line(&self) -> String {
        let list: Vec<String> = self.orders.iter().map(|o| o.to_string()).collect();
        format!(
            "{} ORDER {} orders=[{}] band=[{}, {}]",
            if self.pass() { "PASS" } else { "FAIL" },
            self.field,
            list.join(", "),
            ORDER_BAND.0,
            ORDER_BAND.1
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub config: RunConfig,
    pub levels: Vec<ConvergenceLevel>,
    pub v1: FieldOrders,
    pub phi1: FieldOrders,
    /// `ω1` bound: ten times the Poisson tolerance.
    pub omega1_bound: f64,
}

impl ConvergenceReport {
    pub fn max_omega1(&self) -> f64 {
        self.levels.iter().fold(0.0, |m, l| m.max(l.max_omega1))
    }

    pub fn omega1_pass(&self) -> bool {
        self.max_omega1() <= self.omega1_bound
    }

    pub fn all_pass(&self) -> bool {
        self.v1.pass() && self.phi1.pass() && self.omega1_pass()
    }

    pub fn lines(&self) -> Vec<String> {
        vec![
            self.v1.line(),
            self.phi1.line(),
            format!(
                "{} OMEGA1_BOUND max={:.3e} bound={:.3e}",
                if self.omega1_pass() { "PASS" } else { "FAIL" },
                self.max_omega1(),
                self.omega1_bound
            ),
        ]
    }

    pub fn to_table(&self) -> Table {
        let c = &self.config;
        let params = format!("{} t_end={} scheme={} advection={}", c.params, c.t_end, c.time_scheme, c.advection);
        let mut t = Table::new(
            header_comment(None, &params),
            ["nodes", "h", "dt", "steps", "err_v1_inf", "err_phi1_inf", "max_omega1", "order_v1", "order_phi1"],
        );
        for (k, l) in self.levels.iter().enumerate() {
            let order = |f: &FieldOrders| if k == 0 { String::from("") } else { f.orders[k - 1].to_string() };
            t.push([
                l.nodes.to_string(),
                l.h.to_string(),
                l.dt.to_string(),
                l.steps.to_string(),
                l.err_v1.to_string(),
                l.err_phi1.to_string(),
                l.max_omega1.to_string(),
                order(&self.v1),
                order(&self.phi1),
            ]);
        }
        t
    }
}

/// Run `cfg` on square-refined copies of its rectangle with `levels[k]`
/// nodes per axis and extract observed orders from final-time errors.
///
/// The coarsest step comes from the configured rule (for `Cfl`, evaluated
/// on the exact fields at `t_end`, where velocities peak); finer levels
/// scale it by `(h/h0)^p` and round so that an integer number of steps
/// lands on `t_end`.
pub fn convergence_study(cfg: &RunConfig, levels: &[usize], scaling: DtScaling) -> Result<ConvergenceReport> {
    if levels.len() < 3 {
        return Err(SolverError::InvalidConfig(format!("need at least 3 levels, got {}", levels.len())));
    }
    if levels.windows(2).any(|w| w[1] - 1 != 2 * (w[0] - 1)) {
        return Err(SolverError::InvalidConfig(format!("levels {levels:?} do not refine by a factor of 2")));
    }
    let coarse_cfg = RunConfig { grid: cfg.grid.with_nodes(levels[0], levels[0])?, ..*cfg };
    let coarse = Solver::new(&coarse_cfg)?;
    let dt0 = match cfg.dt_rule {
        DtRule::Fixed(dt) => dt,
        DtRule::Cfl(safety) => {
            let peak = State::exact(&cfg.params, &coarse_cfg.grid, cfg.t_end)?;
            safety * coarse.stability_limit(&peak).0
        }
    };
    let h0 = coarse_cfg.grid.hr().max(coarse_cfg.grid.hz());
    let mut out = Vec::with_capacity(levels.len());
    let mut scale = (0.0f64, 0.0f64);
    for &n in levels {
        let grid = cfg.grid.with_nodes(n, n)?;
        let h = grid.hr().max(grid.hz());
        let factor = match scaling {
            DtScaling::Square => (h / h0).powi(2),
            DtScaling::Linear => h / h0,
        };
        let steps = (cfg.t_end / (dt0 * factor)).ceil().max(1.0);
        let dt = cfg.t_end / steps;
        let level_cfg = RunConfig { grid, dt_rule: DtRule::Fixed(dt), ..*cfg };
        let series = Solver::new(&level_cfg)?.run()?;
        let exact = State::exact(&cfg.params, &grid, cfg.t_end)?;
        let sup = |a: &ndarray::Array2<f64>| a.fold(0.0f64, |m, v| m.max(v.abs()));
        scale = (sup(&exact.v1).max(1.0), sup(&exact.phi1).max(1.0));
        let last = series.last();
        out.push(ConvergenceLevel {
            nodes: n,
            h,
            dt,
            steps: series.steps,
            err_v1: last.err_v1_inf,
            err_phi1: last.err_phi1_inf,
            max_omega1: series.max_omega1(),
            max_poisson_ratio: series.rows.iter().fold(0.0, |m, r| {
                if r.poisson_threshold > 0.0 {
                    m.max(r.poisson_residual / r.poisson_threshold)
                } else {
                    m
                }
            }),
        });
    }
    let orders = |err: fn(&ConvergenceLevel) -> f64, floor: f64| -> Vec<Order> {
        out.windows(2).map(|w| Order::between(err(&w[0]), err(&w[1]), w[0].h / w[1].h, floor)).collect()
    };
    let v1_floor = EXACT_FLOOR_REL * scale.0;
    let phi1_floor = EXACT_FLOOR_REL * scale.1;
    Ok(ConvergenceReport {
        config: *cfg,
        v1: FieldOrders { field: "v1", orders: orders(|l| l.err_v1, v1_floor), floor: v1_floor },
        phi1: FieldOrders { field: "phi1", orders: orders(|l| l.err_phi1, phi1_floor), floor: phi1_floor },
        omega1_bound: 10.0 * cfg.poisson.tol,
        levels: out,
    })
}

/// What the chase measures at each end time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChaseQuantity {
    /// `sup_z |v^r(r_max, z)|` from the recovered stream function.
    VrSupAtRmax,
    /// `sup |v1|` over the grid.
    V1Sup,
}

impl ChaseQuantity {
    pub fn name(self) -> &'static str {
        match self {
            ChaseQuantity::VrSupAtRmax => "vr_sup_at_rmax",
            ChaseQuantity::V1Sup => "v1_sup",
        }
    }
}

/// Run to `T* - δ` for each `δ` and fit the measured quantity against `τ = δ`.
pub fn blowup_chase(cfg: &RunConfig, deltas: &[f64], quantity: ChaseQuantity) -> Result<BlowupFit> {
    if deltas.len() < 2 {
        return Err(SolverError::InvalidConfig("need at least two values of delta".into()));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(SolverError::InvalidConfig(format!("deltas {deltas:?} must be strictly decreasing")));
    }
    let t_star = cfg.params.t_star();
    let floor = DELTA_FLOOR_REL * t_star;
    if let Some(d) = deltas.iter().find(|&&d| d < floor || d >= t_star) {
        return Err(SolverError::InvalidConfig(format!("delta {d} outside [{floor}, {t_star})")));
    }
    let mut values = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let run = RunConfig { t_end: t_star - delta, min_gap: cfg.min_gap.min(delta), ..*cfg };
        let series = Solver::new(&run)?.run()?;
        let s = &series.final_state;
        let value = match quantity {
            ChaseQuantity::VrSupAtRmax => {
                let (vr, _) = biot_savart_velocities(&s.phi1, &run.grid);
                vr.row(run.grid.nr() - 1).fold(0.0f64, |m, v| m.max(v.abs()))
            }
            ChaseQuantity::V1Sup => s.v1.fold(0.0f64, |m, v| m.max(v.abs())),
        };
        values.push(value);
    }
    Ok(fit_log_log(BlowupQuantity::NumericalVrSup, deltas, &values).map(|mut f| {
        if quantity == ChaseQuantity::V1Sup {
            f.quantity = BlowupQuantity::NumericalV1Sup;
        }
        f
    })?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Family, SolutionParams};
    use crate::solver::{Advection, Grid2D};

    #[test]
    fn order_classification() {
        assert_eq!(Order::between(1e-14, 1e-14, 2.0, 1e-10), Order::Exact);
        match Order::between(4e-4, 1e-4, 2.0, 1e-10) {
            Order::Observed(p) => assert!((p - 2.0).abs() < 1e-12),
            o => panic!("{o:?}"),
        }
        assert!(!Order::Observed(1.0).passes() && Order::Observed(2.1).passes() && Order::Exact.passes());
    }

    fn family_a() -> RunConfig {
        let p = SolutionParams::new(1.0, 1.0, 1.0, 0.1, Family::A).unwrap();
        RunConfig::new(p, Grid2D::new(0.5, 2.0, -1.0, 1.0, 9, 9).unwrap(), 0.25)
    }

    #[test]
    fn small_study_is_second_order() {
        let rep = convergence_study(&family_a(), &[9, 17, 33], DtScaling::Square).unwrap();
        assert!(rep.v1.pass(), "{:?}", rep.lines());
        assert!(rep.phi1.orders.iter().all(|o| *o == Order::Exact));
        assert!(rep.omega1_pass());
        assert_eq!(rep.to_table().rows.len(), 3);
    }

    #[test]
    fn upwind_control_is_flagged() {
        let mut c = family_a();
        c.advection = Advection::Upwind1;
        let rep = convergence_study(&c, &[9, 17, 33], DtScaling::Square).unwrap();
        assert!(!rep.v1.pass(), "{:?}", rep.lines());
    }

    #[test]
    fn rejects_bad_ladders() {
        let c = family_a();
        assert!(convergence_study(&c, &[9, 17], DtScaling::Square).is_err());
        assert!(convergence_study(&c, &[9, 18, 33], DtScaling::Square).is_err());
        assert!(blowup_chase(&c, &[0.1, 0.2], ChaseQuantity::VrSupAtRmax).is_err());
        assert!(blowup_chase(&c, &[0.1, 1e-4], ChaseQuantity::VrSupAtRmax).is_err());
    }

    #[test]
    fn chase_tracks_the_stretching_rate() {
        let fit = blowup_chase(&family_a(), &[0.2, 0.1, 0.05], ChaseQuantity::VrSupAtRmax).unwrap();
        assert!((fit.exponent + 1.0).abs() < 0.05, "{}", fit.line());
        assert!((fit.amplitude_c - 2.0).abs() < 0.1, "{}", fit.line());
    }
}
