use proptest::prelude::*;

use blowlab_core::checks::{energy_ball, CheckId, ResidualReport, TolerancePolicy};
use blowlab_core::fields::{basis_convert, velocity_cart, velocity_cyl, velocity_gradient_cart, FieldSample};
use blowlab_core::solver::{
    biot_savart_velocities, discrete_divergence, run_manufactured, Grid2D, PoissonConfig, PoissonMethod, PoissonSolver,
    RunConfig, Solver, State,
};
use blowlab_core::{CartPoint, CylPoint, Family, Frame, SolutionParams};
use ndarray::Array2;

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::A), Just(Family::B)]
}

fn nonzero(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo..hi, any::<bool>()).prop_map(|(x, neg)| if neg { -x } else { x })
}

fn params() -> impl Strategy<Value = SolutionParams> {
    (nonzero(0.2, 2.0), nonzero(0.2, 2.0), 0.5..2.0f64, 0.01..1.0f64, family())
        .prop_map(|(a, k, ts, nu, f)| SolutionParams::new(a, k, ts, nu, f).unwrap())
}

/// Admissible point: `t` before blowup, `r > 1e-3`.
fn point(p: SolutionParams) -> impl Strategy<Value = (SolutionParams, CartPoint)> {
    (0.0..0.95f64, 1e-3..3.0f64, 0.0..std::f64::consts::TAU, -3.0..3.0f64)
        .prop_map(move |(tf, r, th, z)| (p, CartPoint::new(tf * p.t_star(), r * th.cos(), r * th.sin(), z)))
}

fn sample() -> impl Strategy<Value = (SolutionParams, CartPoint)> {
    params().prop_flat_map(point)
}

fn max_abs(a: &Array2<f64>) -> f64 {
    a.fold(0.0f64, |m, v| m.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gradient_is_trace_free((p, q) in sample()) {
        let g = velocity_gradient_cart(&p, &q).unwrap();
        let scale = g.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let trace = g[0][0] + g[1][1] + g[2][2];
        prop_assert!(trace.abs() <= 1e-12 * scale.max(1.0), "trace {trace} scale {scale}");
    }

    #[test]
    fn cartesian_and_cylindrical_frames_agree((p, q) in sample()) {
        let cyl = FieldSample::velocity_only(Frame::Cylindrical, velocity_cyl(&p, &q.to_cyl()).unwrap());
        let back = basis_convert(&cyl, &q).unwrap();
        let cart = velocity_cart(&p, &q).unwrap();
        let scale = cart.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (b, c) in back.velocity.iter().zip(cart) {
            prop_assert!((b - c).abs() <= 1e-13 * scale.max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn radial_velocity_doubles_when_tau_halves((p, q) in sample()) {
        let c = q.to_cyl();
        let tau = p.t_star() - c.t;
        let later = CylPoint::new(p.t_star() - tau / 2.0, c.r, c.z);
        let v0 = velocity_cyl(&p, &c).unwrap()[0];
        let v1 = velocity_cyl(&p, &later).unwrap()[0];
        prop_assert!((v1 - 2.0 * v0).abs() <= 1e-13 * v1.abs());
    }

    #[test]
    fn family_a_swirl_is_frozen(a in nonzero(0.2, 2.0), k in nonzero(0.2, 2.0), t1 in 0.0..0.95f64, t2 in 0.0..0.95f64,
                                r in 1e-3..3.0f64, z in -3.0..3.0f64) {
        let p = SolutionParams::new(a, k, 1.0, 0.1, Family::A).unwrap();
        let w1 = velocity_cyl(&p, &CylPoint::new(t1, r, z)).unwrap()[1];
        let w2 = velocity_cyl(&p, &CylPoint::new(t2, r, z)).unwrap()[1];
        prop_assert_eq!(w1, w2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn default_policy_passes_every_check(p in params(), tf in 0.0..0.95f64, r in 0.2..3.0f64,
                                         th in 0.0..std::f64::consts::TAU, z in -3.0..3.0f64) {
        let q = CartPoint::new(tf * p.t_star(), r * th.cos(), r * th.sin(), z);
        let pol = TolerancePolicy::default();
        for id in CheckId::ALL {
            let res = id.evaluate(&p, &q, &pol).unwrap();
            let report = ResidualReport::reduce(id, &[(q, res)], &pol);
            prop_assert!(report.pass, "{}", report.line());
            prop_assert_eq!(report.pass, report.max_rel <= pol.rel_tol() || report.max_abs <= pol.abs_tol());
        }
    }

    #[test]
    fn energy_grows_with_radius(a in 1.0..3.0f64, k in 0.01..0.2f64, r0 in 0.5..2.0f64) {
        let p = SolutionParams::new(a, k, 1.0, 0.1, Family::B).unwrap();
        let e1 = energy_ball(&p, 0.0, r0, 64).unwrap();
        let e2 = energy_ball(&p, 0.0, 1.5 * r0, 64).unwrap();
        prop_assert!(e2 > e1);
        let later = energy_ball(&p, 0.5, r0, 64).unwrap();
        prop_assert!(later > e1);
    }
}

fn grid(axis: bool, n: usize) -> Grid2D {
    let r_min = if axis { 0.0 } else { 0.5 };
    Grid2D::new(r_min, 2.0, -1.0, 1.0, n, n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn poisson_round_trip(axis in any::<bool>(), c in prop::array::uniform4(-2.0..2.0f64),
                          method in prop_oneof![Just(PoissonMethod::Direct), Just(PoissonMethod::ConjugateGradientLike)]) {
        let g = grid(axis, 17);
        let target = g.fill(|r, z| c[0] + c[1] * z + c[2] * r * r * z + c[3] * (2.0 * z).sin() * (1.0 + r * r));
        let cfg = PoissonConfig { method, tol: 1e-13, ..PoissonConfig::default() };
        let solver = PoissonSolver::new(&g, &cfg).unwrap();
        let omega = solver.operator().apply_free(&target);
        let mut phi = Array2::zeros(g.shape());
        let stats = solver.solve(&mut phi, &omega, &target).unwrap();
        prop_assert!(stats.residual <= stats.threshold);
        prop_assert!(max_abs(&(&phi - &target)) < 1e-8);
    }

    #[test]
    fn recovered_velocity_is_discretely_incompressible(axis in any::<bool>(), alpha in 0.5..2.0f64, beta in 0.5..2.0f64) {
        let phi = |g: &Grid2D| g.fill(|r, z| (alpha * z).sin() * (beta * r).cos());
        let div = |n: usize| {
            let g = grid(axis, n);
            let (vr, vz) = biot_savart_velocities(&phi(&g), &g);
            max_abs(&discrete_divergence(&vr, &vz, &g))
        };
        let (coarse, fine) = (div(33), div(65));
        // Second order: the defect shrinks close to fourfold, bounded by h² times the field's third derivatives.
        let h = 2.0 / 32.0;
        prop_assert!(coarse <= 20.0 * h * h * (alpha + beta).powi(3));
        prop_assert!(fine <= coarse / 3.0, "coarse {coarse} fine {fine}");
    }

    #[test]
    fn zero_is_a_fixed_point(axis in any::<bool>(), dt in 1e-4..1e-2f64) {
        let fam = if axis { Family::B } else { Family::A };
        let p = SolutionParams::new(1.0, 1.0, 1.0, 0.1, fam).unwrap();
        let g = grid(axis, 17);
        let solver = Solver::new(&RunConfig::new(p, g, 0.5)).unwrap();
        let zero = State::zeros(&g, 0.0);
        let (next, _) = solver.step_with_edges(&zero, dt, &zero).unwrap();
        prop_assert_eq!(max_abs(&next.v1), 0.0);
        prop_assert_eq!(max_abs(&next.omega1), 0.0);
        prop_assert_eq!(max_abs(&next.phi1), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn errors_shrink_under_refinement(a in 0.5..1.5f64, k in nonzero(0.5, 1.5), fam in family()) {
        let p = SolutionParams::new(a, k, 1.0, 0.1, fam).unwrap();
        let axis = fam == Family::B;
        let errs: Vec<f64> = [9, 17, 33]
            .iter()
            .map(|&n| {
                let cfg = RunConfig::new(p, grid(axis, n), 0.2);
                let series = run_manufactured(&cfg).unwrap();
                prop_assert!(series.max_omega1() <= 10.0 * cfg.poisson.tol * (1.0 + max_abs(&series.final_state.phi1)));
                Ok(series.last().err_v1_inf)
            })
            .collect::<Result<_, TestCaseError>>()?;
        for w in errs.windows(2) {
            prop_assert!(w[1] <= 1.1 * w[0], "{errs:?}");
        }
    }
}
