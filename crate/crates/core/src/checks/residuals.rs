//! Second-order central-difference residuals of the exact fields.
//!
//! Spatial steps are `h·max(1, |x_j|)`; the time step is `h·τ`, so the time
//! stencil never reaches the blowup time.

use crate::fields::{
    pressure_exact, stream_phi_theta, velocity_cart, velocity_cyl, CartPoint, CylPoint, Family, FieldError,
    SolutionParams, Vec3,
};

use super::{CheckError, Normalization, Result, TolerancePolicy};

/// Residual components at one point with the magnitude used to normalize
/// them and an estimate of the rounding floor in absolute units.
#[derive(Debug, Clone, PartialEq)]
pub struct FdResidual {
    pub components: Vec<f64>,
    /// Largest individual term of the equation.
    pub scale: f64,
    pub floor: f64,
}

impl FdResidual {
    pub fn new(components: Vec<f64>, scale: f64, floor: f64) -> Self {
        Self { components, scale, floor }
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn normalized(&self, norm: Normalization) -> f64 {
        match norm {
            Normalization::MaxTerm if self.scale > 0.0 => self.max_abs() / self.scale,
            _ => self.max_abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Richardson {
    Ratio(f64),
    BelowFloor,
}

/// `residual(h) / residual(h/2)` when the finer residual exceeds 100 times
/// its rounding floor.
pub fn richardson<F>(check: F, pol: &TolerancePolicy) -> Result<Richardson>
where
    F: Fn(&TolerancePolicy) -> Result<FdResidual>,
{
    let coarse = check(pol)?;
    let fine = check(&pol.with_fd_step(pol.fd_step() / 2.0)?)?;
    if fine.max_abs() > 100.0 * fine.floor {
        Ok(Richardson::Ratio(coarse.max_abs() / fine.max_abs()))
    } else {
        Ok(Richardson::BelowFloor)
    }
}

fn stencil_error(q: &CartPoint, reason: impl Into<String>) -> CheckError {
    CheckError::StencilCrossesSingularity {
        point: format!("(t={}, x=({}, {}, {}))", q.t, q.x1, q.x2, q.x3),
        reason: reason.into(),
    }
}

fn remap(origin: &CartPoint) -> impl Fn(FieldError) -> CheckError + '_ {
    move |e| match e {
        FieldError::AxisSingularity { .. } | FieldError::EvaluationAtOrPastBlowup { .. } => {
            stencil_error(origin, e.to_string())
        }
        other => CheckError::Field(other),
    }
}

struct Stencil {
    h: Vec3,
    ht: f64,
}

impl Stencil {
    fn new(p: &SolutionParams, q: &CartPoint, pol: &TolerancePolicy) -> Result<Self> {
        let tau = p.tau(q.t)?;
        let h = [pol.step_for(q.x1), pol.step_for(q.x2), pol.step_for(q.x3)];
        if p.family() == Family::A && q.radius() <= 2.0 * h[0].max(h[1]) {
            return Err(stencil_error(q, format!("radius {} within two steps of the axis", q.radius())));
        }
        Ok(Self { h, ht: pol.fd_step() * tau })
    }

    fn shifted(&self, q: &CartPoint, j: usize, sign: f64) -> CartPoint {
        let mut x = q.coords();
        x[j] += sign * self.h[j];
        q.with_coords(x)
    }
}

fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn max_abs3(v: &Vec3) -> f64 {
    v.iter().fold(0.0, |m, c| m.max(c.abs()))
}

/// Velocity and its central first and second differences at `q`.
struct VelocityStencil {
    v: Vec3,
    /// `d1[j][i] ≈ ∂_j v_i`
    d1: [Vec3; 3],
    /// `d2[j][i] ≈ ∂_j² v_i`
    d2: [Vec3; 3],
    vmax: f64,
}

fn velocity_stencil(p: &SolutionParams, q: &CartPoint, st: &Stencil) -> Result<VelocityStencil> {
    let err = remap(q);
    let v = velocity_cart(p, q).map_err(&err)?;
    let mut d1 = [[0.0; 3]; 3];
    let mut d2 = [[0.0; 3]; 3];
    let mut vmax = max_abs3(&v);
    for j in 0..3 {
        let vp = velocity_cart(p, &st.shifted(q, j, 1.0)).map_err(&err)?;
        let vm = velocity_cart(p, &st.shifted(q, j, -1.0)).map_err(&err)?;
        vmax = vmax.max(max_abs3(&vp)).max(max_abs3(&vm));
        let h = st.h[j];
        for i in 0..3 {
            d1[j][i] = (vp[i] - vm[i]) / (2.0 * h);
            d2[j][i] = (vp[i] - 2.0 * v[i] + vm[i]) / (h * h);
        }
    }
    Ok(VelocityStencil { v, d1, d2, vmax })
}

/// Momentum residual `∂_t v + v·∇v + ∇P - νΔv` with the exact pressure.
pub fn fd_ns_residual(p: &SolutionParams, q: &CartPoint, pol: &TolerancePolicy) -> Result<FdResidual> {
    fd_ns_residual_with_pressure(p, q, pol, |x| Ok(pressure_exact(p, &x.to_cyl())?))
}

/// Momentum residual with a caller-supplied pressure field.
pub fn fd_ns_residual_with_pressure<P>(
    p: &SolutionParams,
    q: &CartPoint,
    pol: &TolerancePolicy,
    pressure: P,
) -> Result<FdResidual>
where
    P: Fn(&CartPoint) -> Result<f64>,
{
    let st = Stencil::new(p, q, pol)?;
    let err = remap(q);
    let vs = velocity_stencil(p, q, &st)?;
    let later = CartPoint { t: q.t + st.ht, ..*q };
    let earlier = CartPoint { t: q.t - st.ht, ..*q };
    let vt_p = velocity_cart(p, &later).map_err(&err)?;
    let vt_m = velocity_cart(p, &earlier).map_err(&err)?;
    let vt = sub(&vt_p, &vt_m).map(|d| d / (2.0 * st.ht));

    let mut grad_p = [0.0; 3];
    let mut pmax = pressure(q)?.abs();
    for j in 0..3 {
        let pp = pressure(&st.shifted(q, j, 1.0))?;
        let pm = pressure(&st.shifted(q, j, -1.0))?;
        pmax = pmax.max(pp.abs()).max(pm.abs());
        grad_p[j] = (pp - pm) / (2.0 * st.h[j]);
    }

    let nu = p.nu();
    let mut res = vec![0.0; 3];
    let mut scale = 0.0f64;
    for i in 0..3 {
        let mut terms = vec![vt[i], grad_p[i]];
        for j in 0..3 {
            terms.push(vs.v[j] * vs.d1[j][i]);
            terms.push(-nu * vs.d2[j][i]);
        }
        res[i] = terms.iter().sum();
        scale = terms.iter().fold(scale, |m, t| m.max(t.abs()));
    }
    let vmax = vs.vmax.max(max_abs3(&vt_p)).max(max_abs3(&vt_m));
    let eps = f64::EPSILON;
    let floor = eps
        * (vmax / st.ht
            + (0..3)
                .map(|j| vmax * vmax / st.h[j] + pmax / st.h[j] + 4.0 * nu * vmax / (st.h[j] * st.h[j]))
                .sum::<f64>());
    Ok(FdResidual::new(res, scale, floor))
}

/// `∇·v` by central differences.
pub fn divergence_fd(p: &SolutionParams, q: &CartPoint, pol: &TolerancePolicy) -> Result<FdResidual> {
    let st = Stencil::new(p, q, pol)?;
    let vs = velocity_stencil(p, q, &st)?;
    let terms = [vs.d1[0][0], vs.d1[1][1], vs.d1[2][2]];
    let scale = max_abs3(&terms);
    let floor = f64::EPSILON * vs.vmax * st.h.iter().map(|h| 1.0 / h).sum::<f64>();
    Ok(FdResidual::new(vec![terms.iter().sum()], scale, floor))
}

/// `(v^r + ∂_z φ^θ, v^z - (1/r)∂_r(r φ^θ))` with difference quotients of the
/// closed-form stream function.
pub fn biot_savart_check(p: &SolutionParams, q: &CylPoint, pol: &TolerancePolicy) -> Result<FdResidual> {
    let hr = pol.step_for(q.r);
    let hz = pol.step_for(q.z);
    let origin = q.on_x1_axis();
    if q.r <= 2.0 * hr {
        return Err(stencil_error(&origin, format!("radius {} within two steps of the axis", q.r)));
    }
    let err = remap(&origin);
    let phi = |r: f64, z: f64| stream_phi_theta(p, &CylPoint { r, z, ..*q }).map_err(&err);
    let v = velocity_cyl(p, q).map_err(&err)?;
    let (zp, zm) = (phi(q.r, q.z + hz)?, phi(q.r, q.z - hz)?);
    let (rp, rm) = (phi(q.r + hr, q.z)?, phi(q.r - hr, q.z)?);
    let dz_phi = (zp - zm) / (2.0 * hz);
    let dr_rphi = ((q.r + hr) * rp - (q.r - hr) * rm) / (2.0 * hr) / q.r;
    let res = vec![v[0] + dz_phi, v[2] - dr_rphi];
    let scale = [v[0], dz_phi, v[2], dr_rphi].iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let pmax = [zp, zm, rp, rm].iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let floor = f64::EPSILON * pmax * (1.0 / hz + (q.r + hr) / (hr * q.r));
    Ok(FdResidual::new(res, scale, floor))
}

/// `-Δ_h P - Σ_ij D_j v_i D_i v_j` with the exact pressure.
pub fn pressure_poisson_consistency(p: &SolutionParams, q: &CartPoint, pol: &TolerancePolicy) -> Result<FdResidual> {
    pressure_poisson_with(p, q, pol, |x| Ok(pressure_exact(p, &x.to_cyl())?))
}

pub fn pressure_poisson_with<P>(
    p: &SolutionParams,
    q: &CartPoint,
    pol: &TolerancePolicy,
    pressure: P,
) -> Result<FdResidual>
where
    P: Fn(&CartPoint) -> Result<f64>,
{
    let st = Stencil::new(p, q, pol)?;
    let vs = velocity_stencil(p, q, &st)?;
    let p0 = pressure(q)?;
    let mut terms = Vec::with_capacity(12);
    let mut pmax = p0.abs();
    for j in 0..3 {
        let pp = pressure(&st.shifted(q, j, 1.0))?;
        let pm = pressure(&st.shifted(q, j, -1.0))?;
        pmax = pmax.max(pp.abs()).max(pm.abs());
        terms.push(-(pp - 2.0 * p0 + pm) / (st.h[j] * st.h[j]));
    }
    for i in 0..3 {
        for j in 0..3 {
            terms.push(-vs.d1[j][i] * vs.d1[i][j]);
        }
    }
    let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let hmin = st.h.iter().copied().fold(f64::INFINITY, f64::min);
    let gmax = vs.d1.iter().map(max_abs3).fold(0.0, f64::max);
    let floor = f64::EPSILON * (12.0 * pmax / (hmin * hmin) + 18.0 * gmax * vs.vmax / hmin);
    Ok(FdResidual::new(vec![terms.iter().sum()], scale, floor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::velocity_gradient_cart;

    fn params(a: f64, k: f64, nu: f64, f: Family) -> SolutionParams {
        SolutionParams::new(a, k, 1.0, nu, f).unwrap()
    }

    fn pol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    #[test]
    fn momentum_examples() {
        let b = params(1.0, 1.0, 0.1, Family::B);
        let r = fd_ns_residual(&b, &CartPoint::new(0.5, 1.0, 1.0, 1.0), &pol()).unwrap();
        assert!(r.max_abs() <= 1e-6, "{r:?}");
        let a = params(1.0, 1.0, 0.1, Family::A);
        let r = fd_ns_residual(&a, &CartPoint::new(0.0, 1.0, 0.0, 0.0), &pol()).unwrap();
        assert!(r.max_abs() <= 1e-5, "{r:?}");
    }

    #[test]
    fn missing_pressure_leaves_its_gradient() {
        let b = params(1.0, 1.0, 0.1, Family::B);
        let q = CartPoint::new(0.5, 1.0, 1.0, 1.0);
        let r = fd_ns_residual_with_pressure(&b, &q, &pol(), |_| Ok(0.0)).unwrap();
        // Oracle: ∂P/∂x1 = -a(1+a)x1/τ² + k²τ^{4a}x1 = -8 + 1/16.
        let dp1 = -8.0 + 0.0625;
        assert!((r.components[0] + dp1).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn stencil_near_axis_is_rejected() {
        let a = params(1.0, 1.0, 0.1, Family::A);
        let q = CartPoint::new(0.0, 1e-4, 0.0, 0.0);
        assert!(matches!(fd_ns_residual(&a, &q, &pol()), Err(CheckError::StencilCrossesSingularity { .. })));
        // The smooth family has no singular set on the axis.
        let b = params(1.0, 1.0, 0.1, Family::B);
        assert!(fd_ns_residual(&b, &q, &pol()).is_ok());
    }

    #[test]
    fn divergence_converges_at_second_order() {
        let a = params(1.0, 1.0, 0.1, Family::A);
        let q = CartPoint::new(0.2, 0.6, 0.3, 0.5);
        let coarse = pol().with_fd_step(1e-2).unwrap();
        match richardson(|h| divergence_fd(&a, &q, h), &coarse).unwrap() {
            Richardson::Ratio(r) => assert!((3.5..=4.5).contains(&r), "{r}"),
            Richardson::BelowFloor => panic!("expected a measurable ratio"),
        }
    }

    #[test]
    fn divergence_at_random_points() {
        use super::super::{sample_points, SampleDomain};
        let b = params(1.0, 1.0, 0.1, Family::B);
        for q in sample_points(&b, &SampleDomain::default(), 200, 3) {
            assert!(divergence_fd(&b, &q, &pol()).unwrap().max_abs() <= 1e-8);
        }
        // Truncation error of the k/r swirl grows like h² k / r⁴; the 1e-8
        // absolute bound holds from r ≈ 1.5 outward.
        let a = params(1.0, 1.0, 0.1, Family::A);
        let far = SampleDomain { r: (1.5, 3.0), ..SampleDomain::default() };
        for q in sample_points(&a, &far, 200, 4) {
            assert!(divergence_fd(&a, &q, &pol()).unwrap().max_abs() <= 1e-8);
        }
        let near = SampleDomain { r: (0.5, 3.0), ..SampleDomain::default() };
        for q in sample_points(&a, &near, 200, 5) {
            let d = divergence_fd(&a, &q, &pol()).unwrap();
            assert!(d.max_abs() <= 1e-6 && d.normalized(Normalization::MaxTerm) <= 1e-6, "{d:?}");
        }
    }

    #[test]
    fn biot_savart_examples() {
        let p = params(1.0, 1.0, 1.0, Family::A);
        let r = biot_savart_check(&p, &CylPoint::new(0.0, 1.0, 1.0), &pol()).unwrap();
        assert!(r.max_abs() <= 1e-10);
        let r = biot_savart_check(&p, &CylPoint::new(0.0, 2.0, 0.0), &pol()).unwrap();
        assert!(r.components[1].abs() <= 1e-12);
    }

    #[test]
    fn pressure_poisson_matches_closed_form_and_ignores_constants() {
        let a = params(1.0, 1.0, 0.1, Family::A);
        let q = CartPoint::new(0.3, 1.0, 0.0, 0.4);
        let r = pressure_poisson_consistency(&a, &q, &pol()).unwrap();
        assert!(r.max_abs() <= 1e-5, "{r:?}");
        // Oracle: Σ G_ij G_ji = 6a²/τ² + 2k²/r⁴ at r = 1.
        let g = velocity_gradient_cart(&a, &q).unwrap();
        let sum: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| g[i][j] * g[j][i]).sum();
        assert!((sum - (6.0 / 0.49 + 2.0)).abs() < 1e-12);
        let shifted = pressure_poisson_with(&a, &q, &pol(), |x| Ok(pressure_exact(&a, &x.to_cyl())? + 7.3)).unwrap();
        assert!((shifted.components[0] - r.components[0]).abs() <= shifted.floor);
    }
}
