//! Energy and dissipation in a ball by tensor-product Gauss–Legendre
//! quadrature in `(r, z)`.
//!
//! The outer variable is `z = Z sin u`, which removes the square-root
//! endpoint behaviour of the ball's boundary; the inner variable runs over
//! `[r_min, √(R² - z²)]`, in `ln r` when `r_min > 0`. The singular family's
//! swirl energy grows like `ln(1/r_min)`, so it has no finite value in a
//! ball that touches the axis.

use std::f64::consts::{FRAC_PI_2, PI};
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::fields::{velocity_cyl, velocity_gradient_cart, CartPoint, CylPoint, Family, SolutionParams};

use super::{CheckError, Result};

pub const DEFAULT_QUAD_N: usize = 64;
/// Largest relative change allowed when the node count is doubled.
pub const QUAD_SELF_CHECK_REL: f64 = 1e-6;

fn rule(n: usize) -> Result<GaussLegendre> {
    let n = NonZeroUsize::new(n)
        .filter(|n| n.get() >= 2)
        .ok_or_else(|| CheckError::InvalidInput(format!("quadrature needs at least 2 nodes, got {n}")))?;
    Ok(GaussLegendre::new(n))
}

/// `∫ 2π r f(r, z) dr dz` over the ball minus the cylinder `r < r_min`.
fn ball_integral<F>(radius: f64, r_min: f64, n: usize, f: F) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let gl = rule(n)?;
    let zmax = (radius * radius - r_min * r_min).sqrt();
    let inner = |z: f64| -> f64 {
        let rho = (radius * radius - z * z).max(r_min * r_min).sqrt();
        if r_min > 0.0 {
            gl.integrate(r_min.ln(), rho.ln(), |s| {
                let r = s.exp();
                2.0 * PI * r * r * f(r, z)
            })
        } else {
            gl.integrate(0.0, rho, |r| 2.0 * PI * r * f(r, z))
        }
    };
    Ok(gl.integrate(-FRAC_PI_2, FRAC_PI_2, |u| zmax * u.cos() * inner(zmax * u.sin())))
}

fn self_checked<F>(n: usize, eval: F) -> Result<f64>
where
    F: Fn(usize) -> Result<f64>,
{
    let coarse = eval(n)?;
    let fine = eval(2 * n)?;
    let rel_change = (fine - coarse).abs() / fine.abs().max(f64::MIN_POSITIVE);
    if rel_change > QUAD_SELF_CHECK_REL {
        return Err(CheckError::QuadratureUnderResolved { n, rel_change });
    }
    Ok(coarse)
}

fn validate(p: &SolutionParams, t: f64, radius: f64, r_min: f64) -> Result<()> {
    p.tau(t)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(CheckError::InvalidInput(format!("ball radius must be positive, got {radius}")));
    }
    if !(0.0..radius).contains(&r_min) {
        return Err(CheckError::InvalidInput(format!("r_min = {r_min} must lie in [0, R = {radius})")));
    }
    if p.family() == Family::A && r_min == 0.0 {
        return Err(CheckError::InvalidInput(
            "the k/r swirl has logarithmically divergent energy at the axis; supply r_min > 0".into(),
        ));
    }
    Ok(())
}

/// `∫_{|x|≤R} |v|²/2 dx` for the smooth family.
pub fn energy_ball(p: &SolutionParams, t: f64, radius: f64, quad_n: usize) -> Result<f64> {
    energy_ball_with_cutoff(p, t, radius, 0.0, quad_n)
}

/// `∫ |v|²/2 dx` over `{|x| ≤ R, r ≥ r_min}`.
pub fn energy_ball_with_cutoff(p: &SolutionParams, t: f64, radius: f64, r_min: f64, quad_n: usize) -> Result<f64> {
    validate(p, t, radius, r_min)?;
    self_checked(quad_n, |n| {
        ball_integral(radius, r_min, n, |r, z| {
            let v = velocity_cyl(p, &CylPoint::new(t, r, z)).expect("validated point");
            0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
        })
    })
}

/// `ν ∫ |∇v|² dx` over `{|x| ≤ R, r ≥ r_min}`.
pub fn dissipation_ball(p: &SolutionParams, t: f64, radius: f64, r_min: f64, quad_n: usize) -> Result<f64> {
    validate(p, t, radius, r_min)?;
    let nu = p.nu();
    self_checked(quad_n, |n| {
        ball_integral(radius, r_min, n, |r, z| {
            let g = velocity_gradient_cart(p, &CartPoint::new(t, r.max(f64::MIN_POSITIVE), 0.0, z))
                .expect("validated point");
            nu * g.iter().flatten().map(|x| x * x).sum::<f64>()
        })
    })
}

/// Closed form of the straining part: `4π a² R⁵ / (5 τ²)`.
pub fn strain_energy_ball(a: f64, tau: f64, radius: f64) -> f64 {
    4.0 * PI * a * a * radius.powi(5) / (5.0 * tau * tau)
}
