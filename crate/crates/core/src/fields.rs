//! Closed-form evaluation of the two explicit blowup families.
//!
//! Both families share the straining part
//!
//! ```text
//! v^r = a r / τ,   v^z = -2 a z / τ,   φ^θ = -a r z / τ,   τ = T* - t
//! ```
//!
//! and differ only in the swirl: family A carries `v^θ = k / r`, family B
//! carries `v^θ = k r τ^{2a}`. The azimuthal unit vector follows the
//! clockwise convention `e_θ = (x2/r, -x1/r, 0)`, so `(e_r, e_θ, e_z)` is a
//! left-handed frame. Every evaluator here honours that orientation.

use std::fmt;

use thiserror::Error;

/// Relative margin kept between the evaluation time and the blowup time.
pub const TIME_GUARD_REL: f64 = 1e-12;
/// Radii below this are treated as the symmetry axis.
pub const AXIS_GUARD: f64 = 1e-12;

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("evaluation at or past blowup: t = {t} with T* = {t_star}")]
    EvaluationAtOrPastBlowup { t: f64, t_star: f64 },
    #[error("evaluation on the symmetry axis (r = {r})")]
    AxisSingularity { r: f64 },
}

pub type Result<T> = std::result::Result<T, FieldError>;

/// Which swirl profile the solution carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// `v^θ = k / r`: singular on the axis, time independent.
    A,
    /// `v^θ = k r τ^{2a}`: smooth initial data.
    B,
}

impl Family {
    pub const ALL: [Family; 2] = [Family::A, Family::B];

    pub fn name(self) -> &'static str {
        match self {
            Family::A => "A",
            Family::B => "B",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = FieldError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Family::A),
            "B" | "b" => Ok(Family::B),
            other => Err(FieldError::InvalidParams(format!("unknown family '{other}'"))),
        }
    }
}

/// Constants of one solution. Construction validates `a ≠ 0`, `k ≠ 0`,
/// `T* > 0` and `ν > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionParams {
    a: f64,
    k: f64,
    t_star: f64,
    nu: f64,
    family: Family,
}

impl SolutionParams {
    pub fn new(a: f64, k: f64, t_star: f64, nu: f64, family: Family) -> Result<Self> {
        let finite = [a, k, t_star, nu].iter().all(|v| v.is_finite());
        if !finite {
            return Err(FieldError::InvalidParams("parameters must be finite".into()));
        }
        if a == 0.0 {
            return Err(FieldError::InvalidParams("a must be nonzero".into()));
        }
        if k == 0.0 {
            return Err(FieldError::InvalidParams("k must be nonzero".into()));
        }
        if t_star <= 0.0 {
            return Err(FieldError::InvalidParams("t_star must be positive".into()));
        }
        if nu <= 0.0 {
            return Err(FieldError::InvalidParams("nu must be positive".into()));
        }
        Ok(Self { a, k, t_star, nu, family })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn t_star(&self) -> f64 {
        self.t_star
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn family(&self) -> Family {
        self.family
    }

    pub fn with_family(self, family: Family) -> Self {
        Self { family, ..self }
    }

    /// Latest admissible evaluation time.
    pub fn latest_time(&self) -> f64 {
        self.t_star - TIME_GUARD_REL * self.t_star
    }

    /// Time to blowup `τ = T* - t`, rejecting times inside the guard band.
    pub fn tau(&self, t: f64) -> Result<f64> {
        if !t.is_finite() || t > self.latest_time() {
            return Err(FieldError::EvaluationAtOrPastBlowup { t, t_star: self.t_star });
        }
        Ok(self.t_star - t)
    }

    /// `τ^{2a}`, computed as `exp(2a ln τ)` so negative `a` is handled uniformly.
    pub fn swirl_decay(&self, t: f64) -> Result<f64> {
        let tau = self.tau(t)?;
        Ok((2.0 * self.a * tau.ln()).exp())
    }

    fn check_axis(&self, r: f64) -> Result<()> {
        if self.family == Family::A && r.abs() < AXIS_GUARD {
            return Err(FieldError::AxisSingularity { r });
        }
        Ok(())
    }
}

impl fmt::Display for SolutionParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "family={} a={} k={} t_star={} nu={}", self.family, self.a, self.k, self.t_star, self.nu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartPoint {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl CartPoint {
    pub fn new(t: f64, x1: f64, x2: f64, x3: f64) -> Self {
        Self { t, x1, x2, x3 }
    }

    pub fn radius(&self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn to_cyl(&self) -> CylPoint {
        CylPoint { t: self.t, r: self.radius(), z: self.x3 }
    }

    pub fn coords(&self) -> Vec3 {
        [self.x1, self.x2, self.x3]
    }

    pub fn with_coords(&self, x: Vec3) -> Self {
        Self { t: self.t, x1: x[0], x2: x[1], x3: x[2] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylPoint {
    pub t: f64,
    pub r: f64,
    pub z: f64,
}

impl CylPoint {
    pub fn new(t: f64, r: f64, z: f64) -> Self {
        Self { t, r, z }
    }

    /// The Cartesian point at azimuth zero, `(x1, x2, x3) = (r, 0, z)`.
    pub fn on_x1_axis(&self) -> CartPoint {
        CartPoint { t: self.t, x1: self.r, x2: 0.0, x3: self.z }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Cartesian,
    Cylindrical,
}

/// Field values at one spacetime point, tagged with the frame the vector and
/// tensor components are expressed in.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub frame: Frame,
    pub velocity: Vec3,
    /// `gradient[i][j] = ∂v_i/∂x_j` in the sample's frame.
    pub gradient: Option<Mat3>,
    pub pressure: Option<f64>,
    pub vorticity: Option<Vec3>,
}

impl FieldSample {
    pub fn velocity_only(frame: Frame, velocity: Vec3) -> Self {
        Self { frame, velocity, gradient: None, pressure: None, vorticity: None }
    }

    /// Full Cartesian sample: velocity, gradient, pressure and vorticity.
    pub fn cartesian(p: &SolutionParams, q: &CartPoint) -> Result<Self> {
        let gradient = velocity_gradient_cart(p, q)?;
        Ok(Self {
            frame: Frame::Cartesian,
            velocity: velocity_cart(p, q)?,
            gradient: Some(gradient),
            pressure: Some(pressure_exact(p, &q.to_cyl())?),
            vorticity: Some(curl_from_gradient(&gradient)),
        })
    }
}

/// `(v^r, v^θ, v^z)` in the clockwise cylindrical frame.
pub fn velocity_cyl(p: &SolutionParams, q: &CylPoint) -> Result<Vec3> {
    let tau = p.tau(q.t)?;
    p.check_axis(q.r)?;
    let swirl = match p.family {
        Family::A => p.k / q.r,
        Family::B => p.k * q.r * p.swirl_decay(q.t)?,
    };
    Ok([p.a * q.r / tau, swirl, -2.0 * p.a * q.z / tau])
}

pub fn velocity_cart(p: &SolutionParams, q: &CartPoint) -> Result<Vec3> {
    let tau = p.tau(q.t)?;
    let strain = p.a / tau;
    let (s1, s2) = match p.family {
        Family::A => {
            let r2 = q.x1 * q.x1 + q.x2 * q.x2;
            p.check_axis(r2.sqrt())?;
            (p.k * q.x2 / r2, -p.k * q.x1 / r2)
        }
        Family::B => {
            let decay = p.swirl_decay(q.t)?;
            (p.k * q.x2 * decay, -p.k * q.x1 * decay)
        }
    };
    Ok([strain * q.x1 + s1, strain * q.x2 + s2, -2.0 * strain * q.x3])
}

/// Closed-form Jacobian `G[i][j] = ∂v_i/∂x_j`.
///
/// For family B the swirl entries use `τ^{2a}` at the evaluation time.
pub fn velocity_gradient_cart(p: &SolutionParams, q: &CartPoint) -> Result<Mat3> {
    let tau = p.tau(q.t)?;
    let s = p.a / tau;
    let mut g = [[s, 0.0, 0.0], [0.0, s, 0.0], [0.0, 0.0, -2.0 * s]];
    match p.family {
        Family::A => {
            let r2 = q.x1 * q.x1 + q.x2 * q.x2;
            p.check_axis(r2.sqrt())?;
            let r4 = r2 * r2;
            let cross = 2.0 * p.k * q.x1 * q.x2 / r4;
            let shear = p.k * (q.x1 * q.x1 - q.x2 * q.x2) / r4;
            g[0][0] -= cross;
            g[0][1] = shear;
            g[1][0] = shear;
            g[1][1] += cross;
        }
        Family::B => {
            let w = p.k * p.swirl_decay(q.t)?;
            g[0][1] = w;
            g[1][0] = -w;
        }
    }
    Ok(g)
}

/// Azimuthal stream function `φ^θ = -a r z / τ`, identical for both families.
pub fn stream_phi_theta(p: &SolutionParams, q: &CylPoint) -> Result<f64> {
    let tau = p.tau(q.t)?;
    Ok(-p.a * q.r * q.z / tau)
}

/// Transformed unknowns `(v1, ω1, φ1) = (v^θ, ω^θ, φ^θ) / r`.
///
/// These extend evenly through the axis: `v1 = k/r²` (family A) or
/// `k τ^{2a}` (family B), `ω1 = 0`, `φ1 = -a z / τ`.
pub fn transformed_exact(p: &SolutionParams, q: &CylPoint) -> Result<Vec3> {
    let tau = p.tau(q.t)?;
    p.check_axis(q.r)?;
    let v1 = match p.family {
        Family::A => p.k / (q.r * q.r),
        Family::B => p.k * p.swirl_decay(q.t)?,
    };
    Ok([v1, 0.0, -p.a * q.z / tau])
}

/// `∇ × v` from the antisymmetric part of a Cartesian gradient.
pub fn curl_from_gradient(g: &Mat3) -> Vec3 {
    [g[2][1] - g[1][2], g[0][2] - g[2][0], g[1][0] - g[0][1]]
}

/// Vorticity `∇ × v` expressed in `(e_r, e_θ, e_z)`.
///
/// Computed from the Cartesian Jacobian at azimuth zero and rotated into the
/// clockwise frame; on the axis the frame is taken as its limit along `x1`.
pub fn vorticity_cyl(p: &SolutionParams, q: &CylPoint) -> Result<Vec3> {
    p.tau(q.t)?;
    p.check_axis(q.r)?;
    let cart = q.on_x1_axis();
    let omega = curl_from_gradient(&velocity_gradient_cart(p, &cart)?);
    let basis = frame_at_angle(1.0, 0.0);
    Ok(mat_vec(&basis, &omega))
}

/// Pressure satisfying the momentum equation pointwise.
///
/// `P = -a(1+a) r²/(2τ²) - a(2a-1) z²/τ² + S`, with swirl part
/// `S = -k²/(2r²)` (family A) or `S = +k² τ^{4a} r²/2` (family B). Family B
/// vanishes at the origin; family A's swirl part is normalised to vanish as
/// `r → ∞`.
pub fn pressure_exact(p: &SolutionParams, q: &CylPoint) -> Result<f64> {
    let tau = p.tau(q.t)?;
    p.check_axis(q.r)?;
    let a = p.a;
    let r2 = q.r * q.r;
    let strain = -a * (1.0 + a) * r2 / (2.0 * tau * tau) - a * (2.0 * a - 1.0) * q.z * q.z / (tau * tau);
    let swirl = match p.family {
        Family::A => -p.k * p.k / (2.0 * r2),
        Family::B => {
            let d = p.swirl_decay(q.t)?;
            0.5 * p.k * p.k * d * d * r2
        }
    };
    Ok(strain + swirl)
}

/// Rows are `e_r`, `e_θ`, `e_z` for the unit direction `(c, s) = (x1, x2)/r`.
fn frame_at_angle(c: f64, s: f64) -> Mat3 {
    [[c, s, 0.0], [s, -c, 0.0], [0.0, 0.0, 1.0]]
}

/// Frame matrix at a Cartesian location; rows are `e_r`, `e_θ`, `e_z`.
pub fn cylindrical_frame(q: &CartPoint) -> Result<Mat3> {
    let r = q.radius();
    if r < AXIS_GUARD {
        return Err(FieldError::AxisSingularity { r });
    }
    Ok(frame_at_angle(q.x1 / r, q.x2 / r))
}

fn mat_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = (0..3).map(|j| m[i][j] * v[j]).sum();
    }
    out
}

fn transpose(m: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = m[j][i];
        }
    }
    out
}

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|l| a[i][l] * b[l][j]).sum();
        }
    }
    out
}

/// Re-express a sample in the other frame at the Cartesian location `at`.
///
/// Vectors transform as `Q v`, the gradient tensor as `Q G Qᵀ`, where the rows
/// of `Q` are the frame vectors. `Q` is its own inverse, so the same matrix
/// serves both directions. Pressure is a scalar and passes through.
pub fn basis_convert(sample: &FieldSample, at: &CartPoint) -> Result<FieldSample> {
    let q = cylindrical_frame(at)?;
    let (m, target) = match sample.frame {
        Frame::Cartesian => (q, Frame::Cylindrical),
        Frame::Cylindrical => (transpose(&q), Frame::Cartesian),
    };
    let mt = transpose(&m);
    Ok(FieldSample {
        frame: target,
        velocity: mat_vec(&m, &sample.velocity),
        gradient: sample.gradient.map(|g| mat_mul(&mat_mul(&m, &g), &mt)),
        pressure: sample.pressure,
        // Projection of the physical curl onto the frame vectors.
        vorticity: sample.vorticity.map(|w| mat_vec(&m, &w)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a: f64, k: f64, t_star: f64, nu: f64, family: Family) -> SolutionParams {
        SolutionParams::new(a, k, t_star, nu, family).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn rejects_degenerate_params() {
        assert!(SolutionParams::new(0.0, 1.0, 1.0, 1.0, Family::A).is_err());
        assert!(SolutionParams::new(1.0, 0.0, 1.0, 1.0, Family::A).is_err());
        assert!(SolutionParams::new(1.0, 1.0, 0.0, 1.0, Family::B).is_err());
        assert!(SolutionParams::new(1.0, 1.0, 1.0, -1.0, Family::B).is_err());
        assert!(SolutionParams::new(f64::NAN, 1.0, 1.0, 1.0, Family::B).is_err());
    }

    #[test]
    fn velocity_cyl_examples() {
        let p = params(1.0, 1.0, 1.0, 1.0, Family::A);
        assert_eq!(velocity_cyl(&p, &CylPoint::new(0.0, 1.0, 1.0)).unwrap(), [1.0, 1.0, -2.0]);
        let p = params(1.0, 1.0, 1.0, 1.0, Family::B);
        assert_eq!(velocity_cyl(&p, &CylPoint::new(0.0, 0.0, 0.0)).unwrap(), [0.0, 0.0, 0.0]);
        let p = params(2.0, 3.0, 2.0, 0.1, Family::B);
        let v = velocity_cyl(&p, &CylPoint::new(1.0, 2.0, 1.0)).unwrap();
        for (got, want) in v.iter().zip([4.0, 6.0, -4.0]) {
            assert!(close(*got, want, 1e-15));
        }
    }

    #[test]
    fn guards() {
        let p = params(1.0, 1.0, 1.0, 1.0, Family::A);
        assert!(matches!(
            velocity_cyl(&p, &CylPoint::new(1.0, 1.0, 0.0)),
            Err(FieldError::EvaluationAtOrPastBlowup { .. })
        ));
        assert!(matches!(
            velocity_cyl(&p, &CylPoint::new(1.0 - 1e-13, 1.0, 0.0)),
            Err(FieldError::EvaluationAtOrPastBlowup { .. })
        ));
        assert!(matches!(velocity_cyl(&p, &CylPoint::new(0.0, 0.0, 1.0)), Err(FieldError::AxisSingularity { .. })));
        assert!(matches!(
            velocity_cart(&p, &CartPoint::new(0.0, 0.0, 0.0, 1.0)),
            Err(FieldError::AxisSingularity { .. })
        ));
        assert!(velocity_cart(&p, &CartPoint::new(2.0, 1.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn velocity_cart_examples() {
        let p = params(1.0, 1.0, 1.0, 1.0, Family::A);
        assert_eq!(velocity_cart(&p, &CartPoint::new(0.0, 1.0, 0.0, 1.0)).unwrap(), [1.0, -1.0, -2.0]);
        let p = params(1.0, 1.0, 1.0, 1.0, Family::B);
        assert_eq!(velocity_cart(&p, &CartPoint::new(0.0, 0.0, 0.0, 5.0)).unwrap(), [0.0, 0.0, -10.0]);
        let p = params(1.0, 2.0, 2.0, 1.0, Family::A);
        let v = velocity_cart(&p, &CartPoint::new(1.0, 3.0, 4.0, 0.0)).unwrap();
        assert!(close(v[0], 3.0 + 8.0 / 25.0, 1e-15));
        assert!(close(v[1], 4.0 - 6.0 / 25.0, 1e-15));
        assert_eq!(v[2], 0.0);
    }

    #[test]
    fn gradient_examples() {
        let p = params(1.0, 1.0, 1.0, 1.0, Family::B);
        let g = velocity_gradient_cart(&p, &CartPoint::new(0.0, 0.3, -2.0, 7.0)).unwrap();
        assert_eq!(g, [[1.0, 1.0, 0.0], [-1.0, 1.0, 0.0], [0.0, 0.0, -2.0]]);
        let p = params(1.0, 1.0, 1.0, 1.0, Family::A);
        let g = velocity_gradient_cart(&p, &CartPoint::new(0.0, 1.0, 1.0, 0.0)).unwrap();
        assert!(close(g[0][0], 0.5, 1e-15));
    }

    #[test]
    fn family_b_gradient_uses_current_time() {
        let p = params(1.0, 1.0, 2.0, 1.0, Family::B);
        let g = velocity_gradient_cart(&p, &CartPoint::new(1.0, 0.0, 0.0, 0.0)).unwrap();
        // τ = 1 at t = 1, while (T*)^{2a} would be 4.
        assert_eq!(g[0][1], 1.0);
    }

    #[test]
    fn stream_function_examples() {
        let p = params(1.0, 1.0, 1.0, 1.0, Family::A);
        assert_eq!(stream_phi_theta(&p, &CylPoint::new(0.0, 1.0, 1.0)).unwrap(), -1.0);
        assert_eq!(stream_phi_theta(&p, &CylPoint::new(0.3, 2.0, 0.0)).unwrap(), 0.0);
        let p = params(2.0, 1.0, 2.0, 1.0, Family::B);
        assert_eq!(stream_phi_theta(&p, &CylPoint::new(1.0, 3.0, -1.0)).unwrap(), 6.0);
    }

    #[test]
    fn vorticity_examples() {
        let p = params(1.0, 1.0, 1.0, 1.0, Family::A);
        let w = vorticity_cyl(&p, &CylPoint::new(0.2, 0.7, -1.0)).unwrap();
        assert!(w.iter().all(|c| c.abs() < 1e-14));
        // The clockwise e_θ makes e_r × e_θ = -e_z; the physical curl points
        // along -e_z with magnitude 2kτ^{2a}.
        let p = params(1.0, 1.0, 1.0, 1.0, Family::B);
        assert_eq!(vorticity_cyl(&p, &CylPoint::new(0.0, 1.0, 0.5)).unwrap(), [0.0, 0.0, -2.0]);
        assert_eq!(vorticity_cyl(&p, &CylPoint::new(0.0, 0.0, 0.5)).unwrap(), [0.0, 0.0, -2.0]);
        let p = params(1.0, 1e-300, 1.0, 1.0, Family::B);
        let w = vorticity_cyl(&p, &CylPoint::new(0.0, 1.0, 0.0)).unwrap();
        assert!(w[2].abs() < 1e-299);
    }

    #[test]
    fn pressure_examples() {
        let p = params(1.0, 1.0, 1.0, 1.0, Family::A);
        assert!(close(pressure_exact(&p, &CylPoint::new(0.0, 1.0, 0.0)).unwrap(), -1.5, 1e-15));
        let p = params(1.0, 1.0, 1.0, 1.0, Family::B);
        assert!(close(pressure_exact(&p, &CylPoint::new(0.0, 1.0, 1.0)).unwrap(), -1.5, 1e-15));
        assert_eq!(pressure_exact(&p, &CylPoint::new(0.4, 0.0, 0.0)).unwrap(), 0.0);
        assert!(pressure_exact(&p, &CylPoint::new(0.4, 1e-9, 0.0)).unwrap().abs() < 1e-16);
    }

    #[test]
    fn basis_examples() {
        let cyl = FieldSample::velocity_only(Frame::Cylindrical, [1.0, 0.0, 0.0]);
        let out = basis_convert(&cyl, &CartPoint::new(0.0, 1.0, 0.0, 0.0)).unwrap();
        assert_eq!(out.frame, Frame::Cartesian);
        assert_eq!(out.velocity, [1.0, 0.0, 0.0]);
        let cyl = FieldSample::velocity_only(Frame::Cylindrical, [0.0, 1.0, 0.0]);
        let out = basis_convert(&cyl, &CartPoint::new(0.0, 0.0, 1.0, 0.0)).unwrap();
        assert_eq!(out.velocity, [1.0, 0.0, 0.0]);
        assert!(matches!(
            basis_convert(&cyl, &CartPoint::new(0.0, 0.0, 0.0, 3.0)),
            Err(FieldError::AxisSingularity { .. })
        ));
    }

    #[test]
    fn cylindrical_family_a_matches_cartesian_at_unit_diagonal() {
        let p = params(1.0, 1.0, 1.0, 1.0, Family::A);
        let q = CartPoint::new(0.0, 1.0, 1.0, 1.0);
        let cyl = FieldSample::velocity_only(Frame::Cylindrical, velocity_cyl(&p, &q.to_cyl()).unwrap());
        let cart = basis_convert(&cyl, &q).unwrap();
        let direct = velocity_cart(&p, &q).unwrap();
        // v = (1 + 1/2, 1 - 1/2, -2)
        for (got, want) in cart.velocity.iter().zip(direct) {
            assert!(close(*got, want, 1e-15));
        }
        assert!(close(direct[0], 1.5, 1e-15));
        assert!(close(direct[1], 0.5, 1e-15));
    }

    #[test]
    fn family_a_swirl_is_time_independent() {
        let p = params(0.7, -1.3, 2.0, 1.0, Family::A);
        let v1 = velocity_cyl(&p, &CylPoint::new(0.0, 0.8, 1.0)).unwrap();
        let v2 = velocity_cyl(&p, &CylPoint::new(1.9, 0.8, 1.0)).unwrap();
        assert_eq!(v1[1], v2[1]);
    }

    #[test]
    fn negative_a_decay() {
        let p = params(-0.5, 1.0, 1.0, 1.0, Family::B);
        assert!(close(p.swirl_decay(0.9).unwrap(), 10.0, 1e-13));
    }

    #[test]
    fn transformed_unknowns_divide_by_r() {
        for f in Family::ALL {
            let p = params(0.7, 1.3, 1.0, 0.1, f);
            let q = CylPoint::new(0.4, 1.7, -0.6);
            let t = transformed_exact(&p, &q).unwrap();
            let v = velocity_cyl(&p, &q).unwrap();
            assert!(close(t[0] * q.r, v[1], 1e-15));
            assert!(close(t[2] * q.r, stream_phi_theta(&p, &q).unwrap(), 1e-15));
            assert_eq!(t[1], 0.0);
        }
        let b = params(1.0, 1.0, 1.0, 1.0, Family::B);
        assert_eq!(transformed_exact(&b, &CylPoint::new(0.0, 0.0, 2.0)).unwrap(), [1.0, 0.0, -2.0]);
    }
}
