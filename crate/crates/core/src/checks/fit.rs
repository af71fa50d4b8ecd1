//! Power-law fits `q ≈ C τ^e` by least squares on `(ln τ, ln q)`.

use std::fmt;

use crate::fields::{velocity_cyl, velocity_gradient_cart, CartPoint, CylPoint, Family, SolutionParams};

use super::{CheckError, Result};

pub const MIN_FIT_SAMPLES: usize = 6;
pub const MIN_FIT_DECADES: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowupQuantity {
    /// `max |∂v_i/∂x_j|` over lattice points of a ball.
    GradSup,
    VrAtProbe,
    VzAtProbe,
    VthetaAtProbe,
    /// Suprema of numerically computed fields; produced by the solver.
    NumericalVrSup,
    NumericalV1Sup,
}

impl BlowupQuantity {
    pub fn name(self) -> &'static str {
        match self {
            BlowupQuantity::GradSup => "grad_sup",
            BlowupQuantity::VrAtProbe => "vr_at_probe",
            BlowupQuantity::VzAtProbe => "vz_at_probe",
            BlowupQuantity::VthetaAtProbe => "vtheta_at_probe",
            BlowupQuantity::NumericalVrSup => "numerical_vr_sup",
            BlowupQuantity::NumericalV1Sup => "numerical_v1_sup",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [
            Self::GradSup,
            Self::VrAtProbe,
            Self::VzAtProbe,
            Self::VthetaAtProbe,
            Self::NumericalVrSup,
            Self::NumericalV1Sup,
        ]
        .into_iter()
        .find(|q| q.name() == s)
    }
}

impl fmt::Display for BlowupQuantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeRegion {
    /// Lattice of `points_per_axis³` nodes restricted to `|x| ≤ radius` and
    /// `r ≥ axis_exclusion`.
    Ball {
        radius: f64,
        axis_exclusion: f64,
        points_per_axis: usize,
    },
    Point {
        r: f64,
        z: f64,
    },
}

impl ProbeRegion {
    /// Unit ball; the singular family keeps half a unit away from the axis.
    pub fn unit_ball(family: Family) -> Self {
        let axis_exclusion = match family {
            Family::A => 0.5,
            Family::B => 0.0,
        };
        ProbeRegion::Ball { radius: 1.0, axis_exclusion, points_per_axis: 9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupFit {
    pub quantity: BlowupQuantity,
    pub amplitude_c: f64,
    pub exponent: f64,
    pub r2_goodness: f64,
    pub samples: Vec<(f64, f64)>,
}

impl BlowupFit {
    pub fn line(&self) -> String {
        format!(
            "FIT {} exponent={:.6} amplitude={:.6} r2={:.9} samples={}",
            self.quantity,
            self.exponent,
            self.amplitude_c,
            self.r2_goodness,
            self.samples.len()
        )
    }
}

/// Fit `ln|q| = ln C + e ln τ`. The magnitude is fitted; a zero or
/// non-finite value is rejected.
pub fn fit_log_log(quantity: BlowupQuantity, taus: &[f64], values: &[f64]) -> Result<BlowupFit> {
    if taus.len() != values.len() || taus.len() < 2 {
        return Err(CheckError::InsufficientSamples(format!(
            "{} times and {} values; need at least 2 pairs",
            taus.len(),
            values.len()
        )));
    }
    let mut xs = Vec::with_capacity(taus.len());
    let mut ys = Vec::with_capacity(taus.len());
    for (&tau, &q) in taus.iter().zip(values) {
        if !(q.is_finite() && q != 0.0) {
            return Err(CheckError::NonPositiveQuantity { tau, value: q });
        }
        if !(tau > 0.0) {
            return Err(CheckError::InvalidInput(format!("tau must be positive, got {tau}")));
        }
        xs.push(tau.ln());
        ys.push(q.abs().ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(CheckError::InsufficientSamples("all tau values coincide".into()));
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - exponent * x).powi(2)).sum();
    let r2 = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(BlowupFit {
        quantity,
        amplitude_c: intercept.exp(),
        exponent,
        r2_goodness: r2,
        samples: taus.iter().copied().zip(values.iter().copied()).collect(),
    })
}

/// `n` times whose distances to blowup are log-spaced from `tau_max` down to
/// `tau_min`.
pub fn log_spaced_times(t_star: f64, tau_max: f64, tau_min: f64, n: usize) -> Vec<f64> {
    let (a, b) = (tau_max.ln(), tau_min.ln());
    (0..n)
        .map(|i| {
            let s = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
            t_star - (a + s * (b - a)).exp()
        })
        .collect()
}

fn lattice(radius: f64, axis_exclusion: f64, m: usize) -> Vec<[f64; 3]> {
    let step = if m > 1 { 2.0 * radius / (m - 1) as f64 } else { 0.0 };
    let coord = |i: usize| if m > 1 { -radius + i as f64 * step } else { 0.0 };
    let mut out = Vec::new();
    for i in 0..m {
        for j in 0..m {
            for l in 0..m {
                let x = [coord(i), coord(j), coord(l)];
                let r = x[0].hypot(x[1]);
                if x.iter().map(|c| c * c).sum::<f64>() <= radius * radius * (1.0 + 1e-12)
                    && r >= axis_exclusion
                    && r > 0.0
                {
                    out.push(x);
                }
            }
        }
    }
    out
}

fn quantity_at(p: &SolutionParams, quantity: BlowupQuantity, region: &ProbeRegion, t: f64) -> Result<f64> {
    match (quantity, region) {
        (BlowupQuantity::GradSup, ProbeRegion::Ball { radius, axis_exclusion, points_per_axis }) => {
            let pts = lattice(*radius, *axis_exclusion, *points_per_axis);
            if pts.is_empty() {
                return Err(CheckError::InvalidInput("probe ball contains no admissible lattice points".into()));
            }
            let mut sup = 0.0f64;
            for x in pts {
                let g = velocity_gradient_cart(p, &CartPoint::new(t, x[0], x[1], x[2]))?;
                sup = g.iter().flatten().fold(sup, |m, v| m.max(v.abs()));
            }
            Ok(sup)
        }
        (
            BlowupQuantity::VrAtProbe | BlowupQuantity::VzAtProbe | BlowupQuantity::VthetaAtProbe,
            ProbeRegion::Point { r, z },
        ) => {
            let v = velocity_cyl(p, &CylPoint::new(t, *r, *z))?;
            Ok(match quantity {
                BlowupQuantity::VrAtProbe => v[0],
                BlowupQuantity::VthetaAtProbe => v[1],
                _ => v[2],
            })
        }
        _ => Err(CheckError::InvalidInput(format!("quantity {quantity} does not match probe region {region:?}"))),
    }
}

/// Fit a closed-form quantity against `τ = T* - t` over the given times.
pub fn blowup_fit(
    p: &SolutionParams,
    quantity: BlowupQuantity,
    region: &ProbeRegion,
    times: &[f64],
) -> Result<BlowupFit> {
    if times.len() < MIN_FIT_SAMPLES {
        return Err(CheckError::InsufficientSamples(format!(
            "{} times given, at least {MIN_FIT_SAMPLES} required",
            times.len()
        )));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CheckError::InvalidInput("times must be strictly increasing".into()));
    }
    let taus: Vec<f64> = times.iter().map(|&t| p.tau(t)).collect::<std::result::Result<_, _>>()?;
    let decades = (taus[0] / taus[taus.len() - 1]).log10();
    if decades < MIN_FIT_DECADES - 1e-9 {
        return Err(CheckError::InsufficientSamples(format!(
            "tau spans {decades:.3} decades, at least {MIN_FIT_DECADES} required"
        )));
    }
    let values: Vec<f64> = times.iter().map(|&t| quantity_at(p, quantity, region, t)).collect::<Result<_>>()?;
    fit_log_log(quantity, &taus, &values)
}
