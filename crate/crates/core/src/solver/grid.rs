use ndarray::Array2;

use super::{Result, SolverError};

/// Vertex-centered `(r, z)` rectangle; node `(i, j)` sits at
/// `(r_min + i·hr, z_min + j·hz)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    r_min: f64,
    r_max: f64,
    z_min: f64,
    z_max: f64,
    nr: usize,
    nz: usize,
}

pub const MIN_NODES: usize = 9;

impl Grid2D {
    pub fn new(r_min: f64, r_max: f64, z_min: f64, z_max: f64, nr: usize, nz: usize) -> Result<Self> {
        if !(r_min >= 0.0 && r_max > r_min && r_max.is_finite()) {
            return Err(SolverError::InvalidConfig(format!("need 0 <= r_min < r_max, got [{r_min}, {r_max}]")));
        }
        if !(z_max > z_min && z_min.is_finite() && z_max.is_finite()) {
            return Err(SolverError::InvalidConfig(format!("need z_min < z_max, got [{z_min}, {z_max}]")));
        }
        if nr < MIN_NODES || nz < MIN_NODES {
            return Err(SolverError::InvalidConfig(format!("need at least {MIN_NODES} nodes per axis, got {nr}x{nz}")));
        }
        Ok(Self { r_min, r_max, z_min, z_max, nr, nz })
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }
    pub fn r_max(&self) -> f64 {
        self.r_max
    }
    pub fn z_min(&self) -> f64 {
        self.z_min
    }
    pub fn z_max(&self) -> f64 {
        self.z_max
    }
    pub fn nr(&self) -> usize {
        self.nr
    }
    pub fn nz(&self) -> usize {
        self.nz
    }
    pub fn hr(&self) -> f64 {
        (self.r_max - self.r_min) / (self.nr - 1) as f64
    }
    pub fn hz(&self) -> f64 {
        (self.z_max - self.z_min) / (self.nz - 1) as f64
    }
    pub fn r(&self, i: usize) -> f64 {
        self.r_min + i as f64 * self.hr()
    }
    pub fn z(&self, j: usize) -> f64 {
        self.z_min + j as f64 * self.hz()
    }

    /// The first column lies on the symmetry axis.
    pub fn has_axis(&self) -> bool {
        self.r_min == 0.0
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nr, self.nz)
    }

    /// Same rectangle with `n` nodes per axis.
    pub fn with_nodes(&self, nr: usize, nz: usize) -> Result<Self> {
        Self::new(self.r_min, self.r_max, self.z_min, self.z_max, nr, nz)
    }

    pub fn fill(&self, f: impl Fn(f64, f64) -> f64) -> Array2<f64> {
        Array2::from_shape_fn(self.shape(), |(i, j)| f(self.r(i), self.z(j)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_nodes() {
        let g = Grid2D::new(0.5, 2.0, -1.0, 1.0, 33, 17).unwrap();
        assert_eq!(g.hr(), 1.5 / 32.0);
        assert_eq!(g.hz(), 0.125);
        assert_eq!(g.r(32), 2.0);
        assert_eq!(g.z(8), 0.0);
        assert!(!g.has_axis());
        assert!(Grid2D::new(0.0, 2.0, -1.0, 1.0, 9, 9).unwrap().has_axis());
    }

    #[test]
    fn rejects_bad_rectangles() {
        assert!(Grid2D::new(-0.1, 2.0, -1.0, 1.0, 33, 33).is_err());
        assert!(Grid2D::new(1.0, 1.0, -1.0, 1.0, 33, 33).is_err());
        assert!(Grid2D::new(0.0, 1.0, 1.0, -1.0, 33, 33).is_err());
        assert!(Grid2D::new(0.0, 1.0, -1.0, 1.0, 8, 33).is_err());
    }
}
