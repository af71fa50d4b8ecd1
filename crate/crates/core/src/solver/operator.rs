//! Five-point discretization of `L3 = ∂_r² + (3/r)∂_r + ∂_z²` with the
//! boundary treatment folded into the coefficients.

use ndarray::{Array2, Zip};

use super::grid::Grid2D;

/// How the edges of a field are closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// Prescribed values on every edge (the axis, if present, uses the mirror
    /// ghost instead).
    Dirichlet,
    /// Prescribed values on the `r` edges, mirror ghost (`∂_z = 0`) on the `z`
    /// edges.
    NeumannZ,
}

/// `y = c·x + w·x[i-1] + e·x[i+1] + s·x[j-1] + n·x[j+1]` on free nodes,
/// `y = x` on fixed nodes.
#[derive(Debug, Clone)]
pub struct Stencil5 {
    pub c: Array2<f64>,
    pub w: Array2<f64>,
    pub e: Array2<f64>,
    pub s: Array2<f64>,
    pub n: Array2<f64>,
    pub fixed: Array2<bool>,
}

impl Stencil5 {
    /// The `L3` operator for a field with the given edge closure.
    pub fn l3(grid: &Grid2D, kind: EdgeKind) -> Self {
        let (nr, nz) = grid.shape();
        let (hr, hz) = (grid.hr(), grid.hz());
        let mut op = Self {
            c: Array2::zeros((nr, nz)),
            w: Array2::zeros((nr, nz)),
            e: Array2::zeros((nr, nz)),
            s: Array2::zeros((nr, nz)),
            n: Array2::zeros((nr, nz)),
            fixed: Array2::from_elem((nr, nz), false),
        };
        for i in 0..nr {
            for j in 0..nz {
                let r_edge = i == nr - 1 || (i == 0 && !grid.has_axis());
                let z_edge = j == 0 || j == nz - 1;
                if r_edge || (kind == EdgeKind::Dirichlet && z_edge) {
                    op.fixed[[i, j]] = true;
                    continue;
                }
                let r = grid.r(i);
                if i == 0 {
                    // Axis: ∂_r² + (3/r)∂_r → 4∂_r² with the even ghost x[-1] = x[1].
                    op.e[[i, j]] = 8.0 / (hr * hr);
                    op.c[[i, j]] = -8.0 / (hr * hr);
                } else {
                    op.w[[i, j]] = 1.0 / (hr * hr) - 1.5 / (r * hr);
                    op.e[[i, j]] = 1.0 / (hr * hr) + 1.5 / (r * hr);
                    op.c[[i, j]] = -2.0 / (hr * hr);
                }
                let zz = 1.0 / (hz * hz);
                op.c[[i, j]] -= 2.0 * zz;
                match j {
                    0 => op.n[[i, j]] = 2.0 * zz,
                    _ if j == nz - 1 => op.s[[i, j]] = 2.0 * zz,
                    _ => {
                        op.s[[i, j]] = zz;
                        op.n[[i, j]] = zz;
                    }
                }
            }
        }
        op
    }

    /// `alpha·I + beta·L` on free rows; fixed rows stay identity.
    pub fn affine(&self, alpha: f64, beta: f64) -> Self {
        let mut out = self.clone();
        Zip::from(&mut out.c).and(&self.fixed).for_each(|c, &f| {
            if !f {
                *c = alpha + beta * *c;
            }
        });
        for a in [&mut out.w, &mut out.e, &mut out.s, &mut out.n] {
            a.mapv_inplace(|v| beta * v);
        }
        out
    }

    pub fn shape(&self) -> (usize, usize) {
        self.c.dim()
    }

    pub fn is_fixed(&self, i: usize, j: usize) -> bool {
        self.fixed[[i, j]]
    }

    fn row(&self, x: &Array2<f64>, i: usize, j: usize) -> f64 {
        let (nr, nz) = self.shape();
        let mut y = self.c[[i, j]] * x[[i, j]];
        if i > 0 {
            y += self.w[[i, j]] * x[[i - 1, j]];
        }
        if i + 1 < nr {
            y += self.e[[i, j]] * x[[i + 1, j]];
        }
        if j > 0 {
            y += self.s[[i, j]] * x[[i, j - 1]];
        }
        if j + 1 < nz {
            y += self.n[[i, j]] * x[[i, j + 1]];
        }
        y
    }

    /// Full operator including identity rows.
    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let (nr, nz) = self.shape();
        Array2::from_shape_fn((nr, nz), |(i, j)| if self.fixed[[i, j]] { x[[i, j]] } else { self.row(x, i, j) })
    }

    /// Operator on free rows, zero on fixed rows.
    pub fn apply_free(&self, x: &Array2<f64>) -> Array2<f64> {
        let (nr, nz) = self.shape();
        Array2::from_shape_fn((nr, nz), |(i, j)| if self.fixed[[i, j]] { 0.0 } else { self.row(x, i, j) })
    }

    /// `max |b - A x|` over all rows.
    pub fn residual_norm(&self, x: &Array2<f64>, b: &Array2<f64>) -> f64 {
        let ax = self.apply(x);
        Zip::from(&ax).and(b).fold(0.0f64, |m, a, b| m.max((b - a).abs()))
    }

    /// Largest diagonal magnitude over free rows.
    pub fn diagonal_scale(&self) -> f64 {
        Zip::from(&self.c).and(&self.fixed).fold(0.0f64, |m, c, f| if *f { m } else { m.max(c.abs()) })
    }

    /// Red–black Gauss–Seidel with over-relaxation. Returns the sweep count
    /// and final residual, or `Err((sweeps, residual))` at the cap.
    pub fn sor(
        &self,
        x: &mut Array2<f64>,
        b: &Array2<f64>,
        omega: f64,
        tol: f64,
        max_iters: usize,
    ) -> std::result::Result<(usize, f64), (usize, f64)> {
        let (nr, nz) = self.shape();
        for (i, j) in fixed_nodes(&self.fixed) {
            x[[i, j]] = b[[i, j]];
        }
        let mut res = self.residual_norm(x, b);
        let mut sweeps = 0;
        while res > tol {
            if sweeps >= max_iters {
                return Err((sweeps, res));
            }
            for color in 0..2 {
                for i in 0..nr {
                    for j in 0..nz {
                        if (i + j) % 2 != color || self.fixed[[i, j]] {
                            continue;
                        }
                        let off = self.row(x, i, j) - self.c[[i, j]] * x[[i, j]];
                        let gs = (b[[i, j]] - off) / self.c[[i, j]];
                        x[[i, j]] += omega * (gs - x[[i, j]]);
                    }
                }
            }
            sweeps += 1;
            if sweeps % 10 == 0 || sweeps >= max_iters {
                res = self.residual_norm(x, b);
            }
        }
        Ok((sweeps, res))
    }

    /// BiCGSTAB; the operator is not symmetric because of the `3/r` term.
    pub fn bicgstab(
        &self,
        x: &mut Array2<f64>,
        b: &Array2<f64>,
        tol: f64,
        max_iters: usize,
    ) -> std::result::Result<(usize, f64), (usize, f64)> {
        let max_norm = |a: &Array2<f64>| a.fold(0.0f64, |m, v| m.max(v.abs()));
        let dot = |a: &Array2<f64>, c: &Array2<f64>| Zip::from(a).and(c).fold(0.0, |s, x, y| s + x * y);
        let mut r = b - &self.apply(x);
        let mut res = max_norm(&r);
        if res <= tol {
            return Ok((0, res));
        }
        let r_hat = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        let mut v = Array2::zeros(r.dim());
        let mut p = Array2::zeros(r.dim());
        for it in 1..=max_iters {
            let rho_new = dot(&r_hat, &r);
            if rho_new == 0.0 || omega == 0.0 {
                return Err((it, res));
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            p = &r + &((&p - &(&v * omega)) * beta);
            v = self.apply(&p);
            alpha = rho / dot(&r_hat, &v);
            let s = &r - &(&v * alpha);
            if max_norm(&s) <= tol {
                x.scaled_add(alpha, &p);
                res = self.residual_norm(x, b);
                if res <= tol {
                    return Ok((it, res));
                }
                r = b - &self.apply(x);
                continue;
            }
            let t = self.apply(&s);
            let tt = dot(&t, &t);
            omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
            x.scaled_add(alpha, &p);
            x.scaled_add(omega, &s);
            r = &s - &(&t * omega);
            res = max_norm(&r);
            if res <= tol {
                let true_res = self.residual_norm(x, b);
                if true_res <= tol {
                    return Ok((it, true_res));
                }
                r = b - &self.apply(x);
            }
        }
        Err((max_iters, self.residual_norm(x, b)))
    }
}

pub(crate) fn fixed_nodes(fixed: &Array2<bool>) -> Vec<(usize, usize)> {
    fixed.indexed_iter().filter(|(_, f)| **f).map(|(ij, _)| ij).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annihilates_functions_of_the_kernel() {
        // L3 kills constants, 1/r² and anything affine in z.
        let g = Grid2D::new(0.5, 2.0, -1.0, 1.0, 17, 17).unwrap();
        let op = Stencil5::l3(&g, EdgeKind::Dirichlet);
        for f in [|_r: f64, z: f64| 3.0 - 2.0 * z, |_r: f64, _z: f64| 1.0] {
            let y = op.apply_free(&g.fill(f));
            assert!(y.iter().all(|v| v.abs() < 1e-11), "{y:?}");
        }
        // 1/r² is only annihilated to O(h²).
        let defect = |n: usize| {
            // Node (n-1)/4 sits at r = 1.
            let g = Grid2D::new(0.5, 2.5, -1.0, 1.0, n, n).unwrap();
            let y = Stencil5::l3(&g, EdgeKind::Dirichlet).apply_free(&g.fill(|r, _| 1.0 / (r * r)));
            y[[(n - 1) / 4, n / 2]].abs()
        };
        let ratio = defect(33) / defect(65);
        assert!(defect(33) > 0.0 && (ratio - 4.0).abs() < 0.4, "{ratio}");
    }

    #[test]
    fn axis_row_uses_mirror() {
        let g = Grid2D::new(0.0, 2.0, -1.0, 1.0, 9, 9).unwrap();
        let op = Stencil5::l3(&g, EdgeKind::NeumannZ);
        // r² z⁰: L3 r² = 2 + 6 = 8 everywhere, including the axis.
        let y = op.apply_free(&g.fill(|r, _| r * r));
        for ((i, _), v) in y.indexed_iter() {
            if i < g.nr() - 1 {
                assert!((v - 8.0).abs() < 1e-10, "{v}");
            }
        }
        // Neumann rows: z² has ∂_z = 0 only at z = 0, so only check evenness of
        // the fold on a z-independent field.
        assert!(op.apply_free(&g.fill(|_, _| 5.0)).iter().all(|v| v.abs() < 1e-12));
        assert!(!op.is_fixed(0, 0) && op.is_fixed(8, 3));
    }

    #[test]
    fn iterative_solvers_agree() {
        let g = Grid2D::new(0.0, 1.0, -1.0, 1.0, 17, 17).unwrap();
        let op = Stencil5::l3(&g, EdgeKind::Dirichlet).affine(0.0, -1.0);
        let exact = g.fill(|r, z| r * r * z + 1.0);
        let b = op.apply(&exact);
        let mut x1 = Array2::zeros(b.dim());
        let mut x2 = Array2::zeros(b.dim());
        op.sor(&mut x1, &b, 1.7, 1e-10, 50_000).unwrap();
        op.bicgstab(&mut x2, &b, 1e-10, 5_000).unwrap();
        for x in [x1, x2] {
            let err = (&x - &exact).fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(err < 1e-9, "{err}");
        }
    }
}
