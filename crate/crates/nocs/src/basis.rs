//! Tensor-product uniform B-spline coarse basis: nodal evaluation matrix `Z`,
//! quadrature diagonal `W`, Gram matrix `G`, Dirichlet trimming, projection.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, MirrorAxis};
use crate::linalg::{Coo, Csr, DenseLu, Scalar};
use ndarray::Array2;

/// Gauss–Legendre rule with `q` points on [-1, 1], exact to degree 2q − 1.
/// The Gram of degree-p splines needs exactness to 2p, so `q = p + 1` suffices.
fn gauss_rule(q: usize) -> &'static [(f64, f64)] {
    const GL2: [(f64, f64); 2] = [
        (-0.5773502691896257, 1.0),
        (0.5773502691896257, 1.0),
    ];
    const GL3: [(f64, f64); 3] = [
        (-0.7745966692414834, 0.5555555555555556),
        (0.0, 0.8888888888888888),
        (0.7745966692414834, 0.5555555555555556),
    ];
    const GL4: [(f64, f64); 4] = [
        (-0.8611363115940526, 0.34785484513745385),
        (-0.3399810435848563, 0.6521451548625461),
        (0.3399810435848563, 0.6521451548625461),
        (0.8611363115940526, 0.34785484513745385),
    ];
    const GL5: [(f64, f64); 5] = [
        (-0.9061798459386640, 0.23692688505618908),
        (-0.5384693101056831, 0.47862867049936647),
        (0.0, 0.5688888888888889),
        (0.5384693101056831, 0.47862867049936647),
        (0.9061798459386640, 0.23692688505618908),
    ];
    match q {
        0 | 1 | 2 => &GL2,
        3 => &GL3,
        4 => &GL4,
        _ => &GL5,
    }
}

/// Univariate B-spline family of `m1d` functions of degree `p` on an open
/// uniform knot vector over [0, 1].
#[derive(Debug, Clone)]
pub struct SplineBasis1D {
    m1d: usize,
    p: usize,
    knots: Vec<f64>,
}

impl SplineBasis1D {
    pub fn new(m1d: usize, p: usize) -> Result<Self> {
        if !(1..=4).contains(&p) {
            return Err(Error::Config(format!(
                "spline degree p = {p} outside the supported range 1..=4"
            )));
        }
        if m1d < p + 2 {
            return Err(Error::Config(format!(
                "m1d = {m1d} too small for degree {p}"
            )));
        }
        let spans = m1d - p; // interior knot intervals
        let mut knots = vec![0.0; p + 1];
        for i in 1..spans {
            knots.push(i as f64 / spans as f64);
        }
        knots.extend(std::iter::repeat(1.0).take(p + 1));
        Ok(SplineBasis1D { m1d, p, knots })
    }

    pub fn m1d(&self) -> usize {
        self.m1d
    }

    pub fn degree(&self) -> usize {
        self.p
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// All `m1d` basis values at `x` by the Cox–de Boor recursion.
    pub fn eval(&self, x: f64) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("spline evaluation at x = {x}")));
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: f64) -> Vec<f64> {
        let t = &self.knots;
        let nfun = self.m1d;
        // degree-0 indicator functions, closed on the right at x = 1
        let mut vals = vec![0.0; t.len() - 1];
        for (i, v) in vals.iter_mut().enumerate() {
            let inside = (t[i] <= x && x < t[i + 1]) || (x == 1.0 && t[i] < t[i + 1] && t[i + 1] == 1.0);
            *v = if inside { 1.0 } else { 0.0 };
        }
        for k in 1..=self.p {
            let prev = vals;
            vals = vec![0.0; prev.len() - 1];
            for i in 0..vals.len() {
                let mut acc = 0.0;
                let d1 = t[i + k] - t[i];
                if d1 > 0.0 {
                    acc += (x - t[i]) / d1 * prev[i];
                }
                let d2 = t[i + k + 1] - t[i + 1];
                if d2 > 0.0 {
                    acc += (t[i + k + 1] - x) / d2 * prev[i + 1];
                }
                vals[i] = acc;
            }
        }
        debug_assert_eq!(vals.len(), nfun);
        vals
    }

    /// Greville abscissae (knot averages), used as sensor coordinates.
    pub fn greville(&self) -> Vec<f64> {
        (0..self.m1d)
            .map(|a| {
                let s: f64 = self.knots[a + 1..a + 1 + self.p].iter().sum();
                s / self.p as f64
            })
            .collect()
    }

    /// Univariate Gram matrix by per-span Gauss–Legendre quadrature.
    pub fn gram(&self) -> Array2<f64> {
        let m = self.m1d;
        let mut g = Array2::zeros((m, m));
        let spans = m - self.p;
        let rule = gauss_rule(self.p + 1);
        for s in 0..spans {
            let a = s as f64 / spans as f64;
            let b = (s + 1) as f64 / spans as f64;
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for &(t, w) in rule {
                let x = mid + half * t;
                let vals = self.eval_unchecked(x);
                let wq = w * half;
                for i in 0..m {
                    if vals[i] == 0.0 {
                        continue;
                    }
                    for j in 0..m {
                        g[[i, j]] += wq * vals[i] * vals[j];
                    }
                }
            }
        }
        g
    }
}

/// Tensor-product coarse basis over a grid. Column `(a, b)` (x-factor `a`,
/// y-factor `b`) is flattened as `col = b·m1d + a`, mirroring the node
/// convention.
#[derive(Debug, Clone)]
pub struct CoarseBasis {
    grid: Grid,
    basis1d: SplineBasis1D,
    /// Sparse nodal evaluation matrix, n × m.
    z: Csr<f64>,
    /// Dense copy of Z for coarse-block contractions.
    z_dense: Array2<f64>,
    /// Quadrature diagonal (cell measures), all h².
    w: Vec<f64>,
    /// Tensor-product Gram matrix, m × m.
    g: Array2<f64>,
    g_lu: DenseLu<f64>,
    /// true = column retained after Dirichlet trimming.
    trim_mask: Vec<bool>,
}

impl CoarseBasis {
    pub fn build(grid: Grid, m1d: usize, p: usize) -> Result<Self> {
        if grid.nx() < 2 * m1d {
            return Err(Error::Config(format!(
                "grid nx = {} does not resolve m1d = {m1d} (need nx >= {})",
                grid.nx(),
                2 * m1d
            )));
        }
        // an odd m1d puts a Greville point at 1/2, which has no
        // reflection-symmetric cell on an even grid, breaking the mirror
        // structure of the sensor lattice
        if m1d % 2 != 0 {
            return Err(Error::Config(format!(
                "m1d = {m1d} must be even for a reflection-symmetric sensor lattice"
            )));
        }
        let basis1d = SplineBasis1D::new(m1d, p)?;
        let m = m1d * m1d;
        let nx = grid.nx();
        // univariate values at every barycentre coordinate (same in x and y)
        let vals1d: Vec<Vec<f64>> = (0..nx).map(|i| basis1d.eval_unchecked(grid.x(i))).collect();

        let mut coo = Coo::new(grid.n(), m);
        for j in 0..grid.ny() {
            for i in 0..nx {
                let node = grid.idx(i, j);
                for b in 0..m1d {
                    let by = vals1d[j][b];
                    if by == 0.0 {
                        continue;
                    }
                    for a in 0..m1d {
                        let v = vals1d[i][a] * by;
                        if v != 0.0 {
                            coo.push(node, b * m1d + a, v);
                        }
                    }
                }
            }
        }
        let z = coo.to_csr();
        let z_dense = z.to_dense();

        let g1 = basis1d.gram();
        let mut g = Array2::zeros((m, m));
        for b1 in 0..m1d {
            for a1 in 0..m1d {
                for b2 in 0..m1d {
                    for a2 in 0..m1d {
                        g[[b1 * m1d + a1, b2 * m1d + a2]] = g1[[a1, a2]] * g1[[b1, b2]];
                    }
                }
            }
        }
        let g_lu = DenseLu::factor(&g)?;

        let h2 = grid.h() * grid.h();
        let w = vec![h2; grid.n()];
        let mut trim_mask = vec![true; m];
        for b in 0..m1d {
            trim_mask[b * m1d] = false;
            trim_mask[b * m1d + m1d - 1] = false;
        }
        let cb = CoarseBasis {
            grid,
            basis1d,
            z,
            z_dense,
            w,
            g,
            g_lu,
            trim_mask,
        };
        let lattice = cb.sensor_lattice_1d();
        if lattice.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "grid nx = {} snaps two Greville sensors of m1d = {m1d} to the same node",
                cb.grid.nx()
            )));
        }
        Ok(cb)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn basis1d(&self) -> &SplineBasis1D {
        &self.basis1d
    }

    pub fn m(&self) -> usize {
        self.basis1d.m1d() * self.basis1d.m1d()
    }

    pub fn m1d(&self) -> usize {
        self.basis1d.m1d()
    }

    pub fn z(&self) -> &Csr<f64> {
        &self.z
    }

    pub fn z_dense(&self) -> &Array2<f64> {
        &self.z_dense
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn gram(&self) -> &Array2<f64> {
        &self.g
    }

    pub fn trim_mask(&self) -> &[bool] {
        &self.trim_mask
    }

    /// Indices of retained columns.
    pub fn trimmed_indices(&self) -> Vec<usize> {
        (0..self.m()).filter(|&c| self.trim_mask[c]).collect()
    }

    /// Zero the coefficients of trimmed columns.
    pub fn apply_trim<T: Scalar>(&self, c: &mut [T]) {
        for (ci, keep) in c.iter_mut().zip(&self.trim_mask) {
            if !keep {
                *ci = T::zero();
            }
        }
    }

    /// `Zᵀ W v` for a nodal vector.
    pub fn restrict<T: Scalar>(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.grid.n());
        let mut out = vec![T::zero(); self.m()];
        for r in 0..self.grid.n() {
            let (cols, vals) = self.z.row(r);
            let vw = v[r].scale(self.w[r]);
            for (c, zv) in cols.iter().zip(vals) {
                out[*c] += vw.scale(*zv);
            }
        }
        out
    }

    /// `Z c` for a coefficient vector.
    pub fn prolong<T: Scalar>(&self, c: &[T]) -> Vec<T> {
        assert_eq!(c.len(), self.m());
        let mut out = vec![T::zero(); self.grid.n()];
        for r in 0..self.grid.n() {
            let (cols, vals) = self.z.row(r);
            let mut acc = T::zero();
            for (cc, zv) in cols.iter().zip(vals) {
                acc += c[*cc].scale(*zv);
            }
            out[r] = acc;
        }
        out
    }

    /// Quadrature-L² projection coefficients `G⁻¹ Zᵀ W f`.
    pub fn project(&self, f: &Field<f64>) -> Vec<f64> {
        let r = self.restrict(&f.vals);
        self.g_lu.solve(&r)
    }

    /// As [`project`](Self::project) for complex fields (G is real).
    pub fn project_complex(&self, vals: &[num_complex::Complex64]) -> Vec<num_complex::Complex64> {
        let r = self.restrict(vals);
        let re: Vec<f64> = r.iter().map(|z| z.re).collect();
        let im: Vec<f64> = r.iter().map(|z| z.im).collect();
        let xre = self.g_lu.solve(&re);
        let xim = self.g_lu.solve(&im);
        xre.into_iter()
            .zip(xim)
            .map(|(a, b)| num_complex::Complex64::new(a, b))
            .collect()
    }

    /// Solve `G x = r` for a coefficient-space right-hand side.
    pub fn gram_solve(&self, r: &[f64]) -> Vec<f64> {
        self.g_lu.solve(r)
    }

    /// Coefficient-index permutation realizing a mirror of the underlying
    /// field: `coeffs_mirrored[perm[k]] = coeffs[k]`.
    pub fn mirror_perm(&self, axis: MirrorAxis) -> Vec<usize> {
        let m1d = self.m1d();
        let mut perm = vec![0usize; self.m()];
        for b in 0..m1d {
            let bs = if axis.flips_y() { m1d - 1 - b } else { b };
            for a in 0..m1d {
                let as_ = if axis.flips_x() { m1d - 1 - a } else { a };
                perm[b * m1d + a] = bs * m1d + as_;
            }
        }
        perm
    }

    /// Sensor node indices: nearest grid node to each Greville lattice point,
    /// flattened in the same `(b, a)` order as coefficients.
    ///
    /// The second half of the 1-D lattice is obtained by reflecting the first
    /// half, so the sensor set is exactly mirror-symmetric and the coefficient
    /// mirror permutations act consistently on sampled channels.
    pub fn sensor_nodes(&self) -> Vec<usize> {
        let idx1 = self.sensor_lattice_1d();
        let mut out = Vec::with_capacity(self.m());
        for b in 0..self.m1d() {
            for a in 0..self.m1d() {
                out.push(self.grid.idx(idx1[a], idx1[b]));
            }
        }
        out
    }

    fn sensor_lattice_1d(&self) -> Vec<usize> {
        let g1 = self.basis1d.greville();
        let nx = self.grid.nx();
        let snap = |x: f64| -> usize {
            let i = (x * nx as f64 - 0.5).round();
            (i.max(0.0) as usize).min(nx - 1)
        };
        let m1d = self.m1d();
        let mut idx1 = vec![0usize; m1d];
        for a in 0..m1d.div_ceil(2) {
            let i = snap(g1[a]);
            idx1[a] = i;
            idx1[m1d - 1 - a] = nx - 1 - i;
        }
        idx1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{mirror_vec, Field};
    use crate::linalg::cholesky;

    #[test]
    fn splines_form_a_partition_of_unity() {
        for p in 1..=4 {
            let b = SplineBasis1D::new(8, p).unwrap();
            for k in 0..=100 {
                let x = k as f64 / 100.0;
                let s: f64 = b.eval(x).unwrap().iter().sum();
                assert!((s - 1.0).abs() <= 1e-13, "p={p} x={x} sum={s}");
            }
        }
    }

    #[test]
    fn clamped_endpoints_are_interpolatory() {
        let b = SplineBasis1D::new(6, 3).unwrap();
        let at0 = b.eval(0.0).unwrap();
        let at1 = b.eval(1.0).unwrap();
        assert_eq!(at0[0], 1.0);
        assert!(at0[1..].iter().all(|&v| v == 0.0));
        assert_eq!(at1[5], 1.0);
        assert!(at1[..5].iter().all(|&v| v == 0.0));
        assert!(b.eval(-0.1).is_err());
        assert!(b.eval(1.1).is_err());
    }

    #[test]
    fn quadratic_spline_values_match_the_reference() {
        let b = SplineBasis1D::new(5, 2).unwrap();
        let want_half = [0.0, 0.12499999999999994, 0.7499999999999999, 0.12500000000000003, 0.0];
        for (got, want) in b.eval(0.5).unwrap().iter().zip(want_half) {
            assert!((got - want).abs() <= 1e-14);
        }
        let want_37 = [0.0, 0.3960499999999999, 0.5979, 0.006050000000000004, 0.0];
        for (got, want) in b.eval(0.37).unwrap().iter().zip(want_37) {
            assert!((got - want).abs() <= 1e-14);
        }
    }

    #[test]
    fn gram_entries_match_the_reference_for_p2_and_p3() {
        let g2 = SplineBasis1D::new(5, 2).unwrap().gram();
        assert!((g2[[0, 0]] - 0.06666666666666668).abs() <= 1e-13);
        assert!((g2[[1, 2]] - 0.06944444444444443).abs() <= 1e-13);
        assert!((g2[[2, 2]] - 0.18333333333333335).abs() <= 1e-13);
        let g3 = SplineBasis1D::new(6, 3).unwrap().gram();
        assert!((g3[[0, 0]] - 0.04761904761904759).abs() <= 1e-13);
        assert!((g3[[2, 3]] - 0.07098214285714285).abs() <= 1e-13);
        // symmetry, and the partition of unity forces the entries to sum to 1
        for g in [&g2, &g3] {
            let m = g.nrows();
            for i in 0..m {
                for j in 0..m {
                    assert!((g[[i, j]] - g[[j, i]]).abs() <= 1e-15);
                }
            }
            assert!((g.sum() - 1.0).abs() <= 1e-13);
        }
    }

    #[test]
    fn greville_points_are_increasing_and_symmetric() {
        let b = SplineBasis1D::new(8, 2).unwrap();
        let g = b.greville();
        assert_eq!(g[0], 0.0);
        assert_eq!(g[7], 1.0);
        for w in g.windows(2) {
            assert!(w[0] < w[1]);
        }
        for a in 0..8 {
            assert!((g[a] + g[7 - a] - 1.0).abs() <= 1e-15);
        }
    }

    #[test]
    fn coarse_basis_dimensions_and_trimming() {
        let cb = CoarseBasis::build(Grid::new(24).unwrap(), 12, 2).unwrap();
        assert_eq!(cb.m(), 144);
        assert_eq!(cb.trimmed_indices().len(), 120);
        let mut c = vec![1.0; 144];
        cb.apply_trim(&mut c);
        for b in 0..12 {
            assert_eq!(c[b * 12], 0.0);
            assert_eq!(c[b * 12 + 11], 0.0);
        }
        assert_eq!(c.iter().filter(|&&v| v == 1.0).count(), 120);
        let once = c.clone();
        cb.apply_trim(&mut c);
        assert_eq!(c, once);
    }

    #[test]
    fn nodal_quadrature_approximates_the_continuous_gram() {
        let cb = CoarseBasis::build(Grid::new(160).unwrap(), 8, 2).unwrap();
        let z = cb.z_dense();
        let s = z.t().dot(z) * (cb.grid().h() * cb.grid().h());
        let err = (&s - cb.gram())
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        eprintln!("nodal vs continuous Gram max error at nx=160: {err:.3e}");
        assert!(err <= 1e-4, "max error {err}");
    }

    #[test]
    fn projection_recovers_coarse_space_fields() {
        // quadrature mismatch G⁻¹(h²ZᵀZ − G) makes this second order in h
        let err_at = |nx: usize| -> f64 {
            let grid = Grid::new(nx).unwrap();
            let cb = CoarseBasis::build(grid, 8, 2).unwrap();
            let c0: Vec<f64> = (0..cb.m()).map(|k| (0.3 + 0.1 * k as f64).sin()).collect();
            let f = Field::new(grid, cb.prolong(&c0)).unwrap();
            let c1 = cb.project(&f);
            c0.iter()
                .zip(&c1)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        };
        let (e80, e160) = (err_at(80), err_at(160));
        eprintln!("projection coefficient error: nx=80 {e80:.3e}, nx=160 {e160:.3e}");
        assert!(e80 <= 2e-2, "coefficient error {e80}");
        assert!(e160 <= 0.3 * e80, "no second-order decay: {e80} -> {e160}");
        // projecting the constant must return near-unit coefficients
        let grid = Grid::new(80).unwrap();
        let cb = CoarseBasis::build(grid, 8, 2).unwrap();
        let cu = cb.project(&Field::constant(grid, 1.0));
        assert!(cu.iter().all(|v| (v - 1.0).abs() <= 2e-2));
    }

    #[test]
    fn projection_is_gram_solve_after_restriction() {
        let grid = Grid::new(32).unwrap();
        let cb = CoarseBasis::build(grid, 8, 2).unwrap();
        let f = Field::from_fn(grid, |x, y| (3.0 * x + y).cos());
        assert_eq!(cb.project(&f), cb.gram_solve(&cb.restrict(&f.vals)));
        assert!(cb.project(&Field::constant(grid, 0.0)).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tensor_gram_is_symmetric_positive_definite() {
        let cb = CoarseBasis::build(Grid::new(16).unwrap(), 8, 2).unwrap();
        assert!(cholesky(cb.gram()).is_ok());
    }

    #[test]
    fn restriction_is_the_weighted_adjoint_of_prolongation() {
        let grid = Grid::new(16).unwrap();
        let cb = CoarseBasis::build(grid, 6, 2).unwrap();
        let v: Vec<f64> = (0..grid.n()).map(|k| ((k * 7 % 13) as f64) - 6.0).collect();
        let c: Vec<f64> = (0..cb.m()).map(|k| ((k * 5 % 11) as f64) - 5.0).collect();
        let lhs: f64 = cb.restrict(&v).iter().zip(&c).map(|(a, b)| a * b).sum();
        let h2 = grid.h() * grid.h();
        let rhs: f64 = cb.prolong(&c).iter().zip(&v).map(|(a, b)| h2 * a * b).sum();
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn mirror_permutations_commute_with_prolongation() {
        let grid = Grid::new(16).unwrap();
        let cb = CoarseBasis::build(grid, 6, 2).unwrap();
        let c: Vec<f64> = (0..cb.m()).map(|k| (1.7 * k as f64).sin()).collect();
        for axis in MirrorAxis::ALL {
            let perm = cb.mirror_perm(axis);
            // involution
            for (k, &pk) in perm.iter().enumerate() {
                assert_eq!(perm[pk], k);
            }
            let mut cm = vec![0.0; cb.m()];
            for (k, &pk) in perm.iter().enumerate() {
                cm[pk] = c[k];
            }
            let lhs = cb.prolong(&cm);
            let rhs = mirror_vec(grid, &cb.prolong(&c), axis);
            for (a, b) in lhs.iter().zip(&rhs) {
                assert!((a - b).abs() <= 1e-12, "{axis:?}");
            }
        }
    }

    #[test]
    fn sensor_lattice_is_distinct_and_mirror_symmetric() {
        let grid = Grid::new(40).unwrap();
        let cb = CoarseBasis::build(grid, 8, 2).unwrap();
        let nodes = cb.sensor_nodes();
        assert_eq!(nodes.len(), 64);
        // recover the 1-D lattice from the first sensor row
        let idx1: Vec<usize> = nodes[..8].iter().map(|&n| n % 40).collect();
        for w in idx1.windows(2) {
            assert!(w[0] < w[1]);
        }
        for a in 0..8 {
            assert_eq!(idx1[7 - a], 39 - idx1[a]);
        }
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        assert!(SplineBasis1D::new(8, 0).is_err());
        assert!(SplineBasis1D::new(8, 5).is_err());
        assert!(SplineBasis1D::new(4, 3).is_err(), "m1d < p + 2");
        let g = Grid::new(8).unwrap();
        assert!(CoarseBasis::build(g, 5, 2).is_err(), "odd m1d");
        assert!(CoarseBasis::build(g, 6, 2).is_err(), "nx < 2 m1d");
        assert!(CoarseBasis::build(Grid::new(16).unwrap(), 8, 2).is_ok());
    }
}
