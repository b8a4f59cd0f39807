//! Finite-volume / finite-difference assembly of the three model PDEs on a
//! cell-centered grid. Equations are scaled by 1/h² so `b` holds pointwise
//! source values; Dirichlet data lives on the left/right walls, Neumann or
//! Robin data on the bottom/top walls.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::linalg::{Coo, Csr, Scalar};
use num_complex::Complex64;

/// `B(x) = x / (eˣ − 1)`, the exponential-fitting kernel of the
/// Scharfetter–Gummel flux. Series expansion near zero avoids cancellation.
pub fn bernoulli(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x / 2.0 + x * x / 12.0
    } else {
        x / x.exp_m1()
    }
}

/// Steady diffusion −∇·(θ∇u) = f with θu = g on the left/right walls and
/// diffusive flux η on the bottom/top walls.
#[derive(Debug, Clone)]
pub struct DiffusionProblem {
    pub theta: Field<f64>,
    pub f: Field<f64>,
    /// Dirichlet data at left-wall face midpoints, length ny.
    pub g_left: Vec<f64>,
    pub g_right: Vec<f64>,
    /// Neumann data at bottom-wall face midpoints, length nx.
    pub eta_bottom: Vec<f64>,
    pub eta_top: Vec<f64>,
}

impl DiffusionProblem {
    /// Homogeneous-data problem with the given coefficient and source.
    pub fn homogeneous(theta: Field<f64>, f: Field<f64>) -> Self {
        let grid = theta.grid;
        DiffusionProblem {
            theta,
            f,
            g_left: vec![0.0; grid.ny()],
            g_right: vec![0.0; grid.ny()],
            eta_bottom: vec![0.0; grid.nx()],
            eta_top: vec![0.0; grid.nx()],
        }
    }
}

/// Advection–diffusion −∇·(θ∇u − c u) = f with constant velocity `c`.
#[derive(Debug, Clone)]
pub struct AdvectionDiffusionProblem {
    pub base: DiffusionProblem,
    pub c: [f64; 2],
}

impl AdvectionDiffusionProblem {
    /// Péclet number |c| / ⟨θ⟩ on the unit domain.
    pub fn peclet(&self) -> f64 {
        let tbar = self.base.theta.vals.iter().sum::<f64>() / self.base.theta.vals.len() as f64;
        (self.c[0].hypot(self.c[1])) / tbar
    }
}

/// Helmholtz −Δu − k(x)²u = f with u = g on the left/right walls and the
/// Sommerfeld-type Robin condition ∂u/∂n − i k u = η on the bottom/top walls.
#[derive(Debug, Clone)]
pub struct HelmholtzProblem {
    pub k: Field<f64>,
    pub f: Field<Complex64>,
    pub g_left: Vec<Complex64>,
    pub g_right: Vec<Complex64>,
    pub eta_bottom: Vec<Complex64>,
    pub eta_top: Vec<Complex64>,
}

impl HelmholtzProblem {
    /// Warning message when the grid under-resolves the waves
    /// (rule of thumb: ten cells per wavelength).
    pub fn resolution_warning(&self, grid: Grid) -> Option<String> {
        let kmax = self.k.vals.iter().cloned().fold(0.0f64, f64::max);
        let need = 10.0 * kmax / (2.0 * std::f64::consts::PI);
        if (grid.nx() as f64) < need {
            Some(format!(
                "grid nx = {} under-resolves k_max = {kmax:.3} (want nx >= {need:.1})",
                grid.nx()
            ))
        } else {
            None
        }
    }
}

/// Assembled sparse system A u = b.
#[derive(Debug, Clone)]
pub struct DiscreteSystem<T: Scalar> {
    pub a: Csr<T>,
    pub b: Vec<T>,
    pub grid: Grid,
}

fn check_edges(grid: Grid, name: &str, len: usize) -> Result<()> {
    if len != grid.nx() {
        return Err(Error::Assembly(format!(
            "{name} has length {len}, expected {}",
            grid.nx()
        )));
    }
    Ok(())
}

fn check_theta(theta: &Field<f64>) -> Result<()> {
    if let Some(t) = theta.vals.iter().find(|t| !(**t > 0.0)) {
        return Err(Error::Assembly(format!("nonpositive diffusivity {t}")));
    }
    Ok(())
}

pub fn assemble_diffusion(p: &DiffusionProblem, grid: Grid) -> Result<DiscreteSystem<f64>> {
    assemble_core(p, [0.0, 0.0], grid)
}

pub fn assemble_advection_diffusion(
    p: &AdvectionDiffusionProblem,
    grid: Grid,
) -> Result<DiscreteSystem<f64>> {
    if !p.c[0].is_finite() || !p.c[1].is_finite() {
        return Err(Error::Assembly("velocity must be finite".into()));
    }
    assemble_core(&p.base, p.c, grid)
}

/// Shared finite-volume assembly; diffusion is the c = 0 special case, which
/// keeps the degeneracy exact entry for entry.
fn assemble_core(p: &DiffusionProblem, c: [f64; 2], grid: Grid) -> Result<DiscreteSystem<f64>> {
    check_theta(&p.theta)?;
    check_edges(grid, "g_left", p.g_left.len())?;
    check_edges(grid, "g_right", p.g_right.len())?;
    check_edges(grid, "eta_bottom", p.eta_bottom.len())?;
    check_edges(grid, "eta_top", p.eta_top.len())?;
    let (nx, ny, h) = (grid.nx(), grid.ny(), grid.h());
    let h2 = h * h;
    let th = &p.theta.vals;
    let mut coo = Coo::new(grid.n(), grid.n());
    let mut b = p.f.vals.clone();
    let [cx, cy] = c;

    // interior faces, Scharfetter–Gummel flux (tf/h)(B(-P) u_up − B(P) u_down)
    let face = |l: usize, r: usize, cn: f64, coo: &mut Coo<f64>| {
        let tf = 0.5 * (th[l] + th[r]);
        let pe = cn * h / tf;
        let coef = tf / h2;
        let (bn, bp) = (bernoulli(-pe), bernoulli(pe));
        coo.push(l, l, coef * bn);
        coo.push(l, r, -coef * bp);
        coo.push(r, l, -coef * bn);
        coo.push(r, r, coef * bp);
    };
    for j in 0..ny {
        for i in 0..nx - 1 {
            face(grid.idx(i, j), grid.idx(i + 1, j), cx, &mut coo);
        }
    }
    for j in 0..ny - 1 {
        for i in 0..nx {
            face(grid.idx(i, j), grid.idx(i, j + 1), cy, &mut coo);
        }
    }

    // Dirichlet walls: half-cell one-sided flux against u_b = g/θ_b
    for j in 0..ny {
        let cell = grid.idx(0, j);
        let tb = th[cell];
        let pe = cx * (0.5 * h) / tb;
        coo.push(cell, cell, 2.0 * tb * bernoulli(pe) / h2);
        b[cell] += 2.0 * bernoulli(-pe) * p.g_left[j] / h2;

        let cell = grid.idx(nx - 1, j);
        let tb = th[cell];
        let pe = cx * (0.5 * h) / tb;
        coo.push(cell, cell, 2.0 * tb * bernoulli(-pe) / h2);
        b[cell] += 2.0 * bernoulli(pe) * p.g_right[j] / h2;
    }

    // Neumann walls: prescribed diffusive flux plus upwinded outflow term
    let outflow = max0(-cy);
    for i in 0..nx {
        let cell = grid.idx(i, 0);
        if outflow > 0.0 {
            coo.push(cell, cell, 1.5 * outflow / h);
            coo.push(cell, grid.idx(i, 1), -0.5 * outflow / h);
        }
        b[cell] += p.eta_bottom[i] / h;
    }
    let outflow = max0(cy);
    for i in 0..nx {
        let cell = grid.idx(i, ny - 1);
        if outflow > 0.0 {
            coo.push(cell, cell, 1.5 * outflow / h);
            coo.push(cell, grid.idx(i, ny - 2), -0.5 * outflow / h);
        }
        b[cell] += p.eta_top[i] / h;
    }

    Ok(DiscreteSystem {
        a: coo.to_csr(),
        b,
        grid,
    })
}

fn max0(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

pub fn assemble_helmholtz(p: &HelmholtzProblem, grid: Grid) -> Result<DiscreteSystem<Complex64>> {
    if let Some(k) = p.k.vals.iter().find(|k| !(**k >= 0.0)) {
        return Err(Error::Assembly(format!("negative wave number {k}")));
    }
    if p.g_left.len() != grid.ny() || p.g_right.len() != grid.ny() {
        return Err(Error::Assembly("Dirichlet data length mismatch".into()));
    }
    check_edges(grid, "eta_bottom", p.eta_bottom.len())?;
    check_edges(grid, "eta_top", p.eta_top.len())?;
    let (nx, ny, h) = (grid.nx(), grid.ny(), grid.h());
    let h2 = h * h;
    let mut coo = Coo::new(grid.n(), grid.n());
    let mut b = p.f.vals.clone();

    for j in 0..ny {
        for i in 0..nx {
            let cell = grid.idx(i, j);
            coo.push(
                cell,
                cell,
                Complex64::new(4.0 / h2 - p.k.vals[cell] * p.k.vals[cell], 0.0),
            );
        }
    }
    let off = Complex64::new(-1.0 / h2, 0.0);
    for j in 0..ny {
        for i in 0..nx - 1 {
            let (l, r) = (grid.idx(i, j), grid.idx(i + 1, j));
            coo.push(l, r, off);
            coo.push(r, l, off);
        }
    }
    for j in 0..ny - 1 {
        for i in 0..nx {
            let (lo, hi) = (grid.idx(i, j), grid.idx(i, j + 1));
            coo.push(lo, hi, off);
            coo.push(hi, lo, off);
        }
    }

    // Dirichlet left/right: ghost = 2g − u_in
    for j in 0..ny {
        for (i0, g) in [(0, &p.g_left), (nx - 1, &p.g_right)] {
            let cell = grid.idx(i0, j);
            coo.push(cell, cell, Complex64::new(1.0 / h2, 0.0));
            b[cell] += 2.0 * g[j] / h2;
        }
    }
    // Robin bottom/top: central ghost elimination of ∂u/∂n − i k u = η with
    // the wall value taken as the ghost/interior average
    for i in 0..nx {
        for (j0, eta) in [(0, &p.eta_bottom), (ny - 1, &p.eta_top)] {
            let cell = grid.idx(i, j0);
            let kw = p.k.vals[cell];
            let beta = Complex64::new(1.0, 0.0) / Complex64::new(1.0 / h, -kw / 2.0);
            coo.push(cell, cell, -Complex64::new(1.0 / h, kw / 2.0) * beta / h2);
            b[cell] += beta * eta[i] / h2;
        }
    }

    Ok(DiscreteSystem {
        a: coo.to_csr(),
        b,
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dense_eigenvalues, dense_factor_solve};
    use std::f64::consts::PI;

    fn close(got: f64, want: f64, tol: f64) -> bool {
        (got - want).abs() <= tol * want.abs().max(1.0)
    }

    fn mixed_diffusion_problem(grid: Grid) -> DiffusionProblem {
        let y = |j: usize| grid.y(j);
        let x = |i: usize| grid.x(i);
        DiffusionProblem {
            theta: Field::from_fn(grid, |x, y| 1.0 + x + 2.0 * y),
            f: Field::from_fn(grid, |x, y| x + y * y),
            g_left: (0..grid.ny()).map(y).collect(),
            g_right: (0..grid.ny()).map(|j| 1.0 - y(j)).collect(),
            eta_bottom: (0..grid.nx()).map(x).collect(),
            eta_top: (0..grid.nx()).map(|i| -x(i)).collect(),
        }
    }

    fn check_row(sys: &DiscreteSystem<f64>, r: usize, want: &[(usize, f64)], b: f64) {
        let (cols, vals) = sys.a.row(r);
        assert_eq!(cols.len(), want.len(), "row {r} sparsity");
        for (&(c, v), (got_c, got_v)) in want.iter().zip(cols.iter().zip(vals)) {
            assert_eq!(*got_c, c, "row {r}");
            assert!(close(*got_v, v, 1e-12), "row {r} col {c}: {got_v} vs {v}");
        }
        assert!(close(sys.b[r], b, 1e-12), "b[{r}] = {} vs {b}", sys.b[r]);
    }

    #[test]
    fn frozen_diffusion_rows_match_the_reference() {
        let grid = Grid::new(8).unwrap();
        let sys = assemble_diffusion(&mixed_diffusion_problem(grid), grid).unwrap();
        check_row(&sys, 0, &[(0, 316.0), (1, -80.0), (8, -84.0)], 8.56640625);
        check_row(
            &sys,
            16,
            &[(8, -100.0), (16, 544.0), (17, -112.0), (24, -116.0)],
            40.16015625,
        );
        check_row(
            &sys,
            35,
            &[(27, -156.0), (34, -160.0), (35, 656.0), (36, -168.0), (43, -172.0)],
            0.75390625,
        );
        check_row(&sys, 63, &[(55, -236.0), (62, -240.0), (63, 964.0)], 2.31640625);
    }

    #[test]
    fn frozen_advection_diffusion_rows_match_the_reference() {
        let grid = Grid::new(8).unwrap();
        let p = AdvectionDiffusionProblem {
            base: mixed_diffusion_problem(grid),
            c: [1.5, -0.7],
        };
        let sys = assemble_advection_diffusion(&p, grid).unwrap();
        check_row(
            &sys,
            0,
            &[
                (0, 321.8599917556791),
                (1, -74.14994378011698),
                (8, -89.6311088068282),
            ],
            8.886350416775471,
        );
        check_row(
            &sys,
            16,
            &[
                (8, -97.22613196753309),
                (16, 544.2113348895807),
                (17, -106.10712236347305),
                (24, -118.82252786060499),
            ],
            41.281554897772125,
        );
        check_row(
            &sys,
            35,
            &[
                (27, -153.21675177697585),
                (34, -166.07499296969155),
                (35, 656.178360775),
                (36, -162.0714224983082),
                (43, -174.81519353002443),
            ],
            0.75390625,
        );
        check_row(
            &sys,
            63,
            &[
                (55, -233.2110733424128),
                (62, -246.0499979167907),
                (63, 966.8856611753233),
            ],
            2.2184487076413113,
        );
    }

    #[test]
    fn frozen_helmholtz_rows_match_the_reference() {
        let grid = Grid::new(8).unwrap();
        let i = Complex64::new(0.0, 1.0);
        let p = HelmholtzProblem {
            k: Field::from_fn(grid, |x, y| 2.0 + x + y),
            f: Field::from_fn(grid, |x, y| Complex64::new(x, y)),
            g_left: (0..8).map(|j| grid.y(j) + 0.5 * i).collect(),
            g_right: (0..8).map(|j| Complex64::from(1.0) - 0.5 * i * grid.y(j)).collect(),
            eta_bottom: (0..8).map(|ii| 0.3 * i * grid.x(ii)).collect(),
            eta_top: (0..8).map(|ii| Complex64::new(-grid.x(ii), 0.2)).collect(),
        };
        let sys = assemble_helmholtz(&p, grid).unwrap();
        let cc = |re: f64, im: f64| Complex64::new(re, im);
        let cases: [(usize, Vec<(usize, Complex64)>, Complex64); 4] = [
            (
                0,
                vec![
                    (0, cc(253.70305190277696, -16.705331973849937)),
                    (1, cc(-64.0, 0.0)),
                    (8, cc(-64.0, 0.0)),
                ],
                cc(8.042923439093144, 64.20989998800457),
            ),
            (
                16,
                vec![
                    (8, cc(-64.0, 0.0)),
                    (16, cc(314.359375, 0.0)),
                    (17, cc(-64.0, 0.0)),
                    (24, cc(-64.0, 0.0)),
                ],
                cc(40.0625, 64.3125),
            ),
            (
                35,
                vec![
                    (27, cc(-64.0, 0.0)),
                    (34, cc(-64.0, 0.0)),
                    (35, cc(247.0, 0.0)),
                    (36, cc(-64.0, 0.0)),
                    (43, cc(-64.0, 0.0)),
                ],
                cc(0.4375, 0.5625),
            ),
            (
                63,
                vec![
                    (55, cc(-64.0, 0.0)),
                    (62, cc(-64.0, 0.0)),
                    (63, cc(248.07621702940327, -29.282444508503893)),
                ],
                cc(121.48700706255406, -59.266916258287694),
            ),
        ];
        for (r, want, bw) in cases {
            let (cols, vals) = sys.a.row(r);
            assert_eq!(cols.len(), want.len(), "row {r} sparsity");
            for ((c, v), (got_c, got_v)) in want.iter().zip(cols.iter().zip(vals)) {
                assert_eq!(got_c, c, "row {r}");
                assert!((got_v - v).norm() <= 1e-12 * v.norm().max(1.0), "row {r} col {c}");
            }
            assert!((sys.b[r] - bw).norm() <= 1e-12 * bw.norm().max(1.0), "b[{r}]");
        }
    }

    #[test]
    fn bernoulli_function_identities_hold() {
        assert_eq!(bernoulli(0.0), 1.0);
        assert!((bernoulli(1.0) - 1.0 / (1.0f64.exp() - 1.0)).abs() <= 1e-15);
        for x in [0.5, 2.0, 10.0] {
            assert!((bernoulli(-x) - bernoulli(x) - x).abs() <= 1e-13);
        }
        // series branch agrees with the analytic limit
        assert!((bernoulli(1e-6) - (1.0 - 0.5e-6)).abs() <= 1e-12);
    }

    #[test]
    fn constant_coefficient_interior_stencil_is_the_five_point_laplacian() {
        let grid = Grid::new(8).unwrap();
        let p = DiffusionProblem::homogeneous(
            Field::constant(grid, 1.0),
            Field::from_fn(grid, |x, y| x * y + 1.0),
        );
        let sys = assemble_diffusion(&p, grid).unwrap();
        let r = grid.idx(3, 3);
        assert_eq!(sys.a.get(r, r), 256.0);
        for nb in [grid.idx(2, 3), grid.idx(4, 3), grid.idx(3, 2), grid.idx(3, 4)] {
            assert_eq!(sys.a.get(r, nb), -64.0);
        }
        assert_eq!(sys.b[r], p.f.vals[r]);
    }

    #[test]
    fn zero_velocity_degenerates_to_diffusion_exactly() {
        let grid = Grid::new(8).unwrap();
        let base = mixed_diffusion_problem(grid);
        let adv = AdvectionDiffusionProblem { base: base.clone(), c: [0.0, 0.0] };
        let d = assemble_diffusion(&base, grid).unwrap();
        let a = assemble_advection_diffusion(&adv, grid).unwrap();
        assert_eq!(d.b, a.b);
        for r in 0..grid.n() {
            let (dc, dv) = d.a.row(r);
            let (ac, av) = a.a.row(r);
            assert_eq!(dc, ac);
            assert_eq!(dv, av);
        }
    }

    #[test]
    fn peclet_number_is_speed_over_mean_theta() {
        let grid = Grid::new(8).unwrap();
        let p = AdvectionDiffusionProblem {
            base: DiffusionProblem::homogeneous(
                Field::constant(grid, 0.1),
                Field::constant(grid, 0.0),
            ),
            c: [0.6, 0.8],
        };
        assert!((p.peclet() - 10.0).abs() <= 1e-12);
    }

    #[test]
    fn strong_advection_keeps_the_m_matrix_sign_pattern() {
        let grid = Grid::new(8).unwrap();
        let p = AdvectionDiffusionProblem {
            base: DiffusionProblem::homogeneous(
                Field::constant(grid, 1.0),
                Field::constant(grid, 1.0),
            ),
            c: [100.0, 0.0],
        };
        let sys = assemble_advection_diffusion(&p, grid).unwrap();
        for r in 0..grid.n() {
            let (cols, vals) = sys.a.row(r);
            for (c, v) in cols.iter().zip(vals) {
                if *c == r {
                    assert!(*v > 0.0, "diag of row {r}");
                } else {
                    assert!(*v <= 0.0, "off-diagonal ({r},{c}) = {v}");
                }
            }
        }
    }

    #[test]
    fn diffusion_systems_are_symmetric_positive_definite() {
        let grid = Grid::new(8).unwrap();
        let sys = assemble_diffusion(&mixed_diffusion_problem(grid), grid).unwrap();
        assert_eq!(sys.a.asymmetry(), 0.0);
        let eigs = dense_eigenvalues(&sys.a.to_dense()).unwrap();
        let min_re = eigs.iter().map(|e| e.re).fold(f64::INFINITY, f64::min);
        assert!(min_re > 0.0, "smallest eigenvalue {min_re}");
    }

    #[test]
    fn helmholtz_system_is_complex_symmetric_with_absorbing_walls() {
        let grid = Grid::new(8).unwrap();
        let p = HelmholtzProblem {
            k: Field::constant(grid, 5.0),
            f: Field::constant(grid, Complex64::ZERO),
            g_left: vec![Complex64::ZERO; 8],
            g_right: vec![Complex64::ZERO; 8],
            eta_bottom: vec![Complex64::ZERO; 8],
            eta_top: vec![Complex64::ZERO; 8],
        };
        let sys = assemble_helmholtz(&p, grid).unwrap();
        assert_eq!(sys.a.asymmetry(), 0.0);
        let r = grid.idx(3, 3);
        assert!((sys.a.get(r, r) - Complex64::new(231.0, 0.0)).norm() <= 1e-12);
        // Robin rows carry a strictly negative imaginary diagonal part
        let wall = grid.idx(3, 0);
        assert!(sys.a.get(wall, wall).im < 0.0);
        assert!(sys.b.iter().all(|v| *v == Complex64::ZERO));
    }

    #[test]
    fn zero_wavenumber_gives_a_real_system() {
        let grid = Grid::new(8).unwrap();
        let p = HelmholtzProblem {
            k: Field::constant(grid, 0.0),
            f: Field::constant(grid, Complex64::from(1.0)),
            g_left: vec![Complex64::from(0.5); 8],
            g_right: vec![Complex64::ZERO; 8],
            eta_bottom: vec![Complex64::ZERO; 8],
            eta_top: vec![Complex64::from(1.0); 8],
        };
        let sys = assemble_helmholtz(&p, grid).unwrap();
        for r in 0..grid.n() {
            let (_, vals) = sys.a.row(r);
            assert!(vals.iter().all(|v| v.im == 0.0));
            assert_eq!(sys.b[r].im, 0.0);
        }
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let grid = Grid::new(8).unwrap();
        let mut p = mixed_diffusion_problem(grid);
        p.theta.vals[10] = 0.0;
        assert!(assemble_diffusion(&p, grid).is_err(), "nonpositive theta");
        let mut p2 = mixed_diffusion_problem(grid);
        p2.g_left.pop();
        assert!(assemble_diffusion(&p2, grid).is_err(), "short edge data");
        let hp = HelmholtzProblem {
            k: Field::constant(grid, -1.0),
            f: Field::constant(grid, Complex64::ZERO),
            g_left: vec![Complex64::ZERO; 8],
            g_right: vec![Complex64::ZERO; 8],
            eta_bottom: vec![Complex64::ZERO; 8],
            eta_top: vec![Complex64::ZERO; 8],
        };
        assert!(assemble_helmholtz(&hp, grid).is_err(), "negative wavenumber");
    }

    #[test]
    fn resolution_warning_fires_only_when_underresolved() {
        let grid = Grid::new(8).unwrap();
        let fine = HelmholtzProblem {
            k: Field::constant(grid, 1.0),
            f: Field::constant(grid, Complex64::ZERO),
            g_left: vec![Complex64::ZERO; 8],
            g_right: vec![Complex64::ZERO; 8],
            eta_bottom: vec![Complex64::ZERO; 8],
            eta_top: vec![Complex64::ZERO; 8],
        };
        assert!(fine.resolution_warning(grid).is_none());
        let coarse = HelmholtzProblem { k: Field::constant(grid, 40.0), ..fine };
        assert!(coarse.resolution_warning(grid).is_some());
    }

    fn diffusion_sup_error(nx: usize) -> f64 {
        let grid = Grid::new(nx).unwrap();
        let u = |x: f64, y: f64| (PI * x).sin() * (PI * y).sin();
        let p = DiffusionProblem {
            theta: Field::constant(grid, 1.0),
            f: Field::from_fn(grid, |x, y| 2.0 * PI * PI * u(x, y)),
            g_left: vec![0.0; nx],
            g_right: vec![0.0; nx],
            eta_bottom: (0..nx).map(|i| -PI * (PI * grid.x(i)).sin()).collect(),
            eta_top: (0..nx).map(|i| -PI * (PI * grid.x(i)).sin()).collect(),
        };
        let sys = assemble_diffusion(&p, grid).unwrap();
        let uh = dense_factor_solve(&sys.a.to_dense(), &sys.b).unwrap();
        (0..grid.n())
            .map(|r| (uh[r] - u(grid.x(r % nx), grid.y(r / nx))).abs())
            .fold(0.0, f64::max)
    }

    fn advdiff_sup_error(nx: usize) -> f64 {
        let grid = Grid::new(nx).unwrap();
        let (th, cx, cy) = (0.2, 0.6, 0.8);
        let u = |x: f64, y: f64| (PI * x).sin() * (PI * y).sin();
        let p = AdvectionDiffusionProblem {
            base: DiffusionProblem {
                theta: Field::constant(grid, th),
                f: Field::from_fn(grid, |x, y| {
                    th * 2.0 * PI * PI * u(x, y)
                        + cx * PI * (PI * x).cos() * (PI * y).sin()
                        + cy * PI * (PI * x).sin() * (PI * y).cos()
                }),
                g_left: vec![0.0; nx],
                g_right: vec![0.0; nx],
                eta_bottom: (0..nx).map(|i| -th * PI * (PI * grid.x(i)).sin()).collect(),
                eta_top: (0..nx).map(|i| -th * PI * (PI * grid.x(i)).sin()).collect(),
            },
            c: [cx, cy],
        };
        let sys = assemble_advection_diffusion(&p, grid).unwrap();
        let uh = dense_factor_solve(&sys.a.to_dense(), &sys.b).unwrap();
        (0..grid.n())
            .map(|r| (uh[r] - u(grid.x(r % nx), grid.y(r / nx))).abs())
            .fold(0.0, f64::max)
    }

    fn helmholtz_sup_error(nx: usize) -> f64 {
        let grid = Grid::new(nx).unwrap();
        let k = 5.0;
        let u = |x: f64, y: f64| {
            Complex64::new(0.0, k * y).exp() * (PI * x).sin()
        };
        let p = HelmholtzProblem {
            k: Field::constant(grid, k),
            f: Field::from_fn(grid, |x, y| PI * PI * u(x, y)),
            g_left: vec![Complex64::ZERO; nx],
            g_right: vec![Complex64::ZERO; nx],
            eta_bottom: (0..nx)
                .map(|i| Complex64::new(0.0, -2.0 * k) * (PI * grid.x(i)).sin())
                .collect(),
            eta_top: vec![Complex64::ZERO; nx],
        };
        let sys = assemble_helmholtz(&p, grid).unwrap();
        let uh = dense_factor_solve(&sys.a.to_dense(), &sys.b).unwrap();
        (0..grid.n())
            .map(|r| (uh[r] - u(grid.x(r % nx), grid.y(r / nx))).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn manufactured_solutions_converge_at_second_order() {
        let cases: [(&str, fn(usize) -> f64); 3] = [
            ("diffusion", diffusion_sup_error),
            ("advdiff", advdiff_sup_error),
            ("helmholtz", helmholtz_sup_error),
        ];
        for (label, err) in cases {
            let (e16, e32) = (err(16), err(32));
            let order = (e16 / e32).log2();
            eprintln!("{label}: e16={e16:.3e} e32={e32:.3e} order={order:.2}");
            assert!(order >= 1.8, "{label} order {order}");
        }
    }
}
