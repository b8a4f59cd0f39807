//! Uniform cell-centered grids on the unit square, scalar fields over them,
//! and the mirror transforms used for symmetry augmentation.

use crate::error::{Error, Result};
use crate::linalg::Scalar;
use serde::{Deserialize, Serialize};

/// Uniform cell-centered lattice on the unit square. Nodes are cell
/// barycentres `((i+½)h, (j+½)h)`, flattened row-major with `j` outer:
/// `idx = j·nx + i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    nx: usize,
    ny: usize,
}

impl Grid {
    pub fn new(nx: usize) -> Result<Self> {
        if nx < 4 {
            return Err(Error::InvalidGrid(format!("nx = {nx} < 4")));
        }
        Ok(Grid { nx, ny: nx })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Cell width `h = 1/nx`.
    pub fn h(&self) -> f64 {
        1.0 / self.nx as f64
    }

    /// Node count `n = nx·ny`.
    pub fn n(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    /// Barycentre x-coordinate of column `i`.
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h()
    }

    /// Barycentre y-coordinate of row `j`.
    pub fn y(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.h()
    }
}

/// Boundary segments of the unit square. Left/Right carry Dirichlet data and
/// Bottom/Top carry Neumann (or Robin) data for all three PDEs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundarySegment {
    Left,
    Right,
    Bottom,
    Top,
}

impl BoundarySegment {
    pub fn is_dirichlet(self) -> bool {
        matches!(self, BoundarySegment::Left | BoundarySegment::Right)
    }
}

/// Mirror axis for symmetry augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MirrorAxis {
    None,
    X,
    Y,
    Both,
}

impl MirrorAxis {
    pub const ALL: [MirrorAxis; 4] = [
        MirrorAxis::None,
        MirrorAxis::X,
        MirrorAxis::Y,
        MirrorAxis::Both,
    ];

    pub fn flips_x(self) -> bool {
        matches!(self, MirrorAxis::X | MirrorAxis::Both)
    }

    pub fn flips_y(self) -> bool {
        matches!(self, MirrorAxis::Y | MirrorAxis::Both)
    }
}

/// Scalar field of nodal values over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    pub grid: Grid,
    pub vals: Vec<T>,
}

impl<T: Scalar> Field<T> {
    pub fn new(grid: Grid, vals: Vec<T>) -> Result<Self> {
        if vals.len() != grid.n() {
            return Err(Error::Dimension(format!(
                "field length {} vs grid node count {}",
                vals.len(),
                grid.n()
            )));
        }
        Ok(Field { grid, vals })
    }

    pub fn constant(grid: Grid, v: T) -> Self {
        Field {
            grid,
            vals: vec![v; grid.n()],
        }
    }

    /// Evaluate `f(x, y)` at every barycentre.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> T) -> Self {
        let mut vals = Vec::with_capacity(grid.n());
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                vals.push(f(grid.x(i), grid.y(j)));
            }
        }
        Field { grid, vals }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.vals[self.grid.idx(i, j)]
    }
}

/// Reflect a field across the requested axis; an involution for each axis.
pub fn mirror_field<T: Scalar>(f: &Field<T>, axis: MirrorAxis) -> Field<T> {
    let g = f.grid;
    let mut vals = vec![T::zero(); g.n()];
    for j in 0..g.ny() {
        let js = if axis.flips_y() { g.ny() - 1 - j } else { j };
        for i in 0..g.nx() {
            let is = if axis.flips_x() { g.nx() - 1 - i } else { i };
            vals[g.idx(i, j)] = f.vals[g.idx(is, js)];
        }
    }
    Field { grid: g, vals }
}

/// Mirror a flat vector of nodal values (same convention as [`mirror_field`]).
pub fn mirror_vec<T: Scalar>(grid: Grid, v: &[T], axis: MirrorAxis) -> Vec<T> {
    assert_eq!(v.len(), grid.n());
    let mut out = vec![T::zero(); grid.n()];
    for j in 0..grid.ny() {
        let js = if axis.flips_y() { grid.ny() - 1 - j } else { j };
        for i in 0..grid.nx() {
            let is = if axis.flips_x() { grid.nx() - 1 - i } else { i };
            out[grid.idx(i, j)] = v[grid.idx(is, js)];
        }
    }
    out
}

/// Serialize a field as a CSV column with a `nx,ny,kind` header line.
pub fn write_field_csv<T: Scalar, W: std::io::Write>(f: &Field<T>, mut out: W) -> Result<()> {
    let kind = if T::IS_COMPLEX { "complex" } else { "real" };
    writeln!(out, "# nx={} ny={} kind={kind}", f.grid.nx(), f.grid.ny())?;
    for v in &f.vals {
        if T::IS_COMPLEX {
            writeln!(out, "{:e},{:e}", v.re(), v.im())?;
        } else {
            writeln!(out, "{:e}", v.re())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barycentres_and_counts_match_the_lattice() {
        let g = Grid::new(4).unwrap();
        assert_eq!(g.n(), 16);
        assert_eq!(g.h(), 0.25);
        assert_eq!((g.x(0), g.y(0)), (0.125, 0.125));
        assert_eq!(Grid::new(40).unwrap().n(), 1600);
        assert_eq!(Grid::new(320).unwrap().n(), 102_400);
        assert_eq!(g.idx(1, 2), 9);
    }

    #[test]
    fn too_small_grids_are_rejected() {
        assert!(Grid::new(3).is_err());
        assert!(Grid::new(0).is_err());
    }

    #[test]
    fn mirror_none_is_the_identity_and_symmetric_fields_are_fixed_points() {
        let g = Grid::new(6).unwrap();
        let f = Field::from_fn(g, |x, _| x * (1.0 - x));
        let same = mirror_field(&f, MirrorAxis::None);
        assert_eq!(f.vals, same.vals);
        // f(x, y) = x(1-x) is even about x = 1/2, so the X mirror fixes it
        let mx = mirror_field(&f, MirrorAxis::X);
        for (a, b) in f.vals.iter().zip(&mx.vals) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn mirrors_are_involutions_and_compose_to_both() {
        let g = Grid::new(4).unwrap();
        let f = Field::from_fn(g, |x, y| (137.0 * x + 731.0 * y).sin());
        for axis in MirrorAxis::ALL {
            let twice = mirror_field(&mirror_field(&f, axis), axis);
            assert_eq!(f.vals, twice.vals, "{axis:?} must be an involution");
        }
        let xy = mirror_field(&mirror_field(&f, MirrorAxis::X), MirrorAxis::Y);
        let yx = mirror_field(&mirror_field(&f, MirrorAxis::Y), MirrorAxis::X);
        let both = mirror_field(&f, MirrorAxis::Both);
        assert_eq!(xy.vals, both.vals);
        assert_eq!(yx.vals, both.vals);
    }

    #[test]
    fn field_constructors_enforce_the_grid_size() {
        let g = Grid::new(4).unwrap();
        assert!(Field::new(g, vec![0.0; 15]).is_err());
        let c = Field::constant(g, 2.5);
        assert!(c.vals.iter().all(|&v| v == 2.5));
        assert_eq!(c.get(3, 3), 2.5);
    }

    #[test]
    fn field_csv_has_header_and_one_row_per_node() {
        let g = Grid::new(4).unwrap();
        let f = Field::from_fn(g, |x, y| x + y);
        let mut buf = Vec::new();
        write_field_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# nx=4 ny=4 kind=real");
        assert_eq!(lines.count(), 16);
    }
}
