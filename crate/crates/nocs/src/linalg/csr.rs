//! Compressed-row sparse matrices with a COO assembly builder.

use super::Scalar;
use crate::error::{Error, Result};
use ndarray::Array2;
use std::io::Write;

/// Triplet accumulator; duplicate entries are summed on conversion.
#[derive(Debug, Clone)]
pub struct Coo<T> {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Scalar> Coo<T> {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Coo {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, val: T) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, val));
    }

    pub fn to_csr(mut self) -> Csr<T> {
        self.entries
            .sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut rows = Vec::with_capacity(self.entries.len());
        let mut indices = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<T> = Vec::with_capacity(self.entries.len());
        for (r, c, v) in self.entries {
            if rows.last() == Some(&r) && indices.last() == Some(&c) {
                *vals.last_mut().expect("nonempty") += v;
            } else {
                rows.push(r);
                indices.push(c);
                vals.push(v);
            }
        }
        let mut indptr = vec![0usize; self.nrows + 1];
        for &r in &rows {
            indptr[r + 1] += 1;
        }
        for i in 0..self.nrows {
            indptr[i + 1] += indptr[i];
        }
        Csr {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            vals,
        }
    }
}

/// Compressed-row matrix; column indices strictly increasing within each row.
#[derive(Debug, Clone)]
pub struct Csr<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Scalar> Csr<T> {
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn identity(n: usize) -> Self {
        let mut coo = Coo::new(n, n);
        for i in 0..n {
            coo.push(i, i, T::one());
        }
        coo.to_csr()
    }

    /// Row view as parallel (column, value) slices.
    pub fn row(&self, r: usize) -> (&[usize], &[T]) {
        let lo = self.indptr[r];
        let hi = self.indptr[r + 1];
        (&self.indices[lo..hi], &self.vals[lo..hi])
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[T]) -> Vec<T> {
        assert_eq!(
            x.len(),
            self.ncols,
            "spmv: vector length {} does not match {} columns",
            x.len(),
            self.ncols
        );
        let mut y = vec![T::zero(); self.nrows];
        for (r, yr) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            let mut acc = T::zero();
            for (c, v) in cols.iter().zip(vals) {
                acc += *v * x[*c];
            }
            *yr = acc;
        }
        y
    }

    /// `y ← A x` into a caller-provided buffer.
    pub fn spmv_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (r, yr) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            let mut acc = T::zero();
            for (c, v) in cols.iter().zip(vals) {
                acc += *v * x[*c];
            }
            *yr = acc;
        }
    }

    pub fn transpose(&self) -> Csr<T> {
        let mut coo = Coo::new(self.ncols, self.nrows);
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                coo.push(*c, r, *v);
            }
        }
        coo.to_csr()
    }

    pub fn diagonal(&self) -> Vec<T> {
        let n = self.nrows.min(self.ncols);
        let mut d = vec![T::zero(); n];
        for (r, dr) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            if let Ok(p) = cols.binary_search(&r) {
                *dr = vals[p];
            }
        }
        d
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(p) => vals[p],
            Err(_) => T::zero(),
        }
    }

    pub fn to_dense(&self) -> Array2<T> {
        let mut d = Array2::from_elem((self.nrows, self.ncols), T::zero());
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                d[[r, *c]] = *v;
            }
        }
        d
    }

    /// Largest absolute asymmetry `max |A_ij − A_ji|` (transpose, not conjugate).
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                let d = (*v - self.get(*c, r)).abs();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    /// Matrix Market coordinate-format export for debugging.
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> Result<()> {
        let field = if T::IS_COMPLEX { "complex" } else { "real" };
        writeln!(out, "%%MatrixMarket matrix coordinate {field} general")?;
        writeln!(out, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                if T::IS_COMPLEX {
                    writeln!(out, "{} {} {:e} {:e}", r + 1, c + 1, v.re(), v.im())?;
                } else {
                    writeln!(out, "{} {} {:e}", r + 1, c + 1, v.re())?;
                }
            }
        }
        Ok(())
    }

    pub fn check_dims(&self, x_len: usize) -> Result<()> {
        if x_len != self.ncols {
            return Err(Error::Dimension(format!(
                "vector length {x_len} vs matrix {}x{}",
                self.nrows, self.ncols
            )));
        }
        Ok(())
    }
}
