//! Sparse and dense linear algebra generic over real/complex scalars.

mod csr;
mod eig;
mod lu;
mod scalar;

pub use csr::{Coo, Csr};
pub use eig::dense_eigenvalues;
pub use lu::{cholesky, dense_factor_solve, DenseLu};
pub use scalar::Scalar;

use ndarray::Array2;

/// Euclidean inner product `xᴴ y` (conjugating the left argument).
pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = T::zero();
    for (a, b) in x.iter().zip(y) {
        acc += a.conj() * *b;
    }
    acc
}

/// Euclidean norm.
pub fn norm2<T: Scalar>(x: &[T]) -> f64 {
    x.iter().map(|a| a.abs_sq()).sum::<f64>().sqrt()
}

/// `y ← y + alpha x`.
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

/// `x ← alpha x`.
pub fn scale_in_place<T: Scalar>(alpha: T, x: &mut [T]) {
    for xi in x.iter_mut() {
        *xi = *xi * alpha;
    }
}

/// Dense matrix–vector product.
pub fn dense_matvec<T: Scalar>(m: &Array2<T>, x: &[T]) -> Vec<T> {
    let (r, c) = m.dim();
    debug_assert_eq!(c, x.len());
    let mut y = vec![T::zero(); r];
    for (i, yi) in y.iter_mut().enumerate() {
        let row = m.row(i);
        let mut acc = T::zero();
        for (a, b) in row.iter().zip(x) {
            acc += *a * *b;
        }
        *yi = acc;
    }
    y
}
