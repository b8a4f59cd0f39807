//! Dense LU factorization with partial pivoting, plus a Cholesky helper.

use super::Scalar;
use crate::error::{Error, Result};
use ndarray::Array2;

/// LU factors of a square dense matrix, `P A = L U` with unit-diagonal `L`.
#[derive(Debug, Clone)]
pub struct DenseLu<T> {
    lu: Array2<T>,
    piv: Vec<usize>,
}

impl<T: Scalar> DenseLu<T> {
    pub fn factor(a: &Array2<T>) -> Result<Self> {
        let (n, nc) = a.dim();
        if n != nc {
            return Err(Error::Dimension(format!("LU of non-square {n}x{nc}")));
        }
        let mut lu = a.clone();
        let mut piv = Vec::with_capacity(n);
        let scale = a.iter().map(|v| v.abs()).fold(0.0f64, f64::max).max(1.0);
        for k in 0..n {
            let mut p = k;
            let mut best = lu[[k, k]].abs();
            for r in k + 1..n {
                let m = lu[[r, k]].abs();
                if m > best {
                    best = m;
                    p = r;
                }
            }
            if best <= f64::EPSILON * scale * (n as f64) {
                return Err(Error::Singular { pivot: k });
            }
            if p != k {
                for c in 0..n {
                    let t = lu[[k, c]];
                    lu[[k, c]] = lu[[p, c]];
                    lu[[p, c]] = t;
                }
            }
            piv.push(p);
            let pivot = lu[[k, k]];
            for r in k + 1..n {
                let f = lu[[r, k]] / pivot;
                lu[[r, k]] = f;
                if f != T::zero() {
                    for c in k + 1..n {
                        let t = lu[[k, c]];
                        lu[[r, c]] -= f * t;
                    }
                }
            }
        }
        Ok(DenseLu { lu, piv })
    }

    pub fn n(&self) -> usize {
        self.piv.len()
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n();
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
        }
        // forward substitution with unit L
        for k in 0..n {
            let xk = x[k];
            if xk != T::zero() {
                for r in k + 1..n {
                    let l = self.lu[[r, k]];
                    x[r] -= l * xk;
                }
            }
        }
        // back substitution with U
        for k in (0..n).rev() {
            let mut acc = x[k];
            for c in k + 1..n {
                acc -= self.lu[[k, c]] * x[c];
            }
            x[k] = acc / self.lu[[k, k]];
        }
        x
    }

    /// Solve for each column of a dense right-hand-side block.
    pub fn solve_block(&self, b: &Array2<T>) -> Array2<T> {
        let (n, m) = b.dim();
        assert_eq!(n, self.n());
        let mut out = Array2::from_elem((n, m), T::zero());
        let mut col = vec![T::zero(); n];
        for j in 0..m {
            for i in 0..n {
                col[i] = b[[i, j]];
            }
            let x = self.solve(&col);
            for i in 0..n {
                out[[i, j]] = x[i];
            }
        }
        out
    }
}

/// One-shot dense solve (LU with partial pivoting).
pub fn dense_factor_solve<T: Scalar>(a: &Array2<T>, b: &[T]) -> Result<Vec<T>> {
    Ok(DenseLu::factor(a)?.solve(b))
}

/// Cholesky factor of a real symmetric positive definite matrix; fails on
/// non-positive pivots. Returns the lower factor.
pub fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let (n, nc) = a.dim();
    if n != nc {
        return Err(Error::Dimension(format!("Cholesky of non-square {n}x{nc}")));
    }
    let mut l = Array2::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if d <= 0.0 {
            return Err(Error::Singular { pivot: j });
        }
        let dj = d.sqrt();
        l[[j, j]] = dj;
        for i in j + 1..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / dj;
        }
    }
    Ok(l)
}
