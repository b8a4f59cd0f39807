//! Dense nonsymmetric eigenvalues: Hessenberg reduction followed by
//! single-shift (Wilkinson) QR iteration with deflation, in complex
//! arithmetic for both real and complex inputs.

use super::Scalar;
use crate::error::{Error, Result};
use ndarray::Array2;
use num_complex::Complex64;

type C = Complex64;

/// Unitary Givens pair `(c, s)` with real `c`, `c² + |s|² = 1`, such that
/// `[c s; -s̄ c]ᴴ`-style application zeroes the second component of `(a, b)`.
fn rot(a: C, b: C) -> (f64, C, C) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, C::new(0.0, 0.0), a);
    }
    if an == 0.0 {
        return (0.0, b.conj() / bn, C::new(bn, 0.0));
    }
    let t = (an * an + bn * bn).sqrt();
    let phase = a / an;
    let c = an / t;
    let s = phase * b.conj() / t;
    let r = phase * t;
    (c, s, r)
}

/// Apply `G` on rows `(p, q)` over columns `[c0, c1)`:
/// `row_p ← c·row_p + s·row_q`, `row_q ← −s̄·row_p + c·row_q`.
fn rows(h: &mut Array2<C>, p: usize, q: usize, c: f64, s: C, c0: usize, c1: usize) {
    for j in c0..c1 {
        let a = h[[p, j]];
        let b = h[[q, j]];
        h[[p, j]] = a.scale(c) + s * b;
        h[[q, j]] = -s.conj() * a + b.scale(c);
    }
}

/// Apply `Gᴴ` on columns `(p, q)` over rows `[r0, r1)`.
fn cols(h: &mut Array2<C>, p: usize, q: usize, c: f64, s: C, r0: usize, r1: usize) {
    for i in r0..r1 {
        let a = h[[i, p]];
        let b = h[[i, q]];
        h[[i, p]] = a.scale(c) + s.conj() * b;
        h[[i, q]] = -s * a + b.scale(c);
    }
}

/// Reduce to upper Hessenberg form by similarity Givens rotations.
fn hessenberg(h: &mut Array2<C>) {
    let n = h.nrows();
    for k in 0..n.saturating_sub(2) {
        for i in k + 2..n {
            if h[[i, k]].norm() == 0.0 {
                continue;
            }
            let (c, s, r) = rot(h[[k + 1, k]], h[[i, k]]);
            h[[k + 1, k]] = r;
            h[[i, k]] = C::new(0.0, 0.0);
            rows(h, k + 1, i, c, s, k + 1, n);
            cols(h, k + 1, i, c, s, 0, n);
        }
    }
}

/// Wilkinson shift: eigenvalue of the trailing 2×2 block closest to `h[hi,hi]`.
fn wilkinson(h: &Array2<C>, hi: usize) -> C {
    let a = h[[hi - 1, hi - 1]];
    let b = h[[hi - 1, hi]];
    let c = h[[hi, hi - 1]];
    let d = h[[hi, hi]];
    let delta = (a - d).scale(0.5);
    let disc = (delta * delta + b * c).sqrt();
    let denom = if (delta + disc).norm() >= (delta - disc).norm() {
        delta + disc
    } else {
        delta - disc
    };
    if denom.norm() == 0.0 {
        d
    } else {
        d - b * c / denom
    }
}

/// All eigenvalues (with multiplicity) of a square dense matrix.
pub fn dense_eigenvalues<T: Scalar>(m: &Array2<T>) -> Result<Vec<Complex64>> {
    let (n, nc) = m.dim();
    if n != nc {
        return Err(Error::Dimension(format!("eigenvalues of {n}x{nc}")));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = Array2::from_shape_fn((n, n), |(i, j)| m[[i, j]].to_complex());
    hessenberg(&mut h);

    let norm = h.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1.0);
    let tiny = f64::EPSILON * norm;
    let mut eigs = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut sweeps_here = 0usize;
    let mut total = 0usize;
    let budget = 60 * n;

    loop {
        // deflate converged trailing eigenvalues
        loop {
            if hi == 0 {
                eigs.push(h[[0, 0]]);
                eigs.reverse();
                return Ok(eigs);
            }
            let sub = h[[hi, hi - 1]].norm();
            if sub <= tiny.max(f64::EPSILON * (h[[hi - 1, hi - 1]].norm() + h[[hi, hi]].norm())) {
                eigs.push(h[[hi, hi]]);
                hi -= 1;
                sweeps_here = 0;
            } else {
                break;
            }
        }
        // find the start of the active unreduced block
        let mut lo = hi;
        while lo > 0 {
            let sub = h[[lo, lo - 1]].norm();
            if sub <= tiny.max(f64::EPSILON * (h[[lo - 1, lo - 1]].norm() + h[[lo, lo]].norm())) {
                h[[lo, lo - 1]] = C::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }

        total += 1;
        sweeps_here += 1;
        if total > budget {
            return Err(Error::EigenNoConverge { iterations: total });
        }
        let mu = if sweeps_here % 12 == 0 {
            // exceptional shift to break symmetric stalls
            h[[hi, hi]] + C::new(0.75 * h[[hi, hi - 1]].norm(), 0.0)
        } else {
            wilkinson(&h, hi)
        };

        // single-shift QR sweep on the active block [lo, hi]
        for i in lo..=hi {
            h[[i, i]] -= mu;
        }
        let mut gs = Vec::with_capacity(hi - lo);
        for i in lo..hi {
            let (c, s, r) = rot(h[[i, i]], h[[i + 1, i]]);
            h[[i, i]] = r;
            h[[i + 1, i]] = C::new(0.0, 0.0);
            rows(&mut h, i, i + 1, c, s, i + 1, n);
            gs.push((c, s));
        }
        for (idx, (c, s)) in gs.into_iter().enumerate() {
            let i = lo + idx;
            cols(&mut h, i, i + 1, c, s, 0, (i + 2).min(hi + 1));
        }
        for i in lo..=hi {
            h[[i, i]] += mu;
        }
    }
}
