//! Operator probing and preconditioned spectra, plus the rank statistics
//! used by the sweep analyses.

use crate::error::{Error, Result};
use crate::linalg::{dense_eigenvalues, Csr, Scalar};
use crate::twolevel::Preconditioner;
use ndarray::Array2;
use num_complex::Complex64;
use std::io::Write;

/// Materialize `P` by applying it to the Euclidean basis vectors. For linear
/// `P` this is its exact matrix; for nonlinear models it is a linearization.
pub fn probe_operator<T: Scalar>(p: &dyn Preconditioner<T>, n: usize) -> Result<Array2<T>> {
    if n > 4096 {
        return Err(Error::Config(format!("probing capped at n = 4096, got {n}")));
    }
    if p.dim() != n {
        return Err(Error::Dimension(format!(
            "preconditioner dimension {} != {n}",
            p.dim()
        )));
    }
    let mut m = Array2::zeros((n, n));
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e[j] = T::one();
        let col = p.apply(&e);
        e[j] = T::zero();
        for i in 0..n {
            m[[i, j]] = col[i];
        }
    }
    Ok(m)
}

/// Eigenvalues of A·probe(P) — right preconditioning, matching the solvers.
pub fn preconditioned_spectrum<T: Scalar>(
    a: &Csr<T>,
    p: &dyn Preconditioner<T>,
) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    let pm = probe_operator(p, n)?;
    let mut ap = Array2::zeros((n, n));
    let mut col = vec![T::zero(); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = pm[[i, j]];
        }
        let acol = a.spmv(&col);
        for i in 0..n {
            ap[[i, j]] = acol[i];
        }
    }
    dense_eigenvalues(&ap)
}

/// Spearman rank correlation with average ranks on ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = ranks(xs);
    let ry = ranks(ys);
    pearson(&rx, &ry)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).expect("finite values"));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        sxy += (xi - mx) * (yi - my);
        sxx += (xi - mx) * (xi - mx);
        syy += (yi - my) * (yi - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Write eigenvalues as `(re, im)` CSV with a one-line metadata header.
pub fn write_spectrum_csv(
    path: &std::path::Path,
    label: &str,
    eigs: &[Complex64],
) -> crate::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# {label}")?;
    writeln!(f, "re,im")?;
    for e in eigs {
        writeln!(f, "{:e},{:e}", e.re, e.im)?;
    }
    Ok(())
}
