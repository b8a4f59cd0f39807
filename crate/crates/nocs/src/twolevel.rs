//! The `Preconditioner` contract, the exact coarse correction
//! Q = Z_t E⁻¹ Z_tᵀ, and the four standard two-level combination forms.

use crate::basis::CoarseBasis;
use crate::error::{Error, Result};
use crate::linalg::{Csr, DenseLu, Scalar};
use ndarray::Array2;
use std::sync::Arc;

/// A linear-operator preconditioner `v ↦ apply(v)`.
pub trait Preconditioner<T: Scalar>: Send + Sync {
    fn apply(&self, v: &[T]) -> Vec<T>;
    fn dim(&self) -> usize;
    fn is_linear(&self) -> bool {
        true
    }
    /// Meaningful only when linear.
    fn is_symmetric(&self) -> bool;
}

pub type DynPrecond<T> = Arc<dyn Preconditioner<T>>;

/// How local and coarse corrections are combined (§2.1 labels).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombinationForm {
    Ad,
    Adef1,
    Adef2,
    Bnn,
}

impl CombinationForm {
    pub const ALL: [CombinationForm; 4] = [
        CombinationForm::Ad,
        CombinationForm::Adef1,
        CombinationForm::Adef2,
        CombinationForm::Bnn,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CombinationForm::Ad => "AD",
            CombinationForm::Adef1 => "A-DEF1",
            CombinationForm::Adef2 => "A-DEF2",
            CombinationForm::Bnn => "BNN",
        }
    }
}

impl std::str::FromStr for CombinationForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "ad" => Ok(CombinationForm::Ad),
            "adef1" => Ok(CombinationForm::Adef1),
            "adef2" => Ok(CombinationForm::Adef2),
            "bnn" => Ok(CombinationForm::Bnn),
            other => Err(Error::Config(format!("unknown combination form '{other}'"))),
        }
    }
}

/// Galerkin coarse matrix E = Z_tᵀ A Z_t over the trimmed basis columns.
pub fn coarse_matrix<T: Scalar>(a: &Csr<T>, cb: &CoarseBasis) -> Array2<T> {
    let zt = trimmed_z(cb);
    let az = a_times_z(a, &zt);
    zt_times_dense(&zt, &az)
}

/// Trimmed prolongation Z_t as a sparse matrix (n × m_trim).
pub fn trimmed_z(cb: &CoarseBasis) -> Csr<f64> {
    let keep = cb.trim_mask();
    let mut col_map = vec![usize::MAX; keep.len()];
    let mut m_t = 0;
    for (c, &k) in keep.iter().enumerate() {
        if k {
            col_map[c] = m_t;
            m_t += 1;
        }
    }
    let z = cb.z();
    let mut coo = crate::linalg::Coo::new(z.nrows(), m_t);
    for r in 0..z.nrows() {
        let (cols, vals) = z.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            if keep[c] {
                coo.push(r, col_map[c], v);
            }
        }
    }
    coo.to_csr()
}

/// Dense n × m_t product A Z_t, columns contiguous in the second axis.
fn a_times_z<T: Scalar>(a: &Csr<T>, zt: &Csr<f64>) -> Array2<T> {
    let n = a.nrows();
    let m_t = zt.ncols();
    // densify Z_t one column set at a time to reuse spmv
    let mut zd = vec![vec![T::zero(); n]; m_t];
    for r in 0..n {
        let (cols, vals) = zt.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            zd[c][r] = T::from_re(v);
        }
    }
    let mut az = Array2::zeros((n, m_t));
    for (c, col) in zd.iter().enumerate() {
        let acol = a.spmv(col);
        for r in 0..n {
            az[[r, c]] = acol[r];
        }
    }
    az
}

/// Z_tᵀ · B for dense B (n × m_t) → m_t × m_t.
fn zt_times_dense<T: Scalar>(zt: &Csr<f64>, b: &Array2<T>) -> Array2<T> {
    let m_t = zt.ncols();
    let mut e = Array2::zeros((m_t, m_t));
    for r in 0..zt.nrows() {
        let (cols, vals) = zt.row(r);
        for (&k, &z) in cols.iter().zip(vals) {
            for c in 0..m_t {
                let add = b[[r, c]].scale(z);
                e[[k, c]] += add;
            }
        }
    }
    e
}

/// Exact coarse correction Q = Z_t E⁻¹ Z_tᵀ with E factorized once at setup.
pub struct ExactCoarseCorrection<T: Scalar> {
    zt: Csr<f64>,
    e_lu: DenseLu<T>,
    symmetric: bool,
    n: usize,
}

impl<T: Scalar> ExactCoarseCorrection<T> {
    pub fn build(a: &Csr<T>, cb: &CoarseBasis) -> Result<Self> {
        let zt = trimmed_z(cb);
        let az = a_times_z(a, &zt);
        let e = zt_times_dense(&zt, &az);
        let symmetric = a.asymmetry() == 0.0;
        let e_lu = DenseLu::factor(&e)?;
        Ok(ExactCoarseCorrection {
            zt,
            e_lu,
            symmetric,
            n: a.nrows(),
        })
    }

    /// Restrict, solve on the coarse space, prolong.
    pub fn apply_vec(&self, v: &[T]) -> Vec<T> {
        let r = restrict_plain(&self.zt, v);
        let y = self.e_lu.solve(&r);
        prolong_plain(&self.zt, &y)
    }
}

/// Z_tᵀ v (no quadrature weights).
pub fn restrict_plain<T: Scalar>(zt: &Csr<f64>, v: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); zt.ncols()];
    for r in 0..zt.nrows() {
        let (cols, vals) = zt.row(r);
        for (&c, &z) in cols.iter().zip(vals) {
            out[c] += v[r].scale(z);
        }
    }
    out
}

/// Z_t y.
pub fn prolong_plain<T: Scalar>(zt: &Csr<f64>, y: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); zt.nrows()];
    for r in 0..zt.nrows() {
        let (cols, vals) = zt.row(r);
        let mut acc = T::zero();
        for (&c, &z) in cols.iter().zip(vals) {
            acc += y[c].scale(z);
        }
        out[r] = acc;
    }
    out
}

impl<T: Scalar> Preconditioner<T> for ExactCoarseCorrection<T> {
    fn apply(&self, v: &[T]) -> Vec<T> {
        self.apply_vec(v)
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn is_symmetric(&self) -> bool {
        self.symmetric
    }
}

/// Two-level combination of a smoother and a coarse correction.
pub struct Combined<T: Scalar> {
    form: CombinationForm,
    smoother: DynPrecond<T>,
    coarse: DynPrecond<T>,
    a: Arc<Csr<T>>,
}

impl<T: Scalar> Combined<T> {
    pub fn new(
        form: CombinationForm,
        smoother: DynPrecond<T>,
        coarse: DynPrecond<T>,
        a: Arc<Csr<T>>,
    ) -> Self {
        debug_assert_eq!(smoother.dim(), a.nrows());
        debug_assert_eq!(coarse.dim(), a.nrows());
        Combined {
            form,
            smoother,
            coarse,
            a,
        }
    }

    pub fn form(&self) -> CombinationForm {
        self.form
    }
}

impl<T: Scalar> Preconditioner<T> for Combined<T> {
    fn apply(&self, v: &[T]) -> Vec<T> {
        match self.form {
            // Eq. 1 is a plain sum, not a multiplicative composition.
            CombinationForm::Ad => {
                let mut w = self.smoother.apply(v);
                let q = self.coarse.apply(v);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi += qi;
                }
                w
            }
            _ => {
                let stages: &[&DynPrecond<T>] = match self.form {
                    CombinationForm::Adef1 => &[&self.coarse, &self.smoother],
                    CombinationForm::Adef2 => &[&self.smoother, &self.coarse],
                    CombinationForm::Bnn => &[&self.coarse, &self.smoother, &self.coarse],
                    CombinationForm::Ad => unreachable!(),
                };
                let mut w = stages[0].apply(v);
                for stage in &stages[1..] {
                    // residual update: w ← w + component(v − A w)
                    let aw = self.a.spmv(&w);
                    let mut r = v.to_vec();
                    for (ri, awi) in r.iter_mut().zip(aw) {
                        *ri -= awi;
                    }
                    let dw = stage.apply(&r);
                    for (wi, di) in w.iter_mut().zip(dw) {
                        *wi += di;
                    }
                }
                w
            }
        }
    }

    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn is_linear(&self) -> bool {
        self.smoother.is_linear() && self.coarse.is_linear()
    }

    fn is_symmetric(&self) -> bool {
        let both = self.smoother.is_symmetric() && self.coarse.is_symmetric();
        match self.form {
            CombinationForm::Ad | CombinationForm::Bnn => both,
            CombinationForm::Adef1 | CombinationForm::Adef2 => false,
        }
    }
}

/// Convenience constructor mirroring the module-level operation name.
pub fn combine<T: Scalar>(
    form: CombinationForm,
    smoother: DynPrecond<T>,
    coarse: DynPrecond<T>,
    a: Arc<Csr<T>>,
) -> Combined<T> {
    Combined::new(form, smoother, coarse, a)
}
