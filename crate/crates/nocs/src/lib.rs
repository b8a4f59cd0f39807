//! Two-level Krylov preconditioning with neural-operator coarse-space corrections.
//!
//! The crate provides, at desk scale:
//!
//! * cell-centered finite-volume / finite-difference discretizations of
//!   diffusion, advection–diffusion (Scharfetter–Gummel flux) and Helmholtz
//!   (Sommerfeld-type Robin boundary) problems on the unit square,
//! * a tensor-product B-spline coarse basis with quadrature and Gram matrices,
//! * PDE-specific smoothers (truncated Green's-kernel convolution,
//!   four-direction Gauss–Seidel),
//! * the AD / A-DEF1 / A-DEF2 / BNN two-level combination forms,
//! * PCG and restarted flexible GMRES with the evaluation protocol used in the
//!   experiments,
//! * four learned coarse-correction architectures (DeepONet, RINO, VarMiON,
//!   NGO) trained from scratch with Adam on a relative L² loss,
//! * samplers for the training datasets and spectral diagnostics of the
//!   preconditioned operators.

pub mod basis;
pub mod data;
pub mod error;
pub mod grid;
pub mod krylov;
pub mod linalg;
pub mod nn;
pub mod pde;
pub mod smooth;
pub mod spectrum;
pub mod twolevel;

pub use error::{Error, Result};
