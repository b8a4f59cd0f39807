//! The four neural-operator architectures (Table 1) and their adaptation
//! into coarse-space corrections.
//!
//! All four models output coefficients in the fixed B-spline coarse basis.
//! They differ in how inputs are encoded and whether the source enters
//! linearly:
//!
//! | arch     | coefficient input  | source input | source handling      |
//! |----------|--------------------|--------------|----------------------|
//! | DeepONet | sensor samples Sθ  | Sf           | concatenated (MLP)   |
//! | RINO     | projections G⁻¹ZᵀWθ| G⁻¹ZᵀWf      | concatenated (MLP)   |
//! | VarMiON  | sensor samples Sθ  | Sf           | linear: C(θ)·Sf      |
//! | NGO      | projections G⁻¹ZᵀWθ| ZᵀWf         | linear: C(θ)·ZᵀWf    |
//!
//! A shared wrapper applies homogeneity scaling of the source (DeepONet and
//! RINO), normalization of the PDE coefficient by its spatial mean (real
//! families), and averaging over the four mirror reflections of the square.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::basis::CoarseBasis;
use crate::data::{Coefficients, PdeTag};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, MirrorAxis};
use crate::linalg::{dense_eigenvalues, norm2, Scalar};
use crate::nn::mlp::Mlp;
use crate::pde::{
    assemble_advection_diffusion, assemble_diffusion, assemble_helmholtz,
    AdvectionDiffusionProblem, DiffusionProblem, HelmholtzProblem,
};
use crate::twolevel::{DynPrecond, Preconditioner};

/// Architecture of Table 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchTag {
    DeepOnet,
    Rino,
    VarMiOn,
    Ngo,
}

impl ArchTag {
    pub const ALL: [ArchTag; 4] = [ArchTag::DeepOnet, ArchTag::Rino, ArchTag::VarMiOn, ArchTag::Ngo];

    pub fn label(self) -> &'static str {
        match self {
            ArchTag::DeepOnet => "deeponet",
            ArchTag::Rino => "rino",
            ArchTag::VarMiOn => "varmion",
            ArchTag::Ngo => "ngo",
        }
    }

    /// Linear-in-source architectures produce a coefficient matrix C(θ).
    pub fn is_matrix_valued(self) -> bool {
        matches!(self, ArchTag::VarMiOn | ArchTag::Ngo)
    }

    /// Sampling architectures read fields at sensor nodes; integrating ones
    /// project onto the basis.
    pub fn samples_inputs(self) -> bool {
        matches!(self, ArchTag::DeepOnet | ArchTag::VarMiOn)
    }

    fn code(self) -> u8 {
        match self {
            ArchTag::DeepOnet => 0,
            ArchTag::Rino => 1,
            ArchTag::VarMiOn => 2,
            ArchTag::Ngo => 3,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(ArchTag::DeepOnet),
            1 => Ok(ArchTag::Rino),
            2 => Ok(ArchTag::VarMiOn),
            3 => Ok(ArchTag::Ngo),
            _ => Err(Error::Format(format!("unknown architecture tag {c}"))),
        }
    }
}

impl FromStr for ArchTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "deeponet" => Ok(ArchTag::DeepOnet),
            "rino" => Ok(ArchTag::Rino),
            "varmion" => Ok(ArchTag::VarMiOn),
            "ngo" => Ok(ArchTag::Ngo),
            other => Err(Error::Config(format!("unknown architecture '{other}'"))),
        }
    }
}

impl std::fmt::Display for ArchTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Static description of a model: architecture, PDE family, basis and net
/// shape, and which wrapper transforms are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    pub arch: ArchTag,
    pub pde: PdeTag,
    pub m1d: usize,
    pub degree: usize,
    pub nx_train: usize,
    pub width: usize,
    pub depth: usize,
    /// NGO only: parametrize C = (U + Uᵀ)/2. The Galerkin inverse E⁻¹ is
    /// symmetric for the diffusion and Helmholtz operators, so this costs no
    /// expressiveness there and keeps the induced correction near-normal.
    pub symmetric_output: bool,
    /// Standardize concatenated inputs with training-split statistics.
    pub standardize_inputs: bool,
    /// Divide θ (and the velocity) by the spatial mean of θ and rescale the
    /// output by its inverse; inactive for Helmholtz (no such homogeneity).
    pub coeff_normalize: bool,
}

impl ModelConfig {
    pub fn new(arch: ArchTag, pde: PdeTag, m1d: usize, nx_train: usize) -> ModelConfig {
        ModelConfig {
            arch,
            pde,
            m1d,
            degree: 2,
            nx_train,
            width: 128,
            depth: 3,
            symmetric_output: arch == ArchTag::Ngo && pde != PdeTag::AdvectionDiffusion,
            standardize_inputs: arch != ArchTag::Ngo,
            coeff_normalize: pde != PdeTag::Helmholtz,
        }
    }

    pub fn m(&self) -> usize {
        self.m1d * self.m1d
    }

    pub fn is_complex(&self) -> bool {
        self.pde == PdeTag::Helmholtz
    }

    /// Number of length-m input blocks ahead of any velocity scalars:
    /// source blocks (nonlinear architectures only) then the coefficient.
    fn source_input_blocks(&self) -> usize {
        match (self.arch.is_matrix_valued(), self.is_complex()) {
            (true, _) => 0,
            (false, false) => 1,
            (false, true) => 2,
        }
    }

    pub fn input_dim(&self) -> usize {
        let blocks = self.source_input_blocks() + 1;
        let vel = if self.pde == PdeTag::AdvectionDiffusion { 2 } else { 0 };
        blocks * self.m() + vel
    }

    pub fn output_dim(&self) -> usize {
        let parts = if self.is_complex() { 2 } else { 1 };
        if self.arch.is_matrix_valued() {
            parts * self.m() * self.m()
        } else {
            parts * self.m()
        }
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(std::iter::repeat_n(self.width, self.depth));
        dims.push(self.output_dim());
        dims
    }
}

/// A trained (or freshly initialized) neural operator.
#[derive(Debug, Clone)]
pub struct NeuralModel {
    pub config: ModelConfig,
    pub net: Mlp,
    /// Standardization statistics over the concatenated raw input; empty
    /// when `standardize_inputs` is off.
    pub input_mean: Vec<f64>,
    pub input_std: Vec<f64>,
    /// Digest of the training configuration that produced the parameters.
    pub train_digest: u64,
}

impl NeuralModel {
    pub fn validate(&self) -> Result<()> {
        if self.net.input_dim() != self.config.input_dim()
            || self.net.output_dim() != self.config.output_dim()
        {
            return Err(Error::Dimension(format!(
                "network is {}→{} but the config requires {}→{}",
                self.net.input_dim(),
                self.net.output_dim(),
                self.config.input_dim(),
                self.config.output_dim()
            )));
        }
        // statistics may be empty (standardization then acts as identity,
        // e.g. for a freshly initialized model) but must otherwise match
        if self.input_mean.len() != self.input_std.len()
            || (!self.input_mean.is_empty() && self.input_mean.len() != self.config.input_dim())
        {
            return Err(Error::Dimension(
                "standardization statistics do not match the input width".into(),
            ));
        }
        Ok(())
    }
}

/// Grid-specific evaluation context: the coarse basis, the sensor lattice,
/// and the four mirror permutations of coefficient indices.
pub struct ModelContext {
    pub cb: CoarseBasis,
    pub sensors: Vec<usize>,
    pub perms: [Vec<usize>; 4],
}

impl ModelContext {
    pub fn new(grid: Grid, m1d: usize, degree: usize) -> Result<ModelContext> {
        let cb = CoarseBasis::build(grid, m1d, degree)?;
        let sensors = cb.sensor_nodes();
        let perms = MirrorAxis::ALL.map(|ax| cb.mirror_perm(ax));
        Ok(ModelContext { cb, sensors, perms })
    }

    pub fn for_model(model: &NeuralModel, grid: Grid) -> Result<ModelContext> {
        ModelContext::new(grid, model.config.m1d, model.config.degree)
    }

    fn gather<T: Scalar>(&self, v: &[T]) -> Vec<T> {
        self.sensors.iter().map(|&i| v[i]).collect()
    }

    /// G⁻¹ZᵀW applied to a real nodal vector.
    fn project_vec(&self, v: &[f64]) -> Vec<f64> {
        self.cb.gram_solve(&self.cb.restrict(v))
    }
}

/// Wrapper-transformed inputs for one problem instance, kept in raw
/// (unpermuted, unstandardized) channel form so mirror reflections can be
/// applied before standardization.
pub(crate) struct RawInputs {
    /// Length-m channels: source blocks first, then the coefficient block.
    pub blocks: Vec<Vec<f64>>,
    /// Normalized velocity scalars (advection-diffusion only).
    pub vel: Option<[f64; 2]>,
    /// Source blocks for the matrix-valued architectures (1 real, 2 complex).
    pub source: Vec<Vec<f64>>,
    /// Final multiplier restoring physical scale to the output coefficients.
    pub scale: f64,
}

pub(crate) fn raw_inputs_real(
    cfg: &ModelConfig,
    ctx: &ModelContext,
    theta: &[f64],
    velocity: Option<[f64; 2]>,
    b: &[f64],
) -> RawInputs {
    let n = theta.len();
    let alpha_theta = if cfg.coeff_normalize {
        theta.iter().sum::<f64>() / n as f64
    } else {
        1.0
    };
    let theta_n: Vec<f64> = theta.iter().map(|&t| t / alpha_theta).collect();
    let thin = if cfg.arch.samples_inputs() {
        ctx.gather(&theta_n)
    } else {
        ctx.project_vec(&theta_n)
    };
    let vel = velocity.map(|[cx, cy]| [cx / alpha_theta, cy / alpha_theta]);

    let mut blocks = Vec::new();
    let mut source = Vec::new();
    let mut scale = 1.0 / alpha_theta;
    if cfg.arch.is_matrix_valued() {
        source.push(match cfg.arch {
            ArchTag::VarMiOn => ctx.gather(b),
            _ => ctx.cb.restrict(b),
        });
    } else {
        // homogeneity scaling: feed b/‖b‖_W, multiply the output back
        let h = ctx.cb.grid().h();
        let alpha_f = h * norm2(b);
        let fin = if alpha_f > 0.0 {
            let raw = if cfg.arch.samples_inputs() { ctx.gather(b) } else { ctx.project_vec(b) };
            raw.iter().map(|&v| v / alpha_f).collect()
        } else {
            vec![0.0; cfg.m()]
        };
        blocks.push(fin);
        scale *= alpha_f;
    }
    blocks.push(thin);
    RawInputs { blocks, vel, source, scale }
}

pub(crate) fn raw_inputs_complex(
    cfg: &ModelConfig,
    ctx: &ModelContext,
    k: &[f64],
    b: &[Complex64],
) -> RawInputs {
    let thin = if cfg.arch.samples_inputs() { ctx.gather(k) } else { ctx.project_vec(k) };
    let mut blocks = Vec::new();
    let mut source = Vec::new();
    let mut scale = 1.0;
    if cfg.arch.is_matrix_valued() {
        let q = match cfg.arch {
            ArchTag::VarMiOn => ctx.gather(b),
            _ => ctx.cb.restrict(b),
        };
        source.push(q.iter().map(|c| c.re).collect());
        source.push(q.iter().map(|c| c.im).collect());
    } else {
        let h = ctx.cb.grid().h();
        let alpha_f = h * norm2(b);
        if alpha_f > 0.0 {
            let proj = if cfg.arch.samples_inputs() {
                ctx.gather(b)
            } else {
                ctx.cb.project_complex(&ctx.cb.restrict(b))
            };
            blocks.push(proj.iter().map(|c| c.re / alpha_f).collect());
            blocks.push(proj.iter().map(|c| c.im / alpha_f).collect());
        } else {
            blocks.push(vec![0.0; cfg.m()]);
            blocks.push(vec![0.0; cfg.m()]);
        }
        scale = alpha_f;
    }
    blocks.push(thin);
    RawInputs { blocks, vel: None, source, scale }
}

/// Permute every length-m channel with `perm` (mirror reflection of the
/// lattice), flip velocity signs per axis, then standardize.
pub(crate) fn assemble_input(
    model: &NeuralModel,
    raw: &RawInputs,
    perm: &[usize],
    axis: MirrorAxis,
) -> Vec<f64> {
    assemble_input_parts(&model.config, &model.input_mean, &model.input_std, raw, perm, axis)
}

pub(crate) fn assemble_input_parts(
    cfg: &ModelConfig,
    mean: &[f64],
    std: &[f64],
    raw: &RawInputs,
    perm: &[usize],
    axis: MirrorAxis,
) -> Vec<f64> {
    let mut x = Vec::with_capacity(cfg.input_dim());
    for blk in &raw.blocks {
        for &j in perm {
            x.push(blk[j]);
        }
    }
    if let Some([vx, vy]) = raw.vel {
        x.push(if axis.flips_x() { -vx } else { vx });
        x.push(if axis.flips_y() { -vy } else { vy });
    }
    if cfg.standardize_inputs && !mean.is_empty() {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = (*xi - mean[i]) / std[i];
        }
    }
    x
}

fn net_row(net: &Mlp, x: Vec<f64>) -> Vec<f64> {
    let xb = Array2::from_shape_vec((1, x.len()), x).expect("row shape");
    net.forward(&xb).row(0).to_vec()
}

/// Reshape the network output into coefficient matrices (one for real
/// models, [re, im] for complex), symmetrizing when configured.
pub(crate) fn matrices_from_output(cfg: &ModelConfig, y: &[f64]) -> Vec<Array2<f64>> {
    let m = cfg.m();
    let parts = if cfg.is_complex() { 2 } else { 1 };
    let mut out = Vec::with_capacity(parts);
    for p in 0..parts {
        let mut c = Array2::from_shape_vec((m, m), y[p * m * m..(p + 1) * m * m].to_vec())
            .expect("square reshape");
        if cfg.symmetric_output {
            for i in 0..m {
                for j in 0..i {
                    let s = 0.5 * (c[[i, j]] + c[[j, i]]);
                    c[[i, j]] = s;
                    c[[j, i]] = s;
                }
            }
        }
        out.push(c);
    }
    out
}

/// Mirror-averaged coefficient matrix C(θ) for the linear-in-source
/// architectures on a real family (VarMiON, NGO). Rows are not trimmed.
pub fn model_matrix(
    model: &NeuralModel,
    ctx: &ModelContext,
    theta: &[f64],
    velocity: Option<[f64; 2]>,
) -> Result<Array2<f64>> {
    if !model.config.arch.is_matrix_valued() {
        return Err(Error::Config(format!(
            "{} is not linear in the source; it has no coefficient matrix",
            model.config.arch
        )));
    }
    if model.config.is_complex() {
        return Err(Error::Config("complex model: use model_matrix_complex".into()));
    }
    let m = model.config.m();
    let raw = raw_inputs_real(&model.config, ctx, theta, velocity, &vec![0.0; theta.len()]);
    let mut acc = Array2::<f64>::zeros((m, m));
    for (perm, axis) in ctx.perms.iter().zip(MirrorAxis::ALL) {
        let y = net_row(&model.net, assemble_input(model, &raw, perm, axis));
        let c = &matrices_from_output(&model.config, &y)[0];
        // mirror permutations are involutions: un-permuting both index sets
        // is conjugation by the same permutation
        for i in 0..m {
            for j in 0..m {
                acc[[i, j]] += 0.25 * c[[perm[i], perm[j]]];
            }
        }
    }
    acc *= raw.scale;
    Ok(acc)
}

/// Complex counterpart of [`model_matrix`]: returns (Re C, Im C).
pub fn model_matrix_complex(
    model: &NeuralModel,
    ctx: &ModelContext,
    k: &[f64],
) -> Result<(Array2<f64>, Array2<f64>)> {
    if !model.config.arch.is_matrix_valued() {
        return Err(Error::Config(format!(
            "{} is not linear in the source; it has no coefficient matrix",
            model.config.arch
        )));
    }
    if !model.config.is_complex() {
        return Err(Error::Config("real model: use model_matrix".into()));
    }
    let m = model.config.m();
    let raw = raw_inputs_complex(&model.config, ctx, k, &vec![Complex64::ZERO; k.len()]);
    let mut acc_re = Array2::<f64>::zeros((m, m));
    let mut acc_im = Array2::<f64>::zeros((m, m));
    for (perm, axis) in ctx.perms.iter().zip(MirrorAxis::ALL) {
        let y = net_row(&model.net, assemble_input(model, &raw, perm, axis));
        let cs = matrices_from_output(&model.config, &y);
        for i in 0..m {
            for j in 0..m {
                acc_re[[i, j]] += 0.25 * cs[0][[perm[i], perm[j]]];
                acc_im[[i, j]] += 0.25 * cs[1][[perm[i], perm[j]]];
            }
        }
    }
    Ok((acc_re, acc_im))
}

/// Mirror-averaged, trimmed output coefficients for a real-family instance
/// with an already-assembled discrete right-hand side `b`.
pub(crate) fn coefficients_real(
    model: &NeuralModel,
    ctx: &ModelContext,
    theta: &[f64],
    velocity: Option<[f64; 2]>,
    b: &[f64],
) -> Vec<f64> {
    let m = model.config.m();
    let raw = raw_inputs_real(&model.config, ctx, theta, velocity, b);
    let mut acc = vec![0.0; m];
    for (perm, axis) in ctx.perms.iter().zip(MirrorAxis::ALL) {
        let y = net_row(&model.net, assemble_input(model, &raw, perm, axis));
        if model.config.arch.is_matrix_valued() {
            let c = &matrices_from_output(&model.config, &y)[0];
            let q: Vec<f64> = perm.iter().map(|&j| raw.source[0][j]).collect();
            let cq = c.dot(&Array1::from(q));
            for i in 0..m {
                acc[i] += 0.25 * cq[perm[i]];
            }
        } else {
            for i in 0..m {
                acc[i] += 0.25 * y[perm[i]];
            }
        }
    }
    for v in acc.iter_mut() {
        *v *= raw.scale;
    }
    ctx.cb.apply_trim(&mut acc);
    acc
}

pub(crate) fn coefficients_complex(
    model: &NeuralModel,
    ctx: &ModelContext,
    k: &[f64],
    b: &[Complex64],
) -> Vec<Complex64> {
    let m = model.config.m();
    let raw = raw_inputs_complex(&model.config, ctx, k, b);
    let mut acc = vec![Complex64::ZERO; m];
    for (perm, axis) in ctx.perms.iter().zip(MirrorAxis::ALL) {
        let y = net_row(&model.net, assemble_input(model, &raw, perm, axis));
        if model.config.arch.is_matrix_valued() {
            let cs = matrices_from_output(&model.config, &y);
            let qr: Vec<f64> = perm.iter().map(|&j| raw.source[0][j]).collect();
            let qi: Vec<f64> = perm.iter().map(|&j| raw.source[1][j]).collect();
            let (qr, qi) = (Array1::from(qr), Array1::from(qi));
            let cre = cs[0].dot(&qr) - cs[1].dot(&qi);
            let cim = cs[0].dot(&qi) + cs[1].dot(&qr);
            for i in 0..m {
                acc[i] += 0.25 * Complex64::new(cre[perm[i]], cim[perm[i]]);
            }
        } else {
            for i in 0..m {
                acc[i] += 0.25 * Complex64::new(y[perm[i]], y[m + perm[i]]);
            }
        }
    }
    for v in acc.iter_mut() {
        *v *= raw.scale;
    }
    ctx.cb.apply_trim(&mut acc);
    acc
}

/// A problem instance handed to [`model_forward`]: coefficient, source, and
/// boundary data as one struct per family.
pub enum ProblemInputs<'a> {
    Diffusion(&'a DiffusionProblem),
    AdvectionDiffusion(&'a AdvectionDiffusionProblem),
    Helmholtz(&'a HelmholtzProblem),
}

/// Output coefficients of [`model_forward`].
#[derive(Debug, Clone)]
pub enum CoeffVector {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

/// Evaluate the full architecture wrapper on one problem instance. The
/// source and boundary data (f, g, η) enter through the discrete dual
/// vector of the assembled system, which reduces to plain f in the interior.
pub fn model_forward(
    model: &NeuralModel,
    ctx: &ModelContext,
    prob: ProblemInputs<'_>,
) -> Result<CoeffVector> {
    model.validate()?;
    let grid = ctx.cb.grid();
    match (model.config.pde, prob) {
        (PdeTag::Diffusion, ProblemInputs::Diffusion(p)) => {
            let sys = assemble_diffusion(p, grid)?;
            Ok(CoeffVector::Real(coefficients_real(model, ctx, &p.theta.vals, None, &sys.b)))
        }
        (PdeTag::AdvectionDiffusion, ProblemInputs::AdvectionDiffusion(p)) => {
            let sys = assemble_advection_diffusion(p, grid)?;
            Ok(CoeffVector::Real(coefficients_real(
                model,
                ctx,
                &p.base.theta.vals,
                Some(p.c),
                &sys.b,
            )))
        }
        (PdeTag::Helmholtz, ProblemInputs::Helmholtz(p)) => {
            let sys = assemble_helmholtz(p, grid)?;
            Ok(CoeffVector::Complex(coefficients_complex(model, ctx, &p.k.vals, &sys.b)))
        }
        _ => Err(Error::Config("problem family does not match the model's PDE tag".into())),
    }
}

/// Linear correction w = Z·C·(source map applied to v) for VarMiON/NGO with
/// the coefficient matrix precomputed once per problem instance — this is
/// the "setup" stage of the learned two-level preconditioner.
struct LinearCorrection {
    ctx: Arc<ModelContext>,
    /// Rows at trimmed indices already zeroed.
    c: Array2<f64>,
    sensor_source: bool,
    n: usize,
}

impl Preconditioner<f64> for LinearCorrection {
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let q = if self.sensor_source { self.ctx.gather(v) } else { self.ctx.cb.restrict(v) };
        let c = self.c.dot(&Array1::from(q));
        self.ctx.cb.prolong(c.as_slice().expect("contiguous"))
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn is_symmetric(&self) -> bool {
        false
    }
}

struct LinearCorrectionComplex {
    ctx: Arc<ModelContext>,
    c_re: Array2<f64>,
    c_im: Array2<f64>,
    sensor_source: bool,
    n: usize,
}

impl Preconditioner<Complex64> for LinearCorrectionComplex {
    fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let q = if self.sensor_source { self.ctx.gather(v) } else { self.ctx.cb.restrict(v) };
        let qr = Array1::from(q.iter().map(|c| c.re).collect::<Vec<_>>());
        let qi = Array1::from(q.iter().map(|c| c.im).collect::<Vec<_>>());
        let re = self.c_re.dot(&qr) - self.c_im.dot(&qi);
        let im = self.c_re.dot(&qi) + self.c_im.dot(&qr);
        let c: Vec<Complex64> =
            re.iter().zip(im.iter()).map(|(&r, &i)| Complex64::new(r, i)).collect();
        self.ctx.cb.prolong(&c)
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn is_symmetric(&self) -> bool {
        false
    }
}

/// Nonlinear correction for DeepONet/RINO: every application is a full
/// wrapper evaluation with v as the source and homogeneous boundary data.
struct NonlinearCorrection {
    model: Arc<NeuralModel>,
    ctx: Arc<ModelContext>,
    theta: Vec<f64>,
    velocity: Option<[f64; 2]>,
    n: usize,
}

impl Preconditioner<f64> for NonlinearCorrection {
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let c = coefficients_real(&self.model, &self.ctx, &self.theta, self.velocity, v);
        self.ctx.cb.prolong(&c)
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn is_linear(&self) -> bool {
        false
    }

    fn is_symmetric(&self) -> bool {
        false
    }
}

struct NonlinearCorrectionComplex {
    model: Arc<NeuralModel>,
    ctx: Arc<ModelContext>,
    k: Vec<f64>,
    n: usize,
}

impl Preconditioner<Complex64> for NonlinearCorrectionComplex {
    fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let c = coefficients_complex(&self.model, &self.ctx, &self.k, v);
        self.ctx.cb.prolong(&c)
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn is_linear(&self) -> bool {
        false
    }

    fn is_symmetric(&self) -> bool {
        false
    }
}

/// Adapt a trained real-family model into the coarse correction of Eq. 5:
/// apply(v) = Z · N(θ; v) with boundary inputs set to zero. Sampling maps
/// and quadrature weights are rebuilt for the target grid.
pub fn as_coarse_correction_with(
    model: Arc<NeuralModel>,
    ctx: Arc<ModelContext>,
    coeff: &Coefficients,
) -> Result<DynPrecond<f64>> {
    model.validate()?;
    let n = ctx.cb.grid().n();
    let (theta, velocity) = match (model.config.pde, coeff) {
        (PdeTag::Diffusion, Coefficients::Diffusion { theta }) => (theta.vals.clone(), None),
        (PdeTag::AdvectionDiffusion, Coefficients::AdvectionDiffusion { theta, c, .. }) => {
            (theta.vals.clone(), Some(*c))
        }
        _ => {
            return Err(Error::Config(
                "coefficients do not match the model's PDE family (complex models use as_coarse_correction_complex)".into(),
            ))
        }
    };
    if theta.len() != n {
        return Err(Error::Dimension("coefficient field does not match the target grid".into()));
    }
    if model.config.arch.is_matrix_valued() {
        let mut c = model_matrix(&model, &ctx, &theta, velocity)?;
        for (i, &keep) in ctx.cb.trim_mask().iter().enumerate() {
            if !keep {
                c.row_mut(i).fill(0.0);
            }
        }
        let sensor_source = model.config.arch == ArchTag::VarMiOn;
        Ok(Arc::new(LinearCorrection { ctx, c, sensor_source, n }))
    } else {
        Ok(Arc::new(NonlinearCorrection { model, ctx, theta, velocity, n }))
    }
}

pub fn as_coarse_correction(
    model: &Arc<NeuralModel>,
    grid: Grid,
    coeff: &Coefficients,
) -> Result<DynPrecond<f64>> {
    let ctx = Arc::new(ModelContext::for_model(model, grid)?);
    as_coarse_correction_with(model.clone(), ctx, coeff)
}

pub fn as_coarse_correction_complex_with(
    model: Arc<NeuralModel>,
    ctx: Arc<ModelContext>,
    k: &Field<f64>,
) -> Result<DynPrecond<Complex64>> {
    model.validate()?;
    if !model.config.is_complex() {
        return Err(Error::Config("real-family model: use as_coarse_correction".into()));
    }
    let n = ctx.cb.grid().n();
    if k.vals.len() != n {
        return Err(Error::Dimension("wave-number field does not match the target grid".into()));
    }
    if model.config.arch.is_matrix_valued() {
        let (mut c_re, mut c_im) = model_matrix_complex(&model, &ctx, &k.vals)?;
        for (i, &keep) in ctx.cb.trim_mask().iter().enumerate() {
            if !keep {
                c_re.row_mut(i).fill(0.0);
                c_im.row_mut(i).fill(0.0);
            }
        }
        let sensor_source = model.config.arch == ArchTag::VarMiOn;
        Ok(Arc::new(LinearCorrectionComplex { ctx, c_re, c_im, sensor_source, n }))
    } else {
        Ok(Arc::new(NonlinearCorrectionComplex { model, ctx, k: k.vals.clone(), n }))
    }
}

pub fn as_coarse_correction_complex(
    model: &Arc<NeuralModel>,
    grid: Grid,
    k: &Field<f64>,
) -> Result<DynPrecond<Complex64>> {
    let ctx = Arc::new(ModelContext::for_model(model, grid)?);
    as_coarse_correction_complex_with(model.clone(), ctx, k)
}

/// Symmetrized NGO correction (Eq. 8): apply(v) = (h²/2)·Z(C + Cᵀ)Zᵀ v,
/// with the trimmed basis functions excluded from both sides so the
/// correction stays supported on the trimmed coarse space. Whether the
/// symmetric part is positive definite is reported, not enforced.
pub struct NgoSymmetricCorrection {
    ctx: Arc<ModelContext>,
    /// (C + Cᵀ)/2 with trimmed rows and columns zeroed.
    csym: Array2<f64>,
    n: usize,
    pub min_symmetric_eigenvalue: f64,
    pub symmetric_part_positive_definite: bool,
}

impl NgoSymmetricCorrection {
    /// The trimmed symmetrized coefficient block (diagnostic access).
    pub fn symmetric_matrix(&self) -> &Array2<f64> {
        &self.csym
    }
}

impl Preconditioner<f64> for NgoSymmetricCorrection {
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        // restrict is h²Zᵀ on a uniform grid, so prolong∘csym∘restrict is
        // exactly (h²/2)·Z(C + Cᵀ)Zᵀ
        let q = self.ctx.cb.restrict(v);
        let c = self.csym.dot(&Array1::from(q));
        self.ctx.cb.prolong(c.as_slice().expect("contiguous"))
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

pub fn ngo_symmetric_correction_with(
    model: &NeuralModel,
    ctx: Arc<ModelContext>,
    coeff: &Coefficients,
) -> Result<NgoSymmetricCorrection> {
    if model.config.arch != ArchTag::Ngo {
        return Err(Error::Config(format!(
            "symmetrized correction requires an NGO model, got {}",
            model.config.arch
        )));
    }
    let (theta, velocity) = match (model.config.pde, coeff) {
        (PdeTag::Diffusion, Coefficients::Diffusion { theta }) => (&theta.vals, None),
        (PdeTag::AdvectionDiffusion, Coefficients::AdvectionDiffusion { theta, c, .. }) => {
            (&theta.vals, Some(*c))
        }
        _ => {
            return Err(Error::Config(
                "symmetrized correction is defined for the real families only".into(),
            ))
        }
    };
    let n = ctx.cb.grid().n();
    let c = model_matrix(model, &ctx, theta, velocity)?;
    let m = model.config.m();
    let keep = ctx.cb.trim_mask();
    let mut csym = Array2::<f64>::zeros((m, m));
    for i in 0..m {
        if !keep[i] {
            continue;
        }
        for j in 0..m {
            if keep[j] {
                csym[[i, j]] = 0.5 * (c[[i, j]] + c[[j, i]]);
            }
        }
    }
    // report definiteness of the trimmed symmetric block
    let kept = ctx.cb.trimmed_indices();
    let mt = kept.len();
    let mut block = Array2::<f64>::zeros((mt, mt));
    for (bi, &i) in kept.iter().enumerate() {
        for (bj, &j) in kept.iter().enumerate() {
            block[[bi, bj]] = csym[[i, j]];
        }
    }
    let eigs = dense_eigenvalues(&block)?;
    let min_eig = eigs.iter().map(|e| e.re).fold(f64::INFINITY, f64::min);
    Ok(NgoSymmetricCorrection {
        ctx,
        csym,
        n,
        min_symmetric_eigenvalue: min_eig,
        symmetric_part_positive_definite: min_eig > 0.0,
    })
}

pub fn ngo_symmetric_correction(
    model: &NeuralModel,
    grid: Grid,
    coeff: &Coefficients,
) -> Result<NgoSymmetricCorrection> {
    let ctx = Arc::new(ModelContext::new(grid, model.config.m1d, model.config.degree)?);
    ngo_symmetric_correction_with(model, ctx, coeff)
}

const MODEL_MAGIC: &[u8; 8] = b"NOCSNN1\0";

/// Serialize a model as a versioned binary blob: architecture tag, basis
/// descriptor, wrapper flags and statistics, layer shapes, parameters, and
/// the training-config digest.
pub fn write_model(path: &Path, model: &NeuralModel) -> Result<()> {
    model.validate()?;
    let f = File::create(path)?;
    let mut w = BufWriter::new(f);
    w.write_all(MODEL_MAGIC)?;
    let cfg = &model.config;
    w.write_u8(cfg.arch.code())?;
    w.write_u8(cfg.pde.code())?;
    let flags = (cfg.symmetric_output as u8)
        | ((cfg.standardize_inputs as u8) << 1)
        | ((cfg.coeff_normalize as u8) << 2);
    w.write_u8(flags)?;
    for v in [cfg.m1d, cfg.degree, cfg.nx_train, cfg.width, cfg.depth] {
        w.write_u64::<LittleEndian>(v as u64)?;
    }
    w.write_u64::<LittleEndian>(model.train_digest)?;
    w.write_u64::<LittleEndian>(model.input_mean.len() as u64)?;
    for &v in model.input_mean.iter().chain(model.input_std.iter()) {
        w.write_f64::<LittleEndian>(v)?;
    }
    w.write_u64::<LittleEndian>(model.net.layers.len() as u64)?;
    for layer in &model.net.layers {
        w.write_u64::<LittleEndian>(layer.w.nrows() as u64)?;
        w.write_u64::<LittleEndian>(layer.w.ncols() as u64)?;
        for &v in layer.w.iter() {
            w.write_f64::<LittleEndian>(v)?;
        }
        for &v in layer.b.iter() {
            w.write_f64::<LittleEndian>(v)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<NeuralModel> {
    let f = File::open(path)?;
    let mut r = BufReader::new(f);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MODEL_MAGIC {
        return Err(Error::Format("not a model checkpoint (bad magic)".into()));
    }
    let arch = ArchTag::from_code(r.read_u8()?)?;
    let pde = PdeTag::from_code(r.read_u8()?)?;
    let flags = r.read_u8()?;
    let mut vals = [0usize; 5];
    for v in vals.iter_mut() {
        *v = r.read_u64::<LittleEndian>()? as usize;
    }
    let [m1d, degree, nx_train, width, depth] = vals;
    let config = ModelConfig {
        arch,
        pde,
        m1d,
        degree,
        nx_train,
        width,
        depth,
        symmetric_output: flags & 1 != 0,
        standardize_inputs: flags & 2 != 0,
        coeff_normalize: flags & 4 != 0,
    };
    let train_digest = r.read_u64::<LittleEndian>()?;
    let stat_len = r.read_u64::<LittleEndian>()? as usize;
    let read_f64s = |r: &mut BufReader<File>, len: usize| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            out.push(r.read_f64::<LittleEndian>()?);
        }
        Ok(out)
    };
    let input_mean = read_f64s(&mut r, stat_len)?;
    let input_std = read_f64s(&mut r, stat_len)?;
    let n_layers = r.read_u64::<LittleEndian>()? as usize;
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let rows = r.read_u64::<LittleEndian>()? as usize;
        let cols = r.read_u64::<LittleEndian>()? as usize;
        let w = Array2::from_shape_vec((rows, cols), read_f64s(&mut r, rows * cols)?)
            .map_err(|e| Error::Format(format!("layer shape: {e}")))?;
        let b = Array1::from(read_f64s(&mut r, cols)?);
        layers.push(crate::nn::mlp::Layer { w, b });
    }
    let model =
        NeuralModel { config, net: Mlp { layers }, input_mean, input_std, train_digest };
    model.validate()?;
    Ok(model)
}
