//! Dataset sampling and packaging: Gaussian random fields, the three source
//! distributions, coefficient draws per PDE family, high-accuracy fine
//! solves, and binary round-tripping.

use crate::basis::CoarseBasis;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::krylov::{fgmres, SolveConfig};
use crate::linalg::{cholesky, norm2, Scalar};
use crate::pde::{
    assemble_advection_diffusion, assemble_diffusion, assemble_helmholtz,
    AdvectionDiffusionProblem, DiffusionProblem, DiscreteSystem, HelmholtzProblem,
};
use crate::smooth::{
    build_four_direction_gs, build_greens_smoother_with, diffusion_smoother_config,
    helmholtz_smoother_config,
};
use crate::twolevel::{CombinationForm, Combined, ExactCoarseCorrection};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

/// Auxiliary lattice resolution for GRF sampling.
const GRF_AUX: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdeTag {
    Diffusion,
    AdvectionDiffusion,
    Helmholtz,
}

impl PdeTag {
    pub fn label(self) -> &'static str {
        match self {
            PdeTag::Diffusion => "diffusion",
            PdeTag::AdvectionDiffusion => "advdiff",
            PdeTag::Helmholtz => "helmholtz",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            PdeTag::Diffusion => 0,
            PdeTag::AdvectionDiffusion => 1,
            PdeTag::Helmholtz => 2,
        }
    }

    pub(crate) fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(PdeTag::Diffusion),
            1 => Ok(PdeTag::AdvectionDiffusion),
            2 => Ok(PdeTag::Helmholtz),
            _ => Err(Error::Format(format!("unknown pde tag {c}"))),
        }
    }
}

impl std::str::FromStr for PdeTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "diffusion" => Ok(PdeTag::Diffusion),
            "advdiff" | "advection-diffusion" => Ok(PdeTag::AdvectionDiffusion),
            "helmholtz" => Ok(PdeTag::Helmholtz),
            other => Err(Error::Config(format!("unknown pde '{other}'"))),
        }
    }
}

/// Source-term distribution (§4.1 Datasets 1–3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceDistribution {
    Grf { lambda: f64 },
    SplineIid,
    SplineInvGram,
}

impl SourceDistribution {
    pub fn label(self) -> &'static str {
        match self {
            SourceDistribution::Grf { .. } => "grf",
            SourceDistribution::SplineIid => "spline-iid",
            SourceDistribution::SplineInvGram => "spline-invgram",
        }
    }

    fn code(self) -> u8 {
        match self {
            SourceDistribution::Grf { .. } => 0,
            SourceDistribution::SplineIid => 1,
            SourceDistribution::SplineInvGram => 2,
        }
    }
}

impl std::str::FromStr for SourceDistribution {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "grf" => Ok(SourceDistribution::Grf { lambda: 0.2 }),
            "spline-iid" | "iid" => Ok(SourceDistribution::SplineIid),
            "spline-invgram" | "invgram" => Ok(SourceDistribution::SplineInvGram),
            other => Err(Error::Config(format!("unknown source distribution '{other}'"))),
        }
    }
}

/// Reusable Gaussian-random-field sampler: the squared-exponential
/// covariance over the auxiliary lattice is factorized once.
pub struct GrfSampler {
    lambda: f64,
    chol_2d: Array2<f64>,
    chol_1d: Array2<f64>,
}

fn se_covariance(pts: &[(f64, f64)], lambda: f64) -> Array2<f64> {
    let n = pts.len();
    let mut c = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let dx = pts[i].0 - pts[j].0;
            let dy = pts[i].1 - pts[j].1;
            c[[i, j]] = (-(dx * dx + dy * dy) / (2.0 * lambda * lambda)).exp();
        }
    }
    c
}

fn cholesky_with_jitter(c: &Array2<f64>) -> Result<Array2<f64>> {
    match cholesky(c) {
        Ok(l) => Ok(l),
        Err(_) => {
            let mut cj = c.clone();
            for i in 0..cj.nrows() {
                cj[[i, i]] += 1e-10;
            }
            cholesky(&cj)
        }
    }
}

impl GrfSampler {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::Config(format!("GRF length scale {lambda} must be positive")));
        }
        let xs: Vec<f64> = (0..GRF_AUX)
            .map(|i| i as f64 / (GRF_AUX - 1) as f64)
            .collect();
        // 2D lattice flattened with x fastest, matching reshape(aux, aux)[y][x]
        let mut pts = Vec::with_capacity(GRF_AUX * GRF_AUX);
        for &y in &xs {
            for &x in &xs {
                pts.push((x, y));
            }
        }
        let chol_2d = cholesky_with_jitter(&se_covariance(&pts, lambda))?;
        let pts1: Vec<(f64, f64)> = xs.iter().map(|&x| (x, 0.0)).collect();
        let chol_1d = cholesky_with_jitter(&se_covariance(&pts1, lambda))?;
        Ok(GrfSampler { lambda, chol_2d, chol_1d })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn correlated(&self, chol: &Array2<f64>, rng: &mut ChaCha12Rng) -> Vec<f64> {
        let n = chol.nrows();
        let xi: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += chol[[i, j]] * xi[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Zero-mean field on the grid barycentres via bilinear interpolation
    /// from the auxiliary lattice.
    pub fn sample(&self, grid: Grid, rng: &mut ChaCha12Rng) -> Field<f64> {
        let aux = GRF_AUX;
        let z = self.correlated(&self.chol_2d, rng);
        let at = |ix: usize, iy: usize| z[iy * aux + ix];
        let mut vals = vec![0.0; grid.n()];
        let coord = |i: usize| {
            let t = grid.x(i) * (aux - 1) as f64;
            let i0 = (t as usize).min(aux - 2);
            (i0, t - i0 as f64)
        };
        for j in 0..grid.ny() {
            let (j0, fy) = coord(j);
            for i in 0..grid.nx() {
                let (i0, fx) = coord(i);
                let v = at(i0, j0) * (1.0 - fx) * (1.0 - fy)
                    + at(i0 + 1, j0) * fx * (1.0 - fy)
                    + at(i0, j0 + 1) * (1.0 - fx) * fy
                    + at(i0 + 1, j0 + 1) * fx * fy;
                vals[grid.idx(i, j)] = v;
            }
        }
        Field::new(grid, vals).expect("interpolated field is grid-sized")
    }

    /// 1D field along an edge, at the nx face midpoints.
    pub fn sample_edge(&self, nx: usize, rng: &mut ChaCha12Rng) -> Vec<f64> {
        let aux = GRF_AUX;
        let z = self.correlated(&self.chol_1d, rng);
        (0..nx)
            .map(|i| {
                let t = (i as f64 + 0.5) / nx as f64 * (aux - 1) as f64;
                let i0 = (t as usize).min(aux - 2);
                let fx = t - i0 as f64;
                z[i0] * (1.0 - fx) + z[i0 + 1] * fx
            })
            .collect()
    }
}

/// One-shot GRF draw (tests and small tools); heavier callers should reuse a
/// [`GrfSampler`].
pub fn sample_grf(grid: Grid, lambda: f64, seed: u64) -> Result<Field<f64>> {
    let sampler = GrfSampler::new(lambda)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    Ok(sampler.sample(grid, &mut rng))
}

/// Draw a source field per the dataset distribution.
pub fn sample_source(
    dist: SourceDistribution,
    cb: &CoarseBasis,
    grid: Grid,
    grf: &GrfSampler,
    rng: &mut ChaCha12Rng,
) -> Field<f64> {
    match dist {
        SourceDistribution::Grf { .. } => grf.sample(grid, rng),
        SourceDistribution::SplineIid => {
            let c: Vec<f64> = (0..cb.m()).map(|_| rng.sample(StandardNormal)).collect();
            Field::new(grid, cb.prolong(&c)).expect("prolonged field is grid-sized")
        }
        SourceDistribution::SplineInvGram => {
            let xi: Vec<f64> = (0..cb.m()).map(|_| rng.sample(StandardNormal)).collect();
            let c = cb.gram_solve(&xi);
            Field::new(grid, cb.prolong(&c)).expect("prolonged field is grid-sized")
        }
    }
}

/// Péclet sampling range (log-uniform).
#[derive(Debug, Clone, Copy)]
pub struct PecletRange {
    pub lo: f64,
    pub hi: f64,
}

impl Default for PecletRange {
    fn default() -> Self {
        PecletRange { lo: 1.0, hi: 50.0 }
    }
}

impl PecletRange {
    /// The §4.2 out-of-range test regime.
    pub fn high() -> Self {
        PecletRange { lo: 50.0, hi: 400.0 }
    }
}

/// Wave-number sampling range for ⟨k⟩ (uniform).
#[derive(Debug, Clone, Copy)]
pub struct WaveNumberRange {
    pub lo: f64,
    pub hi: f64,
}

impl Default for WaveNumberRange {
    fn default() -> Self {
        WaveNumberRange { lo: 2.0, hi: 25.0 }
    }
}

/// Coefficient draw outcomes.
pub enum Coefficients {
    Diffusion { theta: Field<f64> },
    AdvectionDiffusion { theta: Field<f64>, c: [f64; 2], peclet: f64 },
    Helmholtz { k: Field<f64>, k_mean: f64 },
}

/// θ = exp(GRF) clipped to [0.05, 20]; |c| set by a log-uniform Péclet;
/// k = k₀(1 + 0.1·GRF) with uniform k₀.
pub fn sample_coefficients(
    tag: PdeTag,
    grid: Grid,
    grf: &GrfSampler,
    pe_range: PecletRange,
    k_range: WaveNumberRange,
    rng: &mut ChaCha12Rng,
) -> Coefficients {
    let sample_theta = |rng: &mut ChaCha12Rng| {
        let mut t = grf.sample(grid, rng);
        for v in t.vals.iter_mut() {
            *v = v.exp().clamp(0.05, 20.0);
        }
        t
    };
    match tag {
        PdeTag::Diffusion => Coefficients::Diffusion { theta: sample_theta(rng) },
        PdeTag::AdvectionDiffusion => {
            let theta = sample_theta(rng);
            let tbar = theta.vals.iter().sum::<f64>() / theta.vals.len() as f64;
            let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let pe = (rng.random_range(pe_range.lo.ln()..pe_range.hi.ln())).exp();
            let speed = pe * tbar;
            Coefficients::AdvectionDiffusion {
                theta,
                c: [speed * phi.cos(), speed * phi.sin()],
                peclet: pe,
            }
        }
        PdeTag::Helmholtz => {
            let k0: f64 = rng.random_range(k_range.lo..k_range.hi);
            let g = grf.sample(grid, rng);
            let vals: Vec<f64> = g.vals.iter().map(|v| (k0 * (1.0 + 0.1 * v)).max(0.0)).collect();
            Coefficients::Helmholtz {
                k: Field::new(grid, vals).expect("field is grid-sized"),
                k_mean: k0,
            }
        }
    }
}

/// One solved PDE instance. `coeff` is θ (diffusion families) or k
/// (Helmholtz); `meta` is the Péclet number or ⟨k⟩.
#[derive(Debug, Clone)]
pub struct Sample<T: Scalar> {
    pub coeff: Field<f64>,
    pub velocity: [f64; 2],
    pub f: Field<T>,
    pub g_left: Vec<T>,
    pub g_right: Vec<T>,
    pub eta_bottom: Vec<T>,
    pub eta_top: Vec<T>,
    pub u: Vec<T>,
    pub meta: f64,
}

#[derive(Debug, Clone)]
pub struct Dataset<T: Scalar> {
    pub tag: PdeTag,
    pub grid: Grid,
    pub m1d: usize,
    pub source: SourceDistribution,
    pub seed: u64,
    pub samples: Vec<Sample<T>>,
    pub excluded: usize,
}

impl<T: Scalar> Dataset<T> {
    /// 80/10/10 split boundaries (train, validation, test index ranges).
    pub fn split(&self) -> (std::ops::Range<usize>, std::ops::Range<usize>, std::ops::Range<usize>) {
        let n = self.samples.len();
        let n_train = n * 8 / 10;
        let n_val = n / 10;
        (0..n_train, n_train..n_train + n_val, n_train + n_val..n)
    }
}

#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub tag: PdeTag,
    pub source: SourceDistribution,
    pub count: usize,
    pub seed: u64,
    pub lambda: f64,
    pub boundary_amplitude: f64,
    pub pe_range: PecletRange,
    pub k_range: WaveNumberRange,
}

impl DatasetSpec {
    pub fn new(tag: PdeTag, source: SourceDistribution, count: usize, seed: u64) -> Self {
        DatasetSpec {
            tag,
            source,
            count,
            seed,
            lambda: 0.2,
            boundary_amplitude: 1.0,
            pe_range: PecletRange::default(),
            k_range: WaveNumberRange::default(),
        }
    }
}

fn per_sample_rng(master: u64, index: usize) -> ChaCha12Rng {
    // splitmix-style spreading keeps per-sample streams independent
    ChaCha12Rng::seed_from_u64(master ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Assembled system plus right-hand side for a real sample.
pub fn assemble_real_sample(s: &Sample<f64>, tag: PdeTag, grid: Grid) -> Result<DiscreteSystem<f64>> {
    let base = DiffusionProblem {
        theta: s.coeff.clone(),
        f: s.f.clone(),
        g_left: s.g_left.clone(),
        g_right: s.g_right.clone(),
        eta_bottom: s.eta_bottom.clone(),
        eta_top: s.eta_top.clone(),
    };
    match tag {
        PdeTag::Diffusion => assemble_diffusion(&base, grid),
        PdeTag::AdvectionDiffusion => {
            assemble_advection_diffusion(&AdvectionDiffusionProblem { base, c: s.velocity }, grid)
        }
        PdeTag::Helmholtz => Err(Error::Config("helmholtz sample is complex".into())),
    }
}

pub fn assemble_complex_sample(s: &Sample<Complex64>, grid: Grid) -> Result<DiscreteSystem<Complex64>> {
    let p = HelmholtzProblem {
        k: s.coeff.clone(),
        f: s.f.clone(),
        g_left: s.g_left.clone(),
        g_right: s.g_right.clone(),
        eta_bottom: s.eta_bottom.clone(),
        eta_top: s.eta_top.clone(),
    };
    assemble_helmholtz(&p, grid)
}

/// Generate a real-valued dataset (diffusion or advection–diffusion): draw
/// fields, assemble, and solve each instance with the exact two-level
/// A-DEF1 preconditioner to relative residual 1e-10.
pub fn generate_dataset_real(
    spec: &DatasetSpec,
    grid: Grid,
    cb: &CoarseBasis,
) -> Result<Dataset<f64>> {
    if spec.tag == PdeTag::Helmholtz {
        return Err(Error::Config("use generate_dataset_complex for helmholtz".into()));
    }
    let grf = GrfSampler::new(spec.lambda)?;
    let mut samples = Vec::with_capacity(spec.count);
    let mut excluded = 0usize;
    let cfg = SolveConfig {
        tolerance: 1e-10,
        max_iterations: 5000,
        restart: 20,
    };
    for idx in 0..spec.count {
        let mut rng = per_sample_rng(spec.seed, idx);
        let coeffs = sample_coefficients(
            spec.tag,
            grid,
            &grf,
            spec.pe_range,
            spec.k_range,
            &mut rng,
        );
        let (theta, velocity, meta) = match coeffs {
            Coefficients::Diffusion { theta } => (theta, [0.0, 0.0], 0.0),
            Coefficients::AdvectionDiffusion { theta, c, peclet } => (theta, c, peclet),
            Coefficients::Helmholtz { .. } => unreachable!(),
        };
        let f = sample_source(spec.source, cb, grid, &grf, &mut rng);
        let amp = spec.boundary_amplitude;
        let edge = |rng: &mut ChaCha12Rng, gs: &GrfSampler| -> Vec<f64> {
            gs.sample_edge(grid.nx(), rng).iter().map(|v| amp * v).collect()
        };
        let mut s = Sample {
            coeff: theta,
            velocity,
            f,
            g_left: edge(&mut rng, &grf),
            g_right: edge(&mut rng, &grf),
            eta_bottom: edge(&mut rng, &grf),
            eta_top: edge(&mut rng, &grf),
            u: Vec::new(),
            meta,
        };
        let sys = assemble_real_sample(&s, spec.tag, grid)?;
        let a = Arc::new(sys.a.clone());
        let smoother: crate::twolevel::DynPrecond<f64> = match spec.tag {
            PdeTag::Diffusion => Arc::new(build_greens_smoother_with(
                grid,
                &s.coeff,
                diffusion_smoother_config(grid.nx()),
            )?),
            _ => Arc::new(build_four_direction_gs(grid, a.clone())?),
        };
        let coarse = Arc::new(ExactCoarseCorrection::build(&a, cb)?);
        let pre = Combined::new(CombinationForm::Adef1, smoother, coarse, a);
        let mut outcome = fgmres(&sys.a, &sys.b, &pre, cfg);
        if !outcome.converged {
            // tightened restart, one retry
            let mut cfg2 = cfg;
            cfg2.restart = 60;
            outcome = fgmres(&sys.a, &sys.b, &pre, cfg2);
        }
        if !outcome.converged {
            excluded += 1;
            continue;
        }
        s.u = outcome.x;
        samples.push(s);
    }
    if excluded * 100 > spec.count {
        return Err(Error::Config(format!(
            "dataset exclusion rate too high: {excluded}/{}",
            spec.count
        )));
    }
    Ok(Dataset {
        tag: spec.tag,
        grid,
        m1d: cb.m1d(),
        source: spec.source,
        seed: spec.seed,
        samples,
        excluded,
    })
}

/// Generate the complex Helmholtz dataset; sources and boundary data get
/// independent real and imaginary draws.
pub fn generate_dataset_complex(
    spec: &DatasetSpec,
    grid: Grid,
    cb: &CoarseBasis,
) -> Result<Dataset<Complex64>> {
    if spec.tag != PdeTag::Helmholtz {
        return Err(Error::Config("complex datasets are helmholtz-only".into()));
    }
    let grf = GrfSampler::new(spec.lambda)?;
    let mut samples = Vec::with_capacity(spec.count);
    let mut excluded = 0usize;
    let cfg = SolveConfig {
        tolerance: 1e-10,
        max_iterations: 5000,
        restart: 20,
    };
    let ones = Field::constant(grid, 1.0);
    let smoother = Arc::new(build_greens_smoother_with(
        grid,
        &ones,
        helmholtz_smoother_config(),
    )?);
    for idx in 0..spec.count {
        let mut rng = per_sample_rng(spec.seed, idx);
        let (k, k_mean) = match sample_coefficients(
            spec.tag,
            grid,
            &grf,
            spec.pe_range,
            spec.k_range,
            &mut rng,
        ) {
            Coefficients::Helmholtz { k, k_mean } => (k, k_mean),
            _ => unreachable!(),
        };
        let fre = sample_source(spec.source, cb, grid, &grf, &mut rng);
        let fim = sample_source(spec.source, cb, grid, &grf, &mut rng);
        let f = Field::new(
            grid,
            fre.vals
                .iter()
                .zip(&fim.vals)
                .map(|(a, b)| Complex64::new(*a, *b))
                .collect(),
        )?;
        let amp = spec.boundary_amplitude;
        let cedge = |rng: &mut ChaCha12Rng| -> Vec<Complex64> {
            let re = grf.sample_edge(grid.nx(), rng);
            let im = grf.sample_edge(grid.nx(), rng);
            re.iter()
                .zip(&im)
                .map(|(a, b)| Complex64::new(amp * a, amp * b))
                .collect()
        };
        let mut s = Sample {
            coeff: k,
            velocity: [0.0, 0.0],
            f,
            g_left: cedge(&mut rng),
            g_right: cedge(&mut rng),
            eta_bottom: cedge(&mut rng),
            eta_top: cedge(&mut rng),
            u: Vec::new(),
            meta: k_mean,
        };
        let sys = assemble_complex_sample(&s, grid)?;
        let a = Arc::new(sys.a.clone());
        let coarse = Arc::new(ExactCoarseCorrection::build(&a, cb)?);
        let pre = Combined::new(CombinationForm::Adef1, smoother.clone(), coarse, a);
        let mut outcome = fgmres(&sys.a, &sys.b, &pre, cfg);
        if !outcome.converged {
            let mut cfg2 = cfg;
            cfg2.restart = 60;
            outcome = fgmres(&sys.a, &sys.b, &pre, cfg2);
        }
        if !outcome.converged {
            excluded += 1;
            continue;
        }
        s.u = outcome.x;
        samples.push(s);
    }
    if excluded * 100 > spec.count {
        return Err(Error::Config(format!(
            "dataset exclusion rate too high: {excluded}/{}",
            spec.count
        )));
    }
    Ok(Dataset {
        tag: spec.tag,
        grid,
        m1d: cb.m1d(),
        source: spec.source,
        seed: spec.seed,
        samples,
        excluded,
    })
}

// ---------------------------------------------------------------------------
// binary serialization

const MAGIC: &[u8; 8] = b"NOCSDS1\0";

fn write_vec<T: Scalar, W: Write>(w: &mut W, v: &[T]) -> Result<()> {
    w.write_u32::<LittleEndian>(v.len() as u32)?;
    for x in v {
        w.write_f64::<LittleEndian>(x.re())?;
        if T::IS_COMPLEX {
            w.write_f64::<LittleEndian>(x.im())?;
        }
    }
    Ok(())
}

fn read_vec<T: Scalar, R: Read>(r: &mut R) -> Result<Vec<T>> {
    let len = r.read_u32::<LittleEndian>()? as usize;
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let re = r.read_f64::<LittleEndian>()?;
        let im = if T::IS_COMPLEX {
            r.read_f64::<LittleEndian>()?
        } else {
            0.0
        };
        out.push(T::from_parts(re, im));
    }
    Ok(out)
}

pub fn write_dataset<T: Scalar>(ds: &Dataset<T>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_u8(ds.tag.code())?;
    w.write_u8(if T::IS_COMPLEX { 1 } else { 0 })?;
    w.write_u8(ds.source.code())?;
    w.write_u32::<LittleEndian>(ds.grid.nx() as u32)?;
    w.write_u32::<LittleEndian>(ds.m1d as u32)?;
    w.write_u64::<LittleEndian>(ds.seed)?;
    w.write_u32::<LittleEndian>(ds.samples.len() as u32)?;
    w.write_u32::<LittleEndian>(ds.excluded as u32)?;
    for s in &ds.samples {
        write_vec(&mut w, &s.coeff.vals)?;
        w.write_f64::<LittleEndian>(s.velocity[0])?;
        w.write_f64::<LittleEndian>(s.velocity[1])?;
        write_vec(&mut w, &s.f.vals)?;
        write_vec(&mut w, &s.g_left)?;
        write_vec(&mut w, &s.g_right)?;
        write_vec(&mut w, &s.eta_bottom)?;
        write_vec(&mut w, &s.eta_top)?;
        write_vec(&mut w, &s.u)?;
        w.write_f64::<LittleEndian>(s.meta)?;
    }
    Ok(())
}

pub fn read_dataset<T: Scalar>(path: &Path) -> Result<Dataset<T>> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a dataset file".into()));
    }
    let tag = PdeTag::from_code(r.read_u8()?)?;
    let complex = r.read_u8()? == 1;
    if complex != T::IS_COMPLEX {
        return Err(Error::Format("dataset scalar kind mismatch".into()));
    }
    let source_code = r.read_u8()?;
    let source = match source_code {
        0 => SourceDistribution::Grf { lambda: 0.2 },
        1 => SourceDistribution::SplineIid,
        2 => SourceDistribution::SplineInvGram,
        c => return Err(Error::Format(format!("unknown source code {c}"))),
    };
    let nx = r.read_u32::<LittleEndian>()? as usize;
    let m1d = r.read_u32::<LittleEndian>()? as usize;
    let seed = r.read_u64::<LittleEndian>()?;
    let count = r.read_u32::<LittleEndian>()? as usize;
    let excluded = r.read_u32::<LittleEndian>()? as usize;
    let grid = Grid::new(nx)?;
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let coeff_vals: Vec<f64> = read_vec(&mut r)?;
        let velocity = [r.read_f64::<LittleEndian>()?, r.read_f64::<LittleEndian>()?];
        let f_vals: Vec<T> = read_vec(&mut r)?;
        let g_left = read_vec(&mut r)?;
        let g_right = read_vec(&mut r)?;
        let eta_bottom = read_vec(&mut r)?;
        let eta_top = read_vec(&mut r)?;
        let u = read_vec(&mut r)?;
        let meta = r.read_f64::<LittleEndian>()?;
        samples.push(Sample {
            coeff: Field::new(grid, coeff_vals)?,
            velocity,
            f: Field::new(grid, f_vals)?,
            g_left,
            g_right,
            eta_bottom,
            eta_top,
            u,
            meta,
        });
    }
    Ok(Dataset {
        tag,
        grid,
        m1d,
        source,
        seed,
        samples,
        excluded,
    })
}

/// CSV manifest for quick inspection of a dataset.
pub fn write_manifest<T: Scalar>(ds: &Dataset<T>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "index,meta,f_norm,u_norm")?;
    for (i, s) in ds.samples.iter().enumerate() {
        writeln!(w, "{i},{},{:.6e},{:.6e}", s.meta, norm2(&s.f.vals), norm2(&s.u))?;
    }
    Ok(())
}
