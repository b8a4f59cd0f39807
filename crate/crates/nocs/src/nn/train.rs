//! Training: Adam on the relative L² loss between the reconstructed coarse
//! field Z·c and the reference fine-grid solution.
//!
//! The loss needs no fine-grid reconstruction: with K = h²ZᵀZ and
//! t = ZᵀWu the squared weighted error is ‖Zc − u‖²_W = cᵀKc − 2cᵀt + ‖u‖²_W,
//! so each term costs O(m²) instead of O(nm).

use std::ops::Range;

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::data::{assemble_complex_sample, assemble_real_sample, Dataset, PdeTag};
use crate::error::{Error, Result};
use crate::grid::{Field, MirrorAxis};
use crate::linalg::DenseLu;
use crate::nn::arch::{
    assemble_input_parts, raw_inputs_complex, raw_inputs_real, ArchTag, ModelConfig,
    ModelContext, NeuralModel, RawInputs,
};
use crate::nn::mlp::{mlp_gradient, AdamState, Mlp};
use crate::pde::{
    assemble_advection_diffusion, assemble_diffusion, assemble_helmholtz,
    AdvectionDiffusionProblem, DiffusionProblem, HelmholtzProblem,
};
use crate::twolevel::coarse_matrix;

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub width: usize,
    pub depth: usize,
    pub seed: u64,
    /// Augment each batch with one of the four mirror reflections.
    pub mirror_augment: bool,
    /// Cosine-anneal the learning rate to zero over the run.
    pub cosine_decay: bool,
    /// Validation cadence in epochs (the final epoch always validates).
    pub validate_every: usize,
    /// Train/validation/test fractions; must sum to one.
    pub split: [f64; 3],
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            epochs: 2000,
            batch_size: 100,
            learning_rate: 1e-3,
            width: 128,
            depth: 3,
            seed: 1,
            mirror_augment: true,
            cosine_decay: true,
            validate_every: 200,
            split: [0.8, 0.1, 0.1],
        }
    }
}

impl TrainingConfig {
    pub fn with_seed(seed: u64) -> Self {
        TrainingConfig { seed, ..TrainingConfig::default() }
    }

    fn validate(&self, n_samples: usize) -> Result<(Range<usize>, Range<usize>)> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch size must be positive".into()));
        }
        if self.validate_every == 0 {
            return Err(Error::Config("validation cadence must be positive".into()));
        }
        let sum: f64 = self.split.iter().sum();
        if self.split.iter().any(|&s| s < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split fractions {:?} must be nonnegative and sum to 1",
                self.split
            )));
        }
        let n_train = (n_samples as f64 * self.split[0]).floor() as usize;
        let n_val = (n_samples as f64 * self.split[1]).floor() as usize;
        if n_train == 0 || n_val == 0 {
            return Err(Error::Config(format!(
                "dataset of {n_samples} samples leaves an empty train or validation split"
            )));
        }
        Ok((0..n_train, n_train..n_train + n_val))
    }
}

fn fnv_mix(h: &mut u64, bytes: &[u8]) {
    for &b in bytes {
        *h ^= b as u64;
        *h = h.wrapping_mul(0x100_0000_01b3);
    }
}

/// Digest identifying a training run: architecture, dataset identity, and
/// every hyperparameter. Stored in checkpoints and usable as a cache key.
pub fn training_digest(
    arch: ArchTag,
    pde: PdeTag,
    nx: usize,
    m1d: usize,
    dataset_seed: u64,
    dataset_count: usize,
    cfg: &TrainingConfig,
) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    fnv_mix(&mut h, arch.label().as_bytes());
    fnv_mix(&mut h, pde.label().as_bytes());
    for v in [
        nx as u64,
        m1d as u64,
        dataset_seed,
        dataset_count as u64,
        cfg.epochs as u64,
        cfg.batch_size as u64,
        cfg.learning_rate.to_bits(),
        cfg.width as u64,
        cfg.depth as u64,
        cfg.seed,
        cfg.mirror_augment as u64,
        cfg.cosine_decay as u64,
        cfg.validate_every as u64,
        cfg.split[0].to_bits(),
        cfg.split[1].to_bits(),
        cfg.split[2].to_bits(),
    ] {
        fnv_mix(&mut h, &v.to_le_bytes());
    }
    h
}

/// Train and validation losses recorded at each validation point.
#[derive(Debug, Clone, Default)]
pub struct LossCurve {
    pub epochs: Vec<usize>,
    pub train: Vec<f64>,
    pub val: Vec<f64>,
}

/// Result of a training run; `model` holds the best-validation snapshot.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: NeuralModel,
    pub best_val: f64,
    pub final_val: f64,
    pub curve: LossCurve,
}

/// Input channels, projection targets, and norm of one dataset sample.
struct PreparedSample {
    raw: RawInputs,
    /// ZᵀWu, stacked [re, im] for complex samples.
    tq: Vec<f64>,
    /// ‖u‖²_W.
    un2: f64,
}

/// Everything the batch loop needs besides the network itself.
struct Trainer {
    mc: ModelConfig,
    /// K = h²ZᵀZ.
    k: Array2<f64>,
    perms: [Vec<usize>; 4],
    mean: Vec<f64>,
    std: Vec<f64>,
    samples: Vec<PreparedSample>,
}

impl Trainer {
    fn new(mc: ModelConfig, ctx: &ModelContext, samples: Vec<PreparedSample>) -> Trainer {
        let h = ctx.cb.grid().h();
        let zd = ctx.cb.z_dense();
        let k = zd.t().dot(zd) * (h * h);
        Trainer {
            mc,
            k,
            perms: ctx.perms.clone(),
            mean: Vec::new(),
            std: Vec::new(),
            samples,
        }
    }

    /// Per-slot mean and standard deviation of the identity-reflection raw
    /// inputs over the training split (σ floored at 1e-8).
    fn fit_stats(&mut self, train: Range<usize>) {
        if !self.mc.standardize_inputs {
            return;
        }
        let din = self.mc.input_dim();
        let n = train.len() as f64;
        let mut mean = vec![0.0; din];
        let mut second = vec![0.0; din];
        for i in train {
            let row = assemble_input_parts(
                &self.mc,
                &[],
                &[],
                &self.samples[i].raw,
                &self.perms[0],
                MirrorAxis::None,
            );
            for (s, &v) in mean.iter_mut().zip(row.iter()) {
                *s += v;
            }
            for (s, &v) in second.iter_mut().zip(row.iter()) {
                *s += v * v;
            }
        }
        for v in mean.iter_mut() {
            *v /= n;
        }
        let std: Vec<f64> = second
            .iter()
            .zip(mean.iter())
            .map(|(&s2, &mu)| (s2 / n - mu * mu).max(0.0).sqrt().max(1e-8))
            .collect();
        self.mean = mean;
        self.std = std;
    }

    fn batch_x(&self, idxs: &[usize], axis_idx: usize) -> Array2<f64> {
        let din = self.mc.input_dim();
        let mut x = Array2::zeros((idxs.len(), din));
        let axis = MirrorAxis::ALL[axis_idx];
        for (r, &si) in idxs.iter().enumerate() {
            let row = assemble_input_parts(
                &self.mc,
                &self.mean,
                &self.std,
                &self.samples[si].raw,
                &self.perms[axis_idx],
                axis,
            );
            x.row_mut(r).assign(&Array1::from(row));
        }
        x
    }

    /// Relative error and its coefficient gradient (real part structure).
    fn rel_terms(&self, c: &Array1<f64>, tqp: &[f64], un2: f64) -> (f64, f64, Array1<f64>) {
        let kc = self.k.dot(c);
        let cross: f64 = c.iter().zip(tqp.iter()).map(|(a, b)| a * b).sum();
        let quad = c.dot(&kc);
        (quad - 2.0 * cross, un2, kc)
    }

    /// sqrt(total/un2) with a floor against cancellation; NaN propagates so
    /// divergence is detected rather than masked by the floor.
    fn rel_from(total: f64, un2: f64) -> f64 {
        if !total.is_finite() {
            return f64::NAN;
        }
        (total.max(1e-30) / un2).sqrt()
    }

    /// Network output block reshaped to m×m, symmetrized if configured.
    fn materialize(&self, yr: &ArrayView1<f64>, part: usize) -> Array2<f64> {
        let m = self.mc.m();
        let off = part * m * m;
        let mut c = Array2::zeros((m, m));
        for i in 0..m {
            for j in 0..m {
                c[[i, j]] = yr[off + i * m + j];
            }
        }
        if self.mc.symmetric_output {
            for i in 0..m {
                for j in 0..i {
                    let s = 0.5 * (c[[i, j]] + c[[j, i]]);
                    c[[i, j]] = s;
                    c[[j, i]] = s;
                }
            }
        }
        c
    }

    /// Write ∂L/∂U for one m×m output block, folding the symmetrization.
    fn write_matrix_grad(
        &self,
        dyr: &mut [f64],
        part: usize,
        dc: &Array1<f64>,
        q: &Array1<f64>,
        scale: f64,
    ) {
        let m = self.mc.m();
        let off = part * m * m;
        if self.mc.symmetric_output {
            for i in 0..m {
                for j in 0..m {
                    dyr[off + i * m + j] = 0.5 * scale * (dc[i] * q[j] + dc[j] * q[i]);
                }
            }
        } else {
            for i in 0..m {
                for j in 0..m {
                    dyr[off + i * m + j] = scale * dc[i] * q[j];
                }
            }
        }
    }

    /// Mean relative L² loss over a batch and its gradient with respect to
    /// the network outputs. Targets are compared in reflected coordinates,
    /// which is exact because K commutes with the mirror permutations.
    fn batch_loss_grad(
        &self,
        idxs: &[usize],
        axis_idx: usize,
        y: &Array2<f64>,
    ) -> (f64, usize, Array2<f64>) {
        let m = self.mc.m();
        let perm = &self.perms[axis_idx];
        let mut dy = Array2::<f64>::zeros(y.raw_dim());
        let mut sum = 0.0;
        let mut valid = 0usize;
        for (r, &si) in idxs.iter().enumerate() {
            let s = &self.samples[si];
            if s.un2 <= 0.0 {
                continue;
            }
            valid += 1;
            let yr = y.row(r);
            let scale = s.raw.scale;
            let mut dyr = vec![0.0; y.ncols()];
            if !self.mc.is_complex() {
                let tqp: Vec<f64> = perm.iter().map(|&j| s.tq[j]).collect();
                if self.mc.arch.is_matrix_valued() {
                    let q = Array1::from_iter(perm.iter().map(|&j| s.raw.source[0][j]));
                    let cmat = self.materialize(&yr, 0);
                    let c = cmat.dot(&q) * scale;
                    let (num, un2, kc) = self.rel_terms(&c, &tqp, s.un2);
                    let rel = Self::rel_from(num + un2, un2);
                    sum += rel;
                    let den = rel * un2;
                    let dc = Array1::from_iter(
                        kc.iter().zip(tqp.iter()).map(|(&a, &t)| (a - t) / den),
                    );
                    self.write_matrix_grad(&mut dyr, 0, &dc, &q, scale);
                } else {
                    let c = Array1::from_iter(yr.iter().take(m).map(|&v| v * scale));
                    let (num, un2, kc) = self.rel_terms(&c, &tqp, s.un2);
                    let rel = Self::rel_from(num + un2, un2);
                    sum += rel;
                    let den = rel * un2;
                    for a in 0..m {
                        dyr[a] = scale * (kc[a] - tqp[a]) / den;
                    }
                }
            } else {
                let tqr: Vec<f64> = perm.iter().map(|&j| s.tq[j]).collect();
                let tqi: Vec<f64> = perm.iter().map(|&j| s.tq[m + j]).collect();
                if self.mc.arch.is_matrix_valued() {
                    let qr = Array1::from_iter(perm.iter().map(|&j| s.raw.source[0][j]));
                    let qi = Array1::from_iter(perm.iter().map(|&j| s.raw.source[1][j]));
                    let cre = self.materialize(&yr, 0);
                    let cim = self.materialize(&yr, 1);
                    let c_re = (cre.dot(&qr) - cim.dot(&qi)) * scale;
                    let c_im = (cre.dot(&qi) + cim.dot(&qr)) * scale;
                    let (num_r, _, kcr) = self.rel_terms(&c_re, &tqr, s.un2);
                    let (num_i, _, kci) = self.rel_terms(&c_im, &tqi, s.un2);
                    let rel = Self::rel_from(num_r + num_i + s.un2, s.un2);
                    sum += rel;
                    let den = rel * s.un2;
                    let dcr = Array1::from_iter(
                        kcr.iter().zip(tqr.iter()).map(|(&a, &t)| (a - t) / den),
                    );
                    let dci = Array1::from_iter(
                        kci.iter().zip(tqi.iter()).map(|(&a, &t)| (a - t) / den),
                    );
                    // C_re gets contributions from both output parts:
                    // ∂c_re/∂C_re = q_re, ∂c_im/∂C_re = q_im (and with the
                    // sign flip for C_im)
                    let mut dre = Array1::zeros(m);
                    let mut dim_ = Array1::zeros(m);
                    for i in 0..m {
                        dre[i] = dcr[i];
                        dim_[i] = dci[i];
                    }
                    self.write_matrix_grad(&mut dyr, 0, &dre, &qr, scale);
                    let mut tmp = vec![0.0; y.ncols()];
                    self.write_matrix_grad(&mut tmp, 0, &dim_, &qi, scale);
                    for (a, b) in dyr.iter_mut().zip(tmp.iter()) {
                        *a += b;
                    }
                    tmp.iter_mut().for_each(|v| *v = 0.0);
                    self.write_matrix_grad(&mut tmp, 1, &dim_, &qr, scale);
                    for (a, b) in dyr.iter_mut().zip(tmp.iter()) {
                        *a += b;
                    }
                    tmp.iter_mut().for_each(|v| *v = 0.0);
                    self.write_matrix_grad(&mut tmp, 1, &dre, &qi, scale);
                    for (a, b) in dyr.iter_mut().zip(tmp.iter()) {
                        *a -= b;
                    }
                } else {
                    let c_re = Array1::from_iter(yr.iter().take(m).map(|&v| v * scale));
                    let c_im =
                        Array1::from_iter(yr.iter().skip(m).take(m).map(|&v| v * scale));
                    let (num_r, _, kcr) = self.rel_terms(&c_re, &tqr, s.un2);
                    let (num_i, _, kci) = self.rel_terms(&c_im, &tqi, s.un2);
                    let rel = Self::rel_from(num_r + num_i + s.un2, s.un2);
                    sum += rel;
                    let den = rel * s.un2;
                    for a in 0..m {
                        dyr[a] = scale * (kcr[a] - tqr[a]) / den;
                        dyr[m + a] = scale * (kci[a] - tqi[a]) / den;
                    }
                }
            }
            dy.row_mut(r).assign(&Array1::from(dyr));
        }
        let count = valid.max(1) as f64;
        dy /= count;
        (sum / count, valid, dy)
    }

    /// Mean validation loss with the identity reflection.
    fn eval_loss(&self, net: &Mlp, range: Range<usize>) -> f64 {
        let idxs: Vec<usize> = range.collect();
        let mut total = 0.0;
        let mut count = 0usize;
        for chunk in idxs.chunks(256) {
            let x = self.batch_x(chunk, 0);
            let y = net.forward(&x);
            let (mean, valid, _) = self.batch_loss_grad(chunk, 0, &y);
            total += mean * valid as f64;
            count += valid;
        }
        total / count.max(1) as f64
    }
}

fn prepare_real(
    mc: &ModelConfig,
    ctx: &ModelContext,
    dataset: &Dataset<f64>,
) -> Result<Vec<PreparedSample>> {
    let grid = dataset.grid;
    let h2 = grid.h() * grid.h();
    let mut out = Vec::with_capacity(dataset.samples.len());
    for s in &dataset.samples {
        let sys = assemble_real_sample(s, dataset.tag, grid)?;
        let vel = (dataset.tag == PdeTag::AdvectionDiffusion).then_some(s.velocity);
        let raw = raw_inputs_real(mc, ctx, &s.coeff.vals, vel, &sys.b);
        let tq = ctx.cb.restrict(&s.u);
        let un2 = h2 * s.u.iter().map(|v| v * v).sum::<f64>();
        out.push(PreparedSample { raw, tq, un2 });
    }
    Ok(out)
}

fn prepare_complex(
    mc: &ModelConfig,
    ctx: &ModelContext,
    dataset: &Dataset<Complex64>,
) -> Result<Vec<PreparedSample>> {
    let grid = dataset.grid;
    let h2 = grid.h() * grid.h();
    let m = mc.m();
    let mut out = Vec::with_capacity(dataset.samples.len());
    for s in &dataset.samples {
        let sys = assemble_complex_sample(s, grid)?;
        let raw = raw_inputs_complex(mc, ctx, &s.coeff.vals, &sys.b);
        let tqc = ctx.cb.restrict(&s.u);
        let mut tq = Vec::with_capacity(2 * m);
        tq.extend(tqc.iter().map(|c| c.re));
        tq.extend(tqc.iter().map(|c| c.im));
        let un2 = h2 * s.u.iter().map(|v| v.norm_sqr()).sum::<f64>();
        out.push(PreparedSample { raw, tq, un2 });
    }
    Ok(out)
}

/// NGO bias anchor: the mean of (h²E_t)⁻¹ over the training split, assembled
/// from the normalized coefficient, embedded into the full m×m index set.
/// Initializing the last-layer bias here (with down-scaled weights) starts
/// the optimization at the mean Galerkin inverse.
fn anchor_real(
    mc: &ModelConfig,
    ctx: &ModelContext,
    dataset: &Dataset<f64>,
    n_train: usize,
) -> Result<Vec<f64>> {
    let grid = dataset.grid;
    let m = mc.m();
    let kept = ctx.cb.trimmed_indices();
    let mt = kept.len();
    let mut acc = Array2::<f64>::zeros((mt, mt));
    let eye = Array2::<f64>::eye(mt);
    for s in &dataset.samples[..n_train] {
        let alpha = if mc.coeff_normalize {
            s.coeff.vals.iter().sum::<f64>() / s.coeff.vals.len() as f64
        } else {
            1.0
        };
        let theta_n = Field::new(grid, s.coeff.vals.iter().map(|t| t / alpha).collect())?;
        let base = DiffusionProblem::homogeneous(theta_n, Field::constant(grid, 0.0));
        let sys = match dataset.tag {
            PdeTag::Diffusion => assemble_diffusion(&base, grid)?,
            PdeTag::AdvectionDiffusion => assemble_advection_diffusion(
                &AdvectionDiffusionProblem {
                    base,
                    c: [s.velocity[0] / alpha, s.velocity[1] / alpha],
                },
                grid,
            )?,
            PdeTag::Helmholtz => unreachable!("real anchor on a complex family"),
        };
        let e = coarse_matrix(&sys.a, &ctx.cb);
        acc += &DenseLu::factor(&e)?.solve_block(&eye);
    }
    acc /= n_train as f64;
    let h2 = grid.h() * grid.h();
    let mut bias = vec![0.0; m * m];
    for (bi, &i) in kept.iter().enumerate() {
        for (bj, &j) in kept.iter().enumerate() {
            bias[i * m + j] = acc[[bi, bj]] / h2;
        }
    }
    Ok(bias)
}

fn anchor_complex(
    mc: &ModelConfig,
    ctx: &ModelContext,
    dataset: &Dataset<Complex64>,
    n_train: usize,
) -> Result<Vec<f64>> {
    let grid = dataset.grid;
    let m = mc.m();
    let kept = ctx.cb.trimmed_indices();
    let mt = kept.len();
    let mut acc = Array2::<Complex64>::zeros((mt, mt));
    let eye = Array2::<Complex64>::eye(mt);
    let ny = grid.ny();
    let nx = grid.nx();
    for s in &dataset.samples[..n_train] {
        let p = HelmholtzProblem {
            k: s.coeff.clone(),
            f: Field::constant(grid, Complex64::ZERO),
            g_left: vec![Complex64::ZERO; ny],
            g_right: vec![Complex64::ZERO; ny],
            eta_bottom: vec![Complex64::ZERO; nx],
            eta_top: vec![Complex64::ZERO; nx],
        };
        let sys = assemble_helmholtz(&p, grid)?;
        let e = coarse_matrix(&sys.a, &ctx.cb);
        acc += &DenseLu::factor(&e)?.solve_block(&eye);
    }
    acc /= Complex64::new(n_train as f64, 0.0);
    let h2 = grid.h() * grid.h();
    let mut bias = vec![0.0; 2 * m * m];
    for (bi, &i) in kept.iter().enumerate() {
        for (bj, &j) in kept.iter().enumerate() {
            bias[i * m + j] = acc[[bi, bj]].re / h2;
            bias[m * m + i * m + j] = acc[[bi, bj]].im / h2;
        }
    }
    Ok(bias)
}

fn run_training(
    mc: ModelConfig,
    ctx: &ModelContext,
    samples: Vec<PreparedSample>,
    anchor: Option<Vec<f64>>,
    tcfg: &TrainingConfig,
    digest: u64,
) -> Result<TrainedModel> {
    let (train_range, val_range) = tcfg.validate(samples.len())?;
    let mut trainer = Trainer::new(mc, ctx, samples);
    trainer.fit_stats(train_range.clone());

    let mut init_rng = ChaCha12Rng::seed_from_u64(tcfg.seed ^ 0x5DEE_CE66_D5DE_ECE6);
    let mut net = Mlp::new(&mc.layer_dims(), &mut init_rng)?;
    if let Some(bias) = anchor {
        let last = net.layers.last_mut().expect("at least one layer");
        last.b.assign(&Array1::from(bias));
        last.w *= 0.01;
    }

    let mut adam = AdamState::new(&net, tcfg.learning_rate);
    let mut rng = ChaCha12Rng::seed_from_u64(tcfg.seed);
    let mut curve = LossCurve::default();
    let mut best_val = f64::INFINITY;
    let mut best_net = net.clone();
    for ep in 0..tcfg.epochs {
        let lr_scale = if tcfg.cosine_decay {
            0.5 * (1.0 + (std::f64::consts::PI * ep as f64 / tcfg.epochs as f64).cos())
        } else {
            1.0
        };
        let mut order: Vec<usize> = train_range.clone().collect();
        order.shuffle(&mut rng);
        let mut ep_loss = 0.0;
        let mut n_batches = 0usize;
        for chunk in order.chunks(tcfg.batch_size) {
            let axis = if tcfg.mirror_augment { rng.random_range(0..4usize) } else { 0 };
            let x = trainer.batch_x(chunk, axis);
            let (loss, grads) = mlp_gradient(&net, &x, |y| {
                let (mean, _, dy) = trainer.batch_loss_grad(chunk, axis, y);
                (mean, dy)
            });
            if !loss.is_finite() {
                return Err(Error::Training(format!("loss diverged at epoch {ep}")));
            }
            adam.update(&mut net, &grads, lr_scale);
            ep_loss += loss;
            n_batches += 1;
        }
        if (ep + 1) % tcfg.validate_every == 0 || ep + 1 == tcfg.epochs {
            let val = trainer.eval_loss(&net, val_range.clone());
            if !val.is_finite() {
                return Err(Error::Training(format!(
                    "validation loss diverged at epoch {ep}"
                )));
            }
            curve.epochs.push(ep + 1);
            curve.train.push(ep_loss / n_batches.max(1) as f64);
            curve.val.push(val);
            if val < best_val {
                best_val = val;
                best_net = net.clone();
            }
        }
    }
    let final_val = *curve.val.last().expect("at least one validation point");
    let model = NeuralModel {
        config: mc,
        net: best_net,
        input_mean: trainer.mean,
        input_std: trainer.std,
        train_digest: digest,
    };
    model.validate()?;
    Ok(TrainedModel { model, best_val, final_val, curve })
}

/// Train an architecture on a real-valued dataset (diffusion or
/// advection-diffusion).
pub fn train(arch: ArchTag, dataset: &Dataset<f64>, cfg: &TrainingConfig) -> Result<TrainedModel> {
    if dataset.tag == PdeTag::Helmholtz {
        return Err(Error::Config("helmholtz datasets are complex: use train_complex".into()));
    }
    let mut mc = ModelConfig::new(arch, dataset.tag, dataset.m1d, dataset.grid.nx());
    mc.width = cfg.width;
    mc.depth = cfg.depth;
    let ctx = ModelContext::new(dataset.grid, dataset.m1d, mc.degree)?;
    let (train_range, _) = cfg.validate(dataset.samples.len())?;
    let samples = prepare_real(&mc, &ctx, dataset)?;
    let anchor = if arch == ArchTag::Ngo {
        Some(anchor_real(&mc, &ctx, dataset, train_range.end)?)
    } else {
        None
    };
    let digest = training_digest(
        arch,
        dataset.tag,
        dataset.grid.nx(),
        dataset.m1d,
        dataset.seed,
        dataset.samples.len(),
        cfg,
    );
    run_training(mc, &ctx, samples, anchor, cfg, digest)
}

/// Train an architecture on a Helmholtz dataset.
pub fn train_complex(
    arch: ArchTag,
    dataset: &Dataset<Complex64>,
    cfg: &TrainingConfig,
) -> Result<TrainedModel> {
    if dataset.tag != PdeTag::Helmholtz {
        return Err(Error::Config("complex training is for helmholtz datasets".into()));
    }
    let mut mc = ModelConfig::new(arch, dataset.tag, dataset.m1d, dataset.grid.nx());
    mc.width = cfg.width;
    mc.depth = cfg.depth;
    let ctx = ModelContext::new(dataset.grid, dataset.m1d, mc.degree)?;
    let (train_range, _) = cfg.validate(dataset.samples.len())?;
    let samples = prepare_complex(&mc, &ctx, dataset)?;
    let anchor = if arch == ArchTag::Ngo {
        Some(anchor_complex(&mc, &ctx, dataset, train_range.end)?)
    } else {
        None
    };
    let digest = training_digest(
        arch,
        dataset.tag,
        dataset.grid.nx(),
        dataset.m1d,
        dataset.seed,
        dataset.samples.len(),
        cfg,
    );
    run_training(mc, &ctx, samples, anchor, cfg, digest)
}
