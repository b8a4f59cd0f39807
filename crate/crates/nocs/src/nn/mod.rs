//! Neural coarse-space operators: shared MLP/Adam machinery, the four
//! architectures (DeepONet, RINO, VarMiON, NGO), training against the
//! relative L² solution error, and adaptation into [`Preconditioner`]
//! instances.
//!
//! [`Preconditioner`]: crate::twolevel::Preconditioner

mod arch;
mod mlp;
mod train;

pub use arch::{
    as_coarse_correction, as_coarse_correction_complex, model_forward, model_matrix,
    model_matrix_complex, ngo_symmetric_correction, read_model, write_model, ArchTag,
    CoeffVector, ModelConfig, ModelContext, NeuralModel, NgoSymmetricCorrection, ProblemInputs,
};
pub use mlp::{mlp_forward, mlp_gradient, AdamState, Gradients, Layer, Mlp};
pub use train::{train, train_complex, LossCurve, TrainedModel, TrainingConfig};
