//! Masked losses, backpropagation through time, the finite-difference
//! gradient oracle, Adam and the training loop.

mod adam;
mod backprop;
mod gradcheck;
mod loss;
mod trainer;

pub use adam::{adam_step, clip_global_norm, AdamConfig, AdamState};
pub use backprop::backward;
pub use gradcheck::{
    finite_diff_grad, max_relative_error, reduced_batch, reduced_model, run_gradcheck, GradCheckCase, GradCheckReport,
};
pub use loss::{loss_and_output_grad, masked_euclidean, masked_mse, sequence_distances, LossKind};
pub use trainer::{
    evaluate, predict_records, prepare_splits, train, train_from, EpochRecord, Metrics, PreparedSplits, RunHistory,
    TrainConfig,
};
