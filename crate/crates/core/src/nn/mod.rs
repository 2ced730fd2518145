//! Dense-array math and recurrent layers.
//!
//! All arrays are row-major `f64`. A sequence of `T` steps with width `d`
//! is a `[T × d]` slice. Recurrent weight matrices act on the
//! concatenation `[h_prev, x_t]`, hidden state first.

mod activation;
mod checkpoint;
mod dense;
mod dropout;
mod gru;
mod init;
mod lstm;
mod model;

pub use activation::{activation, Activation, DenseArray};
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use dense::{dense_backward, dense_forward, DenseParams, DenseTrace};
pub use dropout::{dropout_backward, dropout_forward, DropoutMode};
pub use gru::{gru_backward, gru_cell_step, gru_forward, GruParams, GruTrace};
pub use init::build_model;
pub use lstm::{lstm_backward, lstm_cell_step, lstm_forward, LstmParams, LstmTrace};
pub use model::{
    backward_sequence, count_params, forward_sequence, model_forward, CellKind, LayerParams, LayerSpec, LayerTrace,
    Mode, ModelParams, ModelSpec, RecurrentSpec, SequenceTrace,
};

/// `y += W x` for `W` of shape `[rows × x.len()]`.
#[inline]
pub(crate) fn matvec_acc(w: &[f64], x: &[f64], y: &mut [f64]) {
    let cols = x.len();
    for (row, out) in w.chunks_exact(cols).zip(y.iter_mut()) {
        *out += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `x += Wᵀ y` for `W` of shape `[y.len() × x.len()]`.
#[inline]
pub(crate) fn matvec_t_acc(w: &[f64], y: &[f64], x: &mut [f64]) {
    let cols = x.len();
    for (row, &dy) in w.chunks_exact(cols).zip(y) {
        if dy != 0.0 {
            for (xi, wi) in x.iter_mut().zip(row) {
                *xi += wi * dy;
            }
        }
    }
}

/// `W += y xᵀ`.
#[inline]
pub(crate) fn outer_acc(w: &mut [f64], y: &[f64], x: &[f64]) {
    let cols = x.len();
    for (row, &dy) in w.chunks_exact_mut(cols).zip(y) {
        if dy != 0.0 {
            for (wi, xi) in row.iter_mut().zip(x) {
                *wi += dy * xi;
            }
        }
    }
}

pub(crate) fn check_len(what: &str, got: usize, want: usize) -> crate::Result<()> {
    if got != want {
        return Err(crate::Error::shape(format!(
            "{what}: expected {want} values, got {got}"
        )));
    }
    Ok(())
}
