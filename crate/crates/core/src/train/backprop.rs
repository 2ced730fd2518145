use super::loss::{loss_and_output_grad, LossKind};
use crate::data::PaddedBatch;
use crate::nn::{backward_sequence, forward_sequence, Mode, ModelParams};
use crate::{Error, Result};

/// Masked batch loss and its exact gradient with respect to every
/// parameter (flat layout of [`ModelParams::flatten`]).
///
/// Each sequence is run forward, differentiated and accumulated before the
/// next one starts, always in batch order, so the sum is reproducible.
/// Dropout masks come from `mode`; the same mode replays the same masks.
pub fn backward(params: &ModelParams, batch: &PaddedBatch, loss: LossKind, mode: Mode) -> Result<(f64, Vec<f64>)> {
    if batch.width != params.spec.input_width {
        return Err(Error::shape(format!(
            "batch feature width {} does not match model input width {}",
            batch.width, params.spec.input_width
        )));
    }
    if params.spec.output_width() != 1 {
        return Err(Error::shape("sequence regression needs a model with output width 1"));
    }
    let valid_total = batch.valid_count();
    if valid_total == 0 || batch.lengths.contains(&0) {
        return Err(Error::invalid("every sequence needs at least one valid step"));
    }
    let mut grads = ModelParams::zeros(&params.spec)?;
    let mut total = 0.0;
    for s in 0..batch.num_seq {
        let view = batch.sequence(s);
        let trace = forward_sequence(params, view.features, view.mask, mode, s)?;
        let (value, d_out) =
            loss_and_output_grad(loss, &trace.output, view.targets, view.mask, valid_total, batch.num_seq);
        total += value;
        backward_sequence(params, &trace, &d_out, &mut grads)?;
    }
    if !total.is_finite() {
        return Err(Error::NonFinite(format!("{loss} loss")));
    }
    Ok((total, grads.flatten()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::CellKind;
    use crate::nn::{build_model, model_forward};
    use crate::train::gradcheck::{reduced_batch, reduced_model};

    #[test]
    fn zero_gradient_at_a_perfect_fit() {
        let params = build_model(&reduced_model(CellKind::Lstm), 4).unwrap();
        let mut batch = reduced_batch(5);
        let pred = model_forward(&params, &batch, Mode::Eval).unwrap();
        for (t, m) in batch.mask.clone().iter().enumerate() {
            if *m {
                batch.targets[t] = pred[t];
            }
        }
        let (loss, grad) = backward(&params, &batch, LossKind::Mse, Mode::Eval).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn mirrored_residuals_negate_the_mse_gradient() {
        let params = build_model(&reduced_model(CellKind::Gru), 4).unwrap();
        let batch = reduced_batch(6);
        let pred = model_forward(&params, &batch, Mode::Eval).unwrap();
        let mut mirrored = batch.clone();
        for (t, &m) in batch.mask.iter().enumerate() {
            if m {
                mirrored.targets[t] = 2.0 * pred[t] - batch.targets[t];
            }
        }
        let (_, g1) = backward(&params, &batch, LossKind::Mse, Mode::Eval).unwrap();
        let (_, g2) = backward(&params, &mirrored, LossKind::Mse, Mode::Eval).unwrap();
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a + b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn gradient_length_matches_param_count() {
        let params = build_model(&reduced_model(CellKind::Lstm), 1).unwrap();
        let (_, g) = backward(&params, &reduced_batch(1), LossKind::Euclidean, Mode::Train { seed: 3 }).unwrap();
        assert_eq!(g.len(), params.num_params());
    }
}
