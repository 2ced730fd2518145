use rand::Rng;

use super::check_len;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropoutMode {
    Train,
    Eval,
}

/// Inverted dropout. In training each unit survives with probability
/// `1 - rate` and is scaled by `1 / (1 - rate)`; evaluation is identity.
/// Returns the output and the kept mask for the backward pass.
pub fn dropout_forward(x: &[f64], rate: f64, mode: DropoutMode, rng: &mut impl Rng) -> Result<(Vec<f64>, Vec<bool>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::invalid(format!("dropout rate {rate} outside [0, 1)")));
    }
    if mode == DropoutMode::Eval || rate == 0.0 {
        return Ok((x.to_vec(), vec![true; x.len()]));
    }
    let scale = 1.0 / (1.0 - rate);
    let kept: Vec<bool> = x.iter().map(|_| rng.random::<f64>() >= rate).collect();
    let y = x
        .iter()
        .zip(&kept)
        .map(|(&v, &k)| if k { v * scale } else { 0.0 })
        .collect();
    Ok((y, kept))
}

pub fn dropout_backward(d_out: &[f64], kept: &[bool], rate: f64) -> Result<Vec<f64>> {
    check_len("dropout gradient", d_out.len(), kept.len())?;
    let scale = 1.0 / (1.0 - rate);
    Ok(d_out
        .iter()
        .zip(kept)
        .map(|(&d, &k)| if k { d * scale } else { 0.0 })
        .collect())
}
