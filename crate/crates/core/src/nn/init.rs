//! Parameter initialization: Glorot-uniform input kernels, orthogonal
//! recurrent kernels, zero biases except a unit LSTM forget-gate bias and
//! a small positive bias on relu dense layers.

use rand::Rng;
use rand_distr::StandardNormal;

use super::lstm::GATE_FORGET;
use super::model::{LayerParams, LayerSpec, ModelParams, ModelSpec};
use super::Activation;
use crate::rng::{rng_from, Rng as SeededRng};
use crate::Result;

/// A width-1 relu layer that starts below zero on every input never
/// recovers; a positive bias keeps it alive through the first updates.
const RELU_BIAS_INIT: f64 = 0.1;

pub fn build_model(spec: &ModelSpec, seed: u64) -> Result<ModelParams> {
    let mut params = ModelParams::zeros(spec)?;
    for (i, layer) in params.layers.iter_mut().enumerate() {
        let mut rng = rng_from(seed, &[i as u64]);
        match layer {
            LayerParams::Lstm(p) => {
                init_recurrent(&mut p.weights, 4, p.units, p.input, &mut rng);
                p.bias[GATE_FORGET * p.units..(GATE_FORGET + 1) * p.units].fill(1.0);
            }
            LayerParams::Gru(p) => init_recurrent(&mut p.weights, 3, p.units, p.input, &mut rng),
            LayerParams::Dense(p) => {
                let limit = glorot_limit(p.input, p.units);
                p.weights.iter_mut().for_each(|w| *w = rng.random_range(-limit..limit));
                if matches!(
                    spec.layers[i],
                    LayerSpec::Dense {
                        activation: Activation::Relu,
                        ..
                    }
                ) {
                    p.bias.fill(RELU_BIAS_INIT);
                }
            }
            LayerParams::Dropout => {}
        }
    }
    Ok(params)
}

fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// `weights` is `[gates·units × (units + input)]`; the first `units`
/// columns are the recurrent kernel.
fn init_recurrent(weights: &mut [f64], gates: usize, units: usize, input: usize, rng: &mut SeededRng) {
    let rows = gates * units;
    let cols = units + input;
    let limit = glorot_limit(input, rows);
    let q = orthonormal_columns(rows, units, rng);
    for r in 0..rows {
        for c in 0..units {
            weights[r * cols + c] = q[r * units + c];
        }
        for c in units..cols {
            weights[r * cols + c] = rng.random_range(-limit..limit);
        }
    }
}

/// Row-major `[rows × cols]` matrix with orthonormal columns, from
/// Gram-Schmidt on a Gaussian matrix. Requires `rows >= cols`.
fn orthonormal_columns(rows: usize, cols: usize, rng: &mut SeededRng) -> Vec<f64> {
    debug_assert!(rows >= cols);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cols);
    while basis.len() < cols {
        let mut v: Vec<f64> = (0..rows).map(|_| rng.sample(StandardNormal)).collect();
        for q in &basis {
            let dot: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(vi, qi)| *vi -= dot * qi);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    let mut out = vec![0.0; rows * cols];
    for (c, q) in basis.iter().enumerate() {
        for r in 0..rows {
            out[r * cols + c] = q[r];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::CellKind;

    #[test]
    fn recurrent_kernel_columns_are_orthonormal() {
        let spec = ModelSpec {
            input_width: 9,
            layers: vec![LayerSpec::recurrent(CellKind::Lstm, 16)],
        };
        let params = build_model(&spec, 42).unwrap();
        let LayerParams::Lstm(p) = &params.layers[0] else {
            panic!()
        };
        let cols = p.cols();
        for a in 0..16 {
            for b in 0..16 {
                let dot: f64 = (0..64).map(|r| p.weights[r * cols + a] * p.weights[r * cols + b]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
        assert_eq!(&p.bias[16..32], &[1.0; 16]);
        assert!(p.bias[..16].iter().chain(&p.bias[32..]).all(|&b| b == 0.0));
    }

    #[test]
    fn input_kernels_within_glorot_limit() {
        let params = build_model(&ModelSpec::default_model(), 1).unwrap();
        let LayerParams::Dense(d) = &params.layers[4] else {
            panic!()
        };
        let limit = glorot_limit(16, 1);
        assert!(d.weights.iter().all(|w| w.abs() <= limit));
        assert_eq!(d.bias, vec![RELU_BIAS_INIT]);
        let linear = ModelSpec::default_variant(CellKind::Gru, Activation::Linear);
        let LayerParams::Dense(d) = &build_model(&linear, 1).unwrap().layers[4] else {
            panic!()
        };
        assert_eq!(d.bias, vec![0.0]);
    }

    #[test]
    fn seeded_and_distinct() {
        let spec = ModelSpec::default_model();
        assert_eq!(build_model(&spec, 5).unwrap(), build_model(&spec, 5).unwrap());
        assert_ne!(build_model(&spec, 5).unwrap(), build_model(&spec, 6).unwrap());
    }
}
