use super::{check_len, matvec_acc, matvec_t_acc, outer_acc, Activation};
use crate::Result;

/// Fully connected layer applied independently at every timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub input: usize,
    pub units: usize,
    /// `[units × input]`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseParams {
    pub fn zeros(input: usize, units: usize) -> Self {
        DenseParams {
            input,
            units,
            weights: vec![0.0; units * input],
            bias: vec![0.0; units],
        }
    }

    pub fn param_count(input: usize, units: usize) -> usize {
        units * input + units
    }
}

#[derive(Debug, Clone, Default)]
pub struct DenseTrace {
    pub input: Vec<f64>,
    pub pre: Vec<f64>,
    pub out: Vec<f64>,
}

/// `y_t = act(W x_t + b)` for every row of `x`.
pub fn dense_forward(p: &DenseParams, act: Activation, x: &[f64]) -> Result<(Vec<f64>, DenseTrace)> {
    if !x.len().is_multiple_of(p.input) {
        return Err(crate::Error::shape(format!(
            "dense input of {} values is not a multiple of width {}",
            x.len(),
            p.input
        )));
    }
    let steps = x.len() / p.input;
    let mut pre = vec![0.0; steps * p.units];
    for (row, out) in x.chunks_exact(p.input).zip(pre.chunks_exact_mut(p.units)) {
        out.copy_from_slice(&p.bias);
        matvec_acc(&p.weights, row, out);
    }
    let out: Vec<f64> = pre.iter().map(|&z| act.apply(z)).collect();
    Ok((
        out.clone(),
        DenseTrace {
            input: x.to_vec(),
            pre,
            out,
        },
    ))
}

pub fn dense_backward(
    p: &DenseParams,
    act: Activation,
    trace: &DenseTrace,
    d_out: &[f64],
    grad: &mut DenseParams,
) -> Result<Vec<f64>> {
    check_len("dense output gradient", d_out.len(), trace.out.len())?;
    let steps = trace.input.len() / p.input;
    let mut d_in = vec![0.0; trace.input.len()];
    let mut da = vec![0.0; p.units];
    for t in 0..steps {
        let outs = t * p.units..(t + 1) * p.units;
        let mut any = false;
        for ((d, &g), (&z, &y)) in da
            .iter_mut()
            .zip(&d_out[outs.clone()])
            .zip(trace.pre[outs.clone()].iter().zip(&trace.out[outs.clone()]))
        {
            *d = g * act.derivative(z, y);
            any |= *d != 0.0;
        }
        if !any {
            continue;
        }
        let row = &trace.input[t * p.input..(t + 1) * p.input];
        outer_acc(&mut grad.weights, &da, row);
        for (b, d) in grad.bias.iter_mut().zip(&da) {
            *b += d;
        }
        matvec_t_acc(&p.weights, &da, &mut d_in[t * p.input..(t + 1) * p.input]);
    }
    Ok(d_in)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_layer_with_relu_is_zero() {
        let p = DenseParams::zeros(4, 2);
        let (y, _) = dense_forward(&p, Activation::Relu, &[1.0, -2.0, 3.0, 4.0]).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
    }

    #[test]
    fn sixteen_to_one_has_seventeen_parameters() {
        assert_eq!(DenseParams::param_count(16, 1), 17);
    }

    #[test]
    fn identity_linear_passes_through() {
        let mut p = DenseParams::zeros(3, 3);
        for i in 0..3 {
            p.weights[i * 3 + i] = 1.0;
        }
        let x = [0.5, -1.5, 2.0, 7.0, 8.0, -9.0];
        let (y, _) = dense_forward(&p, Activation::Linear, &x).unwrap();
        assert_eq!(y, x.to_vec());
    }

    #[test]
    fn width_mismatch() {
        let p = DenseParams::zeros(3, 1);
        assert!(dense_forward(&p, Activation::Linear, &[1.0; 4]).is_err());
    }

    #[test]
    fn gradient_of_linear_sum() {
        let mut p = DenseParams::zeros(2, 1);
        p.weights = vec![2.0, -1.0];
        p.bias = vec![0.5];
        let x = [1.0, 3.0, -2.0, 4.0];
        let (_, trace) = dense_forward(&p, Activation::Linear, &x).unwrap();
        let mut g = DenseParams::zeros(2, 1);
        let dx = dense_backward(&p, Activation::Linear, &trace, &[1.0, 1.0], &mut g).unwrap();
        assert_eq!(g.weights, vec![-1.0, 7.0]);
        assert_eq!(g.bias, vec![2.0]);
        assert_eq!(dx, vec![2.0, -1.0, 2.0, -1.0]);
    }
}
