//! Long short-term memory layer.
//!
//! ```text
//! i = σ(W_i [h, x] + b_i)      f = σ(W_f [h, x] + b_f)      o = σ(W_o [h, x] + b_o)
//! c̃ = g(W_c [h, x] + b_c)      c' = f ⊙ c + i ⊙ c̃            h' = o ⊙ g(c')
//! ```
//!
//! `σ` is the recurrent (gate) activation and `g` the cell activation.
//! The four gate matrices are stacked row-wise in the order i, f, o, c.

use super::{check_len, matvec_acc, matvec_t_acc, outer_acc, Activation};
use crate::Result;

pub const GATE_INPUT: usize = 0;
pub const GATE_FORGET: usize = 1;
pub const GATE_OUTPUT: usize = 2;
pub const GATE_CANDIDATE: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub input: usize,
    pub units: usize,
    /// `[4·units × (units + input)]`.
    pub weights: Vec<f64>,
    /// `[4·units]`.
    pub bias: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(input: usize, units: usize) -> Self {
        LstmParams {
            input,
            units,
            weights: vec![0.0; 4 * units * (units + input)],
            bias: vec![0.0; 4 * units],
        }
    }

    pub fn param_count(input: usize, units: usize) -> usize {
        4 * ((input + units) * units + units)
    }

    pub fn cols(&self) -> usize {
        self.units + self.input
    }

    /// `[units × (units + input)]` block for one gate.
    pub fn gate_weights(&self, gate: usize) -> &[f64] {
        let block = self.units * self.cols();
        &self.weights[gate * block..(gate + 1) * block]
    }

    pub fn gate_bias(&self, gate: usize) -> &[f64] {
        &self.bias[gate * self.units..(gate + 1) * self.units]
    }
}

/// Per-step values kept for backpropagation. Rows of masked steps are zero.
#[derive(Debug, Clone, Default)]
pub struct LstmTrace {
    /// `[T × (units + input)]` concatenated `[h_prev, x_t]`.
    concat: Vec<f64>,
    /// `[T × 4·units]` gate pre-activations.
    pre: Vec<f64>,
    /// `[T × 4·units]` gate activations.
    gates: Vec<f64>,
    /// `[T × units]` previous cell state.
    c_prev: Vec<f64>,
    /// `[T × units]` new cell state.
    c: Vec<f64>,
    /// `[T × units]` `g(c)`.
    c_act: Vec<f64>,
    mask: Vec<bool>,
}

/// One step of the cell. Returns `(h_t, c_t)`.
pub fn lstm_cell_step(
    p: &LstmParams,
    gate_act: Activation,
    cell_act: Activation,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len("lstm input", x.len(), p.input)?;
    check_len("lstm h_prev", h_prev.len(), p.units)?;
    check_len("lstm c_prev", c_prev.len(), p.units)?;
    let mut scratch = StepScratch::new(p);
    scratch.concat[..p.units].copy_from_slice(h_prev);
    scratch.concat[p.units..].copy_from_slice(x);
    let mut h = vec![0.0; p.units];
    let mut c = vec![0.0; p.units];
    scratch.step(p, gate_act, cell_act, c_prev, &mut h, &mut c);
    Ok((h, c))
}

struct StepScratch {
    concat: Vec<f64>,
    pre: Vec<f64>,
    gates: Vec<f64>,
    c_act: Vec<f64>,
}

impl StepScratch {
    fn new(p: &LstmParams) -> Self {
        StepScratch {
            concat: vec![0.0; p.cols()],
            pre: vec![0.0; 4 * p.units],
            gates: vec![0.0; 4 * p.units],
            c_act: vec![0.0; p.units],
        }
    }

    /// Runs the gate equations on `self.concat`.
    fn step(
        &mut self,
        p: &LstmParams,
        gate_act: Activation,
        cell_act: Activation,
        c_prev: &[f64],
        h: &mut [f64],
        c: &mut [f64],
    ) {
        let u = p.units;
        self.pre.copy_from_slice(&p.bias);
        matvec_acc(&p.weights, &self.concat, &mut self.pre);
        for (k, (g, &z)) in self.gates.iter_mut().zip(&self.pre).enumerate() {
            *g = if k / u == GATE_CANDIDATE {
                cell_act.apply(z)
            } else {
                gate_act.apply(z)
            };
        }
        for j in 0..u {
            let i = self.gates[GATE_INPUT * u + j];
            let f = self.gates[GATE_FORGET * u + j];
            let o = self.gates[GATE_OUTPUT * u + j];
            let cand = self.gates[GATE_CANDIDATE * u + j];
            c[j] = f * c_prev[j] + i * cand;
            self.c_act[j] = cell_act.apply(c[j]);
            h[j] = o * self.c_act[j];
        }
    }
}

/// Runs the layer over a `[T × input]` sequence from zero state and
/// returns `[T × units]` outputs. Masked steps output zero and carry the
/// state through unchanged.
pub fn lstm_forward(
    p: &LstmParams,
    gate_act: Activation,
    cell_act: Activation,
    seq: &[f64],
    mask: &[bool],
) -> Result<(Vec<f64>, LstmTrace)> {
    let steps = mask.len();
    check_len("lstm sequence", seq.len(), steps * p.input)?;
    let (u, cols) = (p.units, p.cols());
    let mut trace = LstmTrace {
        concat: vec![0.0; steps * cols],
        pre: vec![0.0; steps * 4 * u],
        gates: vec![0.0; steps * 4 * u],
        c_prev: vec![0.0; steps * u],
        c: vec![0.0; steps * u],
        c_act: vec![0.0; steps * u],
        mask: mask.to_vec(),
    };
    let mut out = vec![0.0; steps * u];
    let mut h = vec![0.0; u];
    let mut c = vec![0.0; u];
    let mut c_next = vec![0.0; u];
    let mut scratch = StepScratch::new(p);

    for t in 0..steps {
        if !mask[t] {
            continue;
        }
        scratch.concat[..u].copy_from_slice(&h);
        scratch.concat[u..].copy_from_slice(&seq[t * p.input..(t + 1) * p.input]);
        scratch.step(p, gate_act, cell_act, &c, &mut h, &mut c_next);

        trace.concat[t * cols..(t + 1) * cols].copy_from_slice(&scratch.concat);
        trace.pre[t * 4 * u..(t + 1) * 4 * u].copy_from_slice(&scratch.pre);
        trace.gates[t * 4 * u..(t + 1) * 4 * u].copy_from_slice(&scratch.gates);
        trace.c_prev[t * u..(t + 1) * u].copy_from_slice(&c);
        trace.c[t * u..(t + 1) * u].copy_from_slice(&c_next);
        trace.c_act[t * u..(t + 1) * u].copy_from_slice(&scratch.c_act);
        out[t * u..(t + 1) * u].copy_from_slice(&h);
        std::mem::swap(&mut c, &mut c_next);
    }
    Ok((out, trace))
}

/// Backpropagation through time. Accumulates parameter gradients into
/// `grad` and returns the gradient with respect to the input sequence.
pub fn lstm_backward(
    p: &LstmParams,
    gate_act: Activation,
    cell_act: Activation,
    trace: &LstmTrace,
    d_out: &[f64],
    grad: &mut LstmParams,
) -> Result<Vec<f64>> {
    let steps = trace.mask.len();
    let (u, cols) = (p.units, p.cols());
    check_len("lstm output gradient", d_out.len(), steps * u)?;
    let mut d_in = vec![0.0; steps * p.input];
    let mut dh_next = vec![0.0; u];
    let mut dc_next = vec![0.0; u];
    let mut da = vec![0.0; 4 * u];
    let mut dconcat = vec![0.0; cols];

    for t in (0..steps).rev() {
        if !trace.mask[t] {
            continue;
        }
        let gates = &trace.gates[t * 4 * u..(t + 1) * 4 * u];
        let pre = &trace.pre[t * 4 * u..(t + 1) * 4 * u];
        let c_prev = &trace.c_prev[t * u..(t + 1) * u];
        let c = &trace.c[t * u..(t + 1) * u];
        let c_act = &trace.c_act[t * u..(t + 1) * u];

        for j in 0..u {
            let dh = d_out[t * u + j] + dh_next[j];
            let i = gates[GATE_INPUT * u + j];
            let f = gates[GATE_FORGET * u + j];
            let o = gates[GATE_OUTPUT * u + j];
            let cand = gates[GATE_CANDIDATE * u + j];

            let d_o = dh * c_act[j];
            let dc = dc_next[j] + dh * o * cell_act.derivative(c[j], c_act[j]);
            let d_i = dc * cand;
            let d_f = dc * c_prev[j];
            let d_cand = dc * i;
            dc_next[j] = dc * f;

            let at = |g: usize| g * u + j;
            da[at(GATE_INPUT)] = d_i * gate_act.derivative(pre[at(GATE_INPUT)], i);
            da[at(GATE_FORGET)] = d_f * gate_act.derivative(pre[at(GATE_FORGET)], f);
            da[at(GATE_OUTPUT)] = d_o * gate_act.derivative(pre[at(GATE_OUTPUT)], o);
            da[at(GATE_CANDIDATE)] = d_cand * cell_act.derivative(pre[at(GATE_CANDIDATE)], cand);
        }

        let concat = &trace.concat[t * cols..(t + 1) * cols];
        outer_acc(&mut grad.weights, &da, concat);
        for (b, d) in grad.bias.iter_mut().zip(&da) {
            *b += d;
        }
        dconcat.fill(0.0);
        matvec_t_acc(&p.weights, &da, &mut dconcat);
        dh_next.copy_from_slice(&dconcat[..u]);
        d_in[t * p.input..(t + 1) * p.input].copy_from_slice(&dconcat[u..]);
    }
    Ok(d_in)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;
    use rand::Rng;

    const HS: Activation = Activation::HardSigmoid;
    const TANH: Activation = Activation::Tanh;

    fn random(input: usize, units: usize, seed: u64) -> LstmParams {
        let mut rng = rng_from(seed, &[]);
        let mut p = LstmParams::zeros(input, units);
        p.weights.iter_mut().for_each(|w| *w = rng.random_range(-0.6..0.6));
        p.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.3..0.3));
        p
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(LstmParams::param_count(9, 16), 1664);
        assert_eq!(LstmParams::param_count(16, 16), 2112);
        assert_eq!(LstmParams::param_count(1, 16), 1152);
        let p = LstmParams::zeros(9, 16);
        assert_eq!(p.weights.len() + p.bias.len(), 1664);
    }

    #[test]
    fn zero_params_zero_state() {
        let p = LstmParams::zeros(3, 4);
        let (h, c) = lstm_cell_step(&p, HS, TANH, &[0.0; 3], &[0.0; 4], &[0.0; 4]).unwrap();
        assert_eq!(h, vec![0.0; 4]);
        assert_eq!(c, vec![0.0; 4]);
    }

    #[test]
    fn zero_params_halve_the_cell() {
        let p = LstmParams::zeros(2, 3);
        let c_prev = [0.8, -1.4, 3.0];
        let (h, c) = lstm_cell_step(&p, HS, TANH, &[0.3, -0.2], &[0.1, 0.2, 0.3], &c_prev).unwrap();
        for j in 0..3 {
            assert!((c[j] - 0.5 * c_prev[j]).abs() < 1e-15);
            assert!((h[j] - 0.5 * (0.5 * c_prev[j]).tanh()).abs() < 1e-15);
        }
    }

    #[test]
    fn hidden_state_is_bounded() {
        let p = random(3, 5, 1);
        let mut rng = rng_from(2, &[]);
        for _ in 0..200 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-50.0..50.0)).collect();
            let h0: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let c0: Vec<f64> = (0..5).map(|_| rng.random_range(-20.0..20.0)).collect();
            let (h, _) = lstm_cell_step(&p, HS, TANH, &x, &h0, &c0).unwrap();
            assert!(h.iter().all(|v| v.abs() <= 1.0));
        }
    }

    #[test]
    fn shape_mismatch() {
        let p = LstmParams::zeros(3, 4);
        assert!(lstm_cell_step(&p, HS, TANH, &[0.0; 2], &[0.0; 4], &[0.0; 4]).is_err());
        assert!(lstm_forward(&p, HS, TANH, &[0.0; 5], &[true, true]).is_err());
    }

    #[test]
    fn single_step_sequence_equals_cell() {
        let p = random(3, 4, 7);
        let x = [0.4, -0.1, 0.9];
        let (out, _) = lstm_forward(&p, HS, TANH, &x, &[true]).unwrap();
        let (h, _) = lstm_cell_step(&p, HS, TANH, &x, &[0.0; 4], &[0.0; 4]).unwrap();
        assert_eq!(out, h);
    }

    #[test]
    fn trailing_masked_steps_do_not_touch_valid_outputs() {
        let p = random(2, 3, 5);
        let seq = [0.1, 0.2, -0.3, 0.5, 0.9, -0.7];
        let (short, _) = lstm_forward(&p, HS, TANH, &seq, &[true; 3]).unwrap();
        let mut long_seq = seq.to_vec();
        long_seq.extend([4.0, 4.0, -2.0, 1.0]);
        let (long, _) = lstm_forward(&p, HS, TANH, &long_seq, &[true, true, true, false, false]).unwrap();
        assert_eq!(&long[..9], &short[..]);
        assert!(long[9..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let (input, units, steps) = (2, 3, 5);
        let p = random(input, units, 11);
        let mut rng = rng_from(12, &[]);
        let seq: Vec<f64> = (0..steps * input).map(|_| rng.random_range(-1.0..1.0)).collect();
        let probe: Vec<f64> = (0..steps * units).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mask = [true, true, false, true, true];
        // L = <probe, out>
        let loss = |p: &LstmParams, seq: &[f64]| {
            let (out, _) = lstm_forward(p, Activation::Sigmoid, TANH, seq, &mask).unwrap();
            out.iter().zip(&probe).map(|(a, b)| a * b).sum::<f64>()
        };
        let (_, trace) = lstm_forward(&p, Activation::Sigmoid, TANH, &seq, &mask).unwrap();
        let mut grad = LstmParams::zeros(input, units);
        let d_in = lstm_backward(&p, Activation::Sigmoid, TANH, &trace, &probe, &mut grad).unwrap();

        let h = 1e-6;
        for k in 0..p.weights.len() {
            let (mut a, mut b) = (p.clone(), p.clone());
            a.weights[k] += h;
            b.weights[k] -= h;
            let fd = (loss(&a, &seq) - loss(&b, &seq)) / (2.0 * h);
            assert!(
                (fd - grad.weights[k]).abs() < 1e-7,
                "w[{k}] {fd} vs {}",
                grad.weights[k]
            );
        }
        for k in 0..seq.len() {
            let (mut a, mut b) = (seq.clone(), seq.clone());
            a[k] += h;
            b[k] -= h;
            let fd = (loss(&p, &a) - loss(&p, &b)) / (2.0 * h);
            assert!((fd - d_in[k]).abs() < 1e-7, "x[{k}] {fd} vs {}", d_in[k]);
        }
    }
}
