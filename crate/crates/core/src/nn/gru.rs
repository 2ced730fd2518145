//! Gated recurrent unit, classic formulation with the reset gate applied
//! before the candidate's matrix product:
//!
//! ```text
//! z = σ(W_z [h, x] + b_z)      r = σ(W_r [h, x] + b_r)
//! h̃ = g(W_h [r ⊙ h, x] + b_h)  h' = (1 − z) ⊙ h + z ⊙ h̃
//! ```
//!
//! Matrices are stacked in the order z, r, h.

use super::{check_len, matvec_acc, matvec_t_acc, outer_acc, Activation};
use crate::Result;

pub const GATE_UPDATE: usize = 0;
pub const GATE_RESET: usize = 1;
pub const GATE_CANDIDATE: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub input: usize,
    pub units: usize,
    /// `[3·units × (units + input)]`.
    pub weights: Vec<f64>,
    /// `[3·units]`.
    pub bias: Vec<f64>,
}

impl GruParams {
    pub fn zeros(input: usize, units: usize) -> Self {
        GruParams {
            input,
            units,
            weights: vec![0.0; 3 * units * (units + input)],
            bias: vec![0.0; 3 * units],
        }
    }

    pub fn param_count(input: usize, units: usize) -> usize {
        3 * ((input + units) * units + units)
    }

    pub fn cols(&self) -> usize {
        self.units + self.input
    }

    fn block(&self, gate: usize) -> &[f64] {
        let n = self.units * self.cols();
        &self.weights[gate * n..(gate + 1) * n]
    }
}

#[derive(Debug, Clone, Default)]
pub struct GruTrace {
    /// `[T × cols]` `[h_prev, x]`.
    concat: Vec<f64>,
    /// `[T × cols]` `[r ⊙ h_prev, x]`.
    reset_concat: Vec<f64>,
    /// `[T × 3·units]`.
    pre: Vec<f64>,
    gates: Vec<f64>,
    mask: Vec<bool>,
}

struct Scratch {
    concat: Vec<f64>,
    reset_concat: Vec<f64>,
    pre: Vec<f64>,
    gates: Vec<f64>,
}

impl Scratch {
    fn new(p: &GruParams) -> Self {
        Scratch {
            concat: vec![0.0; p.cols()],
            reset_concat: vec![0.0; p.cols()],
            pre: vec![0.0; 3 * p.units],
            gates: vec![0.0; 3 * p.units],
        }
    }

    /// Runs one step on `self.concat`; writes the new state into `h`.
    fn step(&mut self, p: &GruParams, gate_act: Activation, cell_act: Activation, h: &mut [f64]) {
        let u = p.units;
        let zr = 2 * u;
        self.pre[..zr].copy_from_slice(&p.bias[..zr]);
        matvec_acc(&p.weights[..zr * p.cols()], &self.concat, &mut self.pre[..zr]);
        for k in 0..zr {
            self.gates[k] = gate_act.apply(self.pre[k]);
        }
        let r = &self.gates[GATE_RESET * u..(GATE_RESET + 1) * u];
        for ((rc, &rj), &c) in self.reset_concat.iter_mut().zip(r).zip(&self.concat) {
            *rc = rj * c;
        }
        self.reset_concat[u..].copy_from_slice(&self.concat[u..]);
        let cand = GATE_CANDIDATE * u..(GATE_CANDIDATE + 1) * u;
        self.pre[cand.clone()].copy_from_slice(&p.bias[cand.clone()]);
        matvec_acc(p.block(GATE_CANDIDATE), &self.reset_concat, &mut self.pre[cand.clone()]);
        for k in cand {
            self.gates[k] = cell_act.apply(self.pre[k]);
        }
        for (j, hj) in h.iter_mut().enumerate().take(u) {
            let z = self.gates[GATE_UPDATE * u + j];
            let h_tilde = self.gates[GATE_CANDIDATE * u + j];
            *hj = (1.0 - z) * self.concat[j] + z * h_tilde;
        }
    }
}

pub fn gru_cell_step(
    p: &GruParams,
    gate_act: Activation,
    cell_act: Activation,
    x: &[f64],
    h_prev: &[f64],
) -> Result<Vec<f64>> {
    check_len("gru input", x.len(), p.input)?;
    check_len("gru h_prev", h_prev.len(), p.units)?;
    let mut s = Scratch::new(p);
    s.concat[..p.units].copy_from_slice(h_prev);
    s.concat[p.units..].copy_from_slice(x);
    let mut h = vec![0.0; p.units];
    s.step(p, gate_act, cell_act, &mut h);
    Ok(h)
}

/// See [`super::lstm_forward`]; same masking semantics.
pub fn gru_forward(
    p: &GruParams,
    gate_act: Activation,
    cell_act: Activation,
    seq: &[f64],
    mask: &[bool],
) -> Result<(Vec<f64>, GruTrace)> {
    let steps = mask.len();
    check_len("gru sequence", seq.len(), steps * p.input)?;
    let (u, cols) = (p.units, p.cols());
    let mut trace = GruTrace {
        concat: vec![0.0; steps * cols],
        reset_concat: vec![0.0; steps * cols],
        pre: vec![0.0; steps * 3 * u],
        gates: vec![0.0; steps * 3 * u],
        mask: mask.to_vec(),
    };
    let mut out = vec![0.0; steps * u];
    let mut h = vec![0.0; u];
    let mut s = Scratch::new(p);
    for t in 0..steps {
        if !mask[t] {
            continue;
        }
        s.concat[..u].copy_from_slice(&h);
        s.concat[u..].copy_from_slice(&seq[t * p.input..(t + 1) * p.input]);
        s.step(p, gate_act, cell_act, &mut h);
        trace.concat[t * cols..(t + 1) * cols].copy_from_slice(&s.concat);
        trace.reset_concat[t * cols..(t + 1) * cols].copy_from_slice(&s.reset_concat);
        trace.pre[t * 3 * u..(t + 1) * 3 * u].copy_from_slice(&s.pre);
        trace.gates[t * 3 * u..(t + 1) * 3 * u].copy_from_slice(&s.gates);
        out[t * u..(t + 1) * u].copy_from_slice(&h);
    }
    Ok((out, trace))
}

pub fn gru_backward(
    p: &GruParams,
    gate_act: Activation,
    cell_act: Activation,
    trace: &GruTrace,
    d_out: &[f64],
    grad: &mut GruParams,
) -> Result<Vec<f64>> {
    let steps = trace.mask.len();
    let (u, cols) = (p.units, p.cols());
    check_len("gru output gradient", d_out.len(), steps * u)?;
    let block = u * cols;
    let mut d_in = vec![0.0; steps * p.input];
    let mut dh_next = vec![0.0; u];
    let mut dh_prev = vec![0.0; u];
    let mut da = vec![0.0; 3 * u];
    let mut d_reset_concat = vec![0.0; cols];
    let mut dconcat = vec![0.0; cols];

    for t in (0..steps).rev() {
        if !trace.mask[t] {
            continue;
        }
        let concat = &trace.concat[t * cols..(t + 1) * cols];
        let reset_concat = &trace.reset_concat[t * cols..(t + 1) * cols];
        let pre = &trace.pre[t * 3 * u..(t + 1) * 3 * u];
        let gates = &trace.gates[t * 3 * u..(t + 1) * 3 * u];

        // candidate branch
        for j in 0..u {
            let dh = d_out[t * u + j] + dh_next[j];
            let z = gates[GATE_UPDATE * u + j];
            let h_tilde = gates[GATE_CANDIDATE * u + j];
            let h_prev = concat[j];
            dh_prev[j] = dh * (1.0 - z);
            let dz = dh * (h_tilde - h_prev);
            da[GATE_UPDATE * u + j] = dz * gate_act.derivative(pre[GATE_UPDATE * u + j], z);
            let k = GATE_CANDIDATE * u + j;
            da[k] = dh * z * cell_act.derivative(pre[k], h_tilde);
        }
        let cand = &da[GATE_CANDIDATE * u..];
        outer_acc(&mut grad.weights[GATE_CANDIDATE * block..], cand, reset_concat);
        d_reset_concat.fill(0.0);
        matvec_t_acc(p.block(GATE_CANDIDATE), cand, &mut d_reset_concat);

        // reset gate
        for j in 0..u {
            let r = gates[GATE_RESET * u + j];
            let dr = d_reset_concat[j] * concat[j];
            dh_prev[j] += d_reset_concat[j] * r;
            da[GATE_RESET * u + j] = dr * gate_act.derivative(pre[GATE_RESET * u + j], r);
        }

        let zr = &da[..2 * u];
        outer_acc(&mut grad.weights[..2 * block], zr, concat);
        for (b, d) in grad.bias.iter_mut().zip(&da) {
            *b += d;
        }
        dconcat.fill(0.0);
        matvec_t_acc(&p.weights[..2 * block], zr, &mut dconcat);

        for j in 0..u {
            dh_next[j] = dh_prev[j] + dconcat[j];
        }
        for k in 0..p.input {
            d_in[t * p.input + k] = dconcat[u + k] + d_reset_concat[u + k];
        }
    }
    Ok(d_in)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;
    use rand::Rng;

    const SIG: Activation = Activation::Sigmoid;
    const TANH: Activation = Activation::Tanh;

    fn random(input: usize, units: usize, seed: u64) -> GruParams {
        let mut rng = rng_from(seed, &[]);
        let mut p = GruParams::zeros(input, units);
        p.weights.iter_mut().for_each(|w| *w = rng.random_range(-0.6..0.6));
        p.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.3..0.3));
        p
    }

    #[test]
    fn parameter_count() {
        assert_eq!(GruParams::param_count(9, 16), 1248);
        let p = GruParams::zeros(9, 16);
        assert_eq!(p.weights.len() + p.bias.len(), 1248);
    }

    #[test]
    fn zero_params() {
        let p = GruParams::zeros(2, 3);
        assert_eq!(
            gru_cell_step(&p, SIG, TANH, &[0.0; 2], &[0.0; 3]).unwrap(),
            vec![0.0; 3]
        );
        let h = gru_cell_step(&p, SIG, TANH, &[1.0, -2.0], &[0.4, -0.6, 2.0]).unwrap();
        assert_eq!(h, vec![0.2, -0.3, 1.0]);
    }

    #[test]
    fn convex_combination_bound() {
        let p = random(3, 4, 3);
        let mut rng = rng_from(4, &[]);
        for _ in 0..200 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-30.0..30.0)).collect();
            let h0: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            let bound = h0.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let h = gru_cell_step(&p, Activation::HardSigmoid, TANH, &x, &h0).unwrap();
            assert!(h.iter().all(|v| v.abs() <= bound + 1e-15));
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let (input, units, steps) = (3, 2, 6);
        let p = random(input, units, 21);
        let mut rng = rng_from(22, &[]);
        let seq: Vec<f64> = (0..steps * input).map(|_| rng.random_range(-1.0..1.0)).collect();
        let probe: Vec<f64> = (0..steps * units).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mask = [true, false, true, true, true, false];
        let loss = |p: &GruParams, seq: &[f64]| {
            let (out, _) = gru_forward(p, SIG, TANH, seq, &mask).unwrap();
            out.iter().zip(&probe).map(|(a, b)| a * b).sum::<f64>()
        };
        let (_, trace) = gru_forward(&p, SIG, TANH, &seq, &mask).unwrap();
        let mut grad = GruParams::zeros(input, units);
        let d_in = gru_backward(&p, SIG, TANH, &trace, &probe, &mut grad).unwrap();
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
        for k in 0..p.bias.len() {
            let (mut a, mut b) = (p.clone(), p.clone());
            a.bias[k] += h;
            b.bias[k] -= h;
            let fd = (loss(&a, &seq) - loss(&b, &seq)) / (2.0 * h);
            assert!((fd - grad.bias[k]).abs() < 1e-7);
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
