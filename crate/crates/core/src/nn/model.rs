use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::dense::{dense_backward, dense_forward, DenseParams, DenseTrace};
use super::dropout::{dropout_backward, dropout_forward, DropoutMode};
use super::gru::{gru_backward, gru_forward, GruParams, GruTrace};
use super::lstm::{lstm_backward, lstm_forward, LstmParams, LstmTrace};
use super::{check_len, Activation};
use crate::data::PaddedBatch;
use crate::rng::rng_from;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Lstm,
    Gru,
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CellKind::Lstm => "lstm",
            CellKind::Gru => "gru",
        })
    }
}

impl FromStr for CellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lstm" => Ok(CellKind::Lstm),
            "gru" => Ok(CellKind::Gru),
            other => Err(Error::invalid(format!("unknown cell kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrentSpec {
    pub units: usize,
    /// Candidate and cell-output activation.
    pub activation: Activation,
    /// Gate activation.
    pub recurrent_activation: Activation,
    /// Only `true` is supported: every layer emits its full sequence.
    pub return_sequences: bool,
}

impl RecurrentSpec {
    pub fn new(units: usize) -> Self {
        RecurrentSpec {
            units,
            activation: Activation::Tanh,
            recurrent_activation: Activation::HardSigmoid,
            return_sequences: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Lstm(RecurrentSpec),
    Gru(RecurrentSpec),
    Dense { units: usize, activation: Activation },
    Dropout { rate: f64 },
}

impl LayerSpec {
    pub fn recurrent(cell: CellKind, units: usize) -> Self {
        match cell {
            CellKind::Lstm => LayerSpec::Lstm(RecurrentSpec::new(units)),
            CellKind::Gru => LayerSpec::Gru(RecurrentSpec::new(units)),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::Lstm(_) => "lstm",
            LayerSpec::Gru(_) => "gru",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Dropout { .. } => "dropout",
        }
    }

    /// Output width given the input width.
    pub fn output_width(&self, input: usize) -> usize {
        match self {
            LayerSpec::Lstm(r) | LayerSpec::Gru(r) => r.units,
            LayerSpec::Dense { units, .. } => *units,
            LayerSpec::Dropout { .. } => input,
        }
    }

    pub fn param_count(&self, input: usize) -> usize {
        match self {
            LayerSpec::Lstm(r) => LstmParams::param_count(input, r.units),
            LayerSpec::Gru(r) => GruParams::param_count(input, r.units),
            LayerSpec::Dense { units, .. } => DenseParams::param_count(input, *units),
            LayerSpec::Dropout { .. } => 0,
        }
    }
}

/// Ordered layer stack. The first layer consumes `input_width` features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub input_width: usize,
    pub layers: Vec<LayerSpec>,
}

impl ModelSpec {
    /// 9 features → LSTM(16)×4 → Dense(1, relu) → LSTM(16) → Dropout(0.2)
    /// → Dense(1, relu); recurrent layers use tanh with hard-sigmoid gates.
    pub fn default_model() -> Self {
        Self::default_variant(CellKind::Lstm, Activation::Relu)
    }

    /// The default stack with every recurrent layer replaced by `cell` and
    /// both dense layers using `dense_activation`.
    pub fn default_variant(cell: CellKind, dense_activation: Activation) -> Self {
        let rec = |u| LayerSpec::recurrent(cell, u);
        let dense = LayerSpec::Dense {
            units: 1,
            activation: dense_activation,
        };
        ModelSpec {
            input_width: crate::data::FEATURE_WIDTH,
            layers: vec![
                rec(16),
                rec(16),
                rec(16),
                rec(16),
                dense,
                rec(16),
                LayerSpec::Dropout { rate: 0.2 },
                dense,
            ],
        }
    }

    /// `(input, output)` width of every layer.
    pub fn widths(&self) -> Vec<(usize, usize)> {
        let mut input = self.input_width;
        self.layers
            .iter()
            .map(|layer| {
                let out = layer.output_width(input);
                let pair = (input, out);
                input = out;
                pair
            })
            .collect()
    }

    pub fn output_width(&self) -> usize {
        self.widths().last().map_or(self.input_width, |&(_, o)| o)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_width == 0 {
            return Err(Error::invalid("model input width must be >= 1"));
        }
        if self.layers.is_empty() {
            return Err(Error::invalid("model has no layers"));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                LayerSpec::Lstm(r) | LayerSpec::Gru(r) => {
                    if r.units == 0 {
                        return Err(Error::invalid(format!("layer {i}: units must be >= 1")));
                    }
                    if !r.return_sequences {
                        return Err(Error::invalid(format!(
                            "layer {i}: only return_sequences = true is supported"
                        )));
                    }
                }
                LayerSpec::Dense { units, .. } if *units == 0 => {
                    return Err(Error::invalid(format!("layer {i}: units must be >= 1")));
                }
                LayerSpec::Dropout { rate } if !(0.0..1.0).contains(rate) => {
                    return Err(Error::invalid(format!("layer {i}: dropout rate {rate} outside [0, 1)")));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn layer_param_counts(&self) -> Vec<usize> {
        self.layers
            .iter()
            .zip(self.widths())
            .map(|(l, (i, _))| l.param_count(i))
            .collect()
    }

    /// Keras-style layer table.
    pub fn summary(&self, steps: usize) -> String {
        let mut seen = std::collections::HashMap::new();
        let mut out = format!("{:<24}{:<24}{:>8}\n", "Layer (type)", "Output Shape", "Param #");
        for ((layer, (_, width)), params) in self.layers.iter().zip(self.widths()).zip(self.layer_param_counts()) {
            let kind = layer.kind_name();
            let n = seen.entry(kind).or_insert(0);
            *n += 1;
            let name = format!("{kind}_{n} ({})", kind_title(kind));
            out.push_str(&format!(
                "{name:<24}{:<24}{params:>8}\n",
                format!("(None, {steps}, {width})")
            ));
        }
        let total = count_params(self).unwrap_or(0);
        out.push_str(&format!("Total params: {total}\n"));
        out
    }
}

fn kind_title(kind: &str) -> &'static str {
    match kind {
        "lstm" => "LSTM",
        "gru" => "GRU",
        "dense" => "Dense",
        _ => "Dropout",
    }
}

/// Closed-form parameter count.
pub fn count_params(spec: &ModelSpec) -> Result<usize> {
    spec.validate()?;
    Ok(spec.layer_param_counts().iter().sum())
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerParams {
    Lstm(LstmParams),
    Gru(GruParams),
    Dense(DenseParams),
    Dropout,
}

impl LayerParams {
    fn zeros(layer: &LayerSpec, input: usize) -> Self {
        match layer {
            LayerSpec::Lstm(r) => LayerParams::Lstm(LstmParams::zeros(input, r.units)),
            LayerSpec::Gru(r) => LayerParams::Gru(GruParams::zeros(input, r.units)),
            LayerSpec::Dense { units, .. } => LayerParams::Dense(DenseParams::zeros(input, *units)),
            LayerSpec::Dropout { .. } => LayerParams::Dropout,
        }
    }

    /// `(weights, bias)` arrays, in flat order.
    pub fn arrays(&self) -> Vec<(&'static str, &[f64])> {
        match self {
            LayerParams::Lstm(p) => vec![("weights", &p.weights), ("bias", &p.bias)],
            LayerParams::Gru(p) => vec![("weights", &p.weights), ("bias", &p.bias)],
            LayerParams::Dense(p) => vec![("weights", &p.weights), ("bias", &p.bias)],
            LayerParams::Dropout => vec![],
        }
    }

    pub fn arrays_mut(&mut self) -> Vec<&mut Vec<f64>> {
        match self {
            LayerParams::Lstm(p) => vec![&mut p.weights, &mut p.bias],
            LayerParams::Gru(p) => vec![&mut p.weights, &mut p.bias],
            LayerParams::Dense(p) => vec![&mut p.weights, &mut p.bias],
            LayerParams::Dropout => vec![],
        }
    }
}

/// Learnable arrays for a [`ModelSpec`]. The flat view concatenates each
/// layer's weights then bias, in layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub spec: ModelSpec,
    pub layers: Vec<LayerParams>,
}

impl ModelParams {
    pub fn zeros(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let layers = spec
            .layers
            .iter()
            .zip(spec.widths())
            .map(|(l, (input, _))| LayerParams::zeros(l, input))
            .collect();
        Ok(ModelParams {
            spec: spec.clone(),
            layers,
        })
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().flat_map(|l| l.arrays()).map(|(_, a)| a.len()).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.num_params());
        for layer in &self.layers {
            for (_, a) in layer.arrays() {
                flat.extend_from_slice(a);
            }
        }
        flat
    }

    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        check_len("flat parameter vector", flat.len(), self.num_params())?;
        let mut offset = 0;
        for layer in &mut self.layers {
            for a in layer.arrays_mut() {
                let n = a.len();
                a.copy_from_slice(&flat[offset..offset + n]);
                offset += n;
            }
        }
        Ok(())
    }

    pub fn unflatten(spec: &ModelSpec, flat: &[f64]) -> Result<Self> {
        let mut params = Self::zeros(spec)?;
        params.assign_flat(flat)?;
        Ok(params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Eval,
    /// Dropout active; masks are a pure function of `seed`, the sequence
    /// index and the layer index.
    Train {
        seed: u64,
    },
}

#[derive(Debug, Clone)]
pub enum LayerTrace {
    Lstm(LstmTrace),
    Gru(GruTrace),
    Dense(DenseTrace),
    Dropout { kept: Vec<bool> },
}

/// Forward values of one sequence through the whole model.
#[derive(Debug, Clone)]
pub struct SequenceTrace {
    pub layers: Vec<LayerTrace>,
    /// `[T × output_width]`.
    pub output: Vec<f64>,
}

/// Forward pass for one `[T × input_width]` sequence.
pub fn forward_sequence(
    params: &ModelParams,
    features: &[f64],
    mask: &[bool],
    mode: Mode,
    seq_index: usize,
) -> Result<SequenceTrace> {
    check_len(
        "sequence features",
        features.len(),
        mask.len() * params.spec.input_width,
    )?;
    let mut x = features.to_vec();
    let mut traces = Vec::with_capacity(params.layers.len());
    for (i, (layer, spec)) in params.layers.iter().zip(&params.spec.layers).enumerate() {
        let (y, trace) = match (layer, spec) {
            (LayerParams::Lstm(p), LayerSpec::Lstm(r)) => {
                let (y, t) = lstm_forward(p, r.recurrent_activation, r.activation, &x, mask)?;
                (y, LayerTrace::Lstm(t))
            }
            (LayerParams::Gru(p), LayerSpec::Gru(r)) => {
                let (y, t) = gru_forward(p, r.recurrent_activation, r.activation, &x, mask)?;
                (y, LayerTrace::Gru(t))
            }
            (LayerParams::Dense(p), LayerSpec::Dense { activation, .. }) => {
                let (y, t) = dense_forward(p, *activation, &x)?;
                (y, LayerTrace::Dense(t))
            }
            (LayerParams::Dropout, LayerSpec::Dropout { rate }) => {
                let (dmode, seed) = match mode {
                    Mode::Eval => (DropoutMode::Eval, 0),
                    Mode::Train { seed } => (DropoutMode::Train, seed),
                };
                let mut rng = rng_from(seed, &[seq_index as u64, i as u64]);
                let (y, kept) = dropout_forward(&x, *rate, dmode, &mut rng)?;
                (y, LayerTrace::Dropout { kept })
            }
            _ => return Err(Error::invalid(format!("layer {i}: parameters do not match spec"))),
        };
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("layer {i} ({}) output", spec.kind_name())));
        }
        x = y;
        traces.push(trace);
    }
    Ok(SequenceTrace {
        layers: traces,
        output: x,
    })
}

/// Backward pass for one sequence given `d_output` (`[T × output_width]`).
/// Parameter gradients are accumulated into `grads`.
pub fn backward_sequence(
    params: &ModelParams,
    trace: &SequenceTrace,
    d_output: &[f64],
    grads: &mut ModelParams,
) -> Result<()> {
    let mut d = d_output.to_vec();
    let layers = params
        .layers
        .iter()
        .zip(&params.spec.layers)
        .zip(&trace.layers)
        .zip(&mut grads.layers);
    for (((layer, spec), lt), grad) in layers.rev() {
        d = match (layer, spec, lt, grad) {
            (LayerParams::Lstm(p), LayerSpec::Lstm(r), LayerTrace::Lstm(t), LayerParams::Lstm(g)) => {
                lstm_backward(p, r.recurrent_activation, r.activation, t, &d, g)?
            }
            (LayerParams::Gru(p), LayerSpec::Gru(r), LayerTrace::Gru(t), LayerParams::Gru(g)) => {
                gru_backward(p, r.recurrent_activation, r.activation, t, &d, g)?
            }
            (
                LayerParams::Dense(p),
                LayerSpec::Dense { activation, .. },
                LayerTrace::Dense(t),
                LayerParams::Dense(g),
            ) => dense_backward(p, *activation, t, &d, g)?,
            (LayerParams::Dropout, LayerSpec::Dropout { rate }, LayerTrace::Dropout { kept }, _) => {
                dropout_backward(&d, kept, *rate)?
            }
            _ => return Err(Error::invalid("trace does not match model")),
        };
    }
    Ok(())
}

/// Predictions `[num_seq × max_len × output_width]` for a padded batch.
pub fn model_forward(params: &ModelParams, batch: &PaddedBatch, mode: Mode) -> Result<Vec<f64>> {
    if batch.width != params.spec.input_width {
        return Err(Error::shape(format!(
            "batch feature width {} does not match model input width {}",
            batch.width, params.spec.input_width
        )));
    }
    let mut out = Vec::with_capacity(batch.num_seq * batch.max_len * params.spec.output_width());
    for s in 0..batch.num_seq {
        let view = batch.sequence(s);
        out.extend(forward_sequence(params, view.features, view.mask, mode, s)?.output);
    }
    Ok(out)
}
