use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use rand::seq::SliceRandom;

use super::adam::{adam_step, clip_global_norm, AdamConfig, AdamState};
use super::backprop::backward;
use super::loss::{masked_euclidean, masked_mse, sequence_distances, LossKind};
use crate::data::{fit_normalizer, Normalizer, PaddedBatch, PourRecord, SplitManifest, FEATURE_WIDTH};
use crate::nn::{build_model, model_forward, Checkpoint, Mode, ModelParams, ModelSpec};
use crate::rng::{derive_seed, rng_from};
use crate::{Error, Result};

const SHUFFLE_STREAM: u64 = 0x7368_7566;
const DROPOUT_STREAM: u64 = 0x6472_6f70;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub lr: f64,
    pub epochs: usize,
    /// Clamped to the training split size.
    pub batch_size: usize,
    /// Seeds initialization, per-epoch shuffling and dropout masks.
    pub seed: u64,
    /// Stop after this many epochs without a validation improvement and
    /// restore the best parameters.
    pub patience: Option<usize>,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub clip_norm: Option<f64>,
    pub normalize: bool,
    /// Record per-epoch wall time. Off by default so histories are
    /// byte-reproducible.
    pub record_wall_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss: LossKind::Euclidean,
            lr: 1e-4,
            epochs: 2000,
            batch_size: 32,
            seed: 0,
            patience: None,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip_norm: None,
            normalize: true,
            record_wall_time: false,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.adam().validate()?;
        if self.beta1 == 0.0 || self.beta2 == 0.0 {
            return Err(Error::invalid("beta1 and beta2 must lie in (0, 1)"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be >= 1"));
        }
        if self.patience == Some(0) {
            return Err(Error::invalid("patience must be >= 1"));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::invalid(format!("clip norm must be finite and > 0, got {c}")));
            }
        }
        Ok(())
    }
}

/// Padded, optionally normalized train/val/test batches.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSplits {
    pub train: PaddedBatch,
    pub val: PaddedBatch,
    pub test: PaddedBatch,
    pub normalizer: Option<Normalizer>,
}

/// Pads the three splits of `manifest` to `max_len` (default: the longest
/// record), normalizing with statistics of the training ids when asked.
pub fn prepare_splits(
    records: &[PourRecord],
    manifest: &SplitManifest,
    normalize: bool,
    max_len: Option<usize>,
) -> Result<PreparedSplits> {
    if manifest.train.is_empty() {
        return Err(Error::invalid("training split is empty"));
    }
    let all = manifest.train.iter().chain(&manifest.val).chain(&manifest.test);
    if let Some(&id) = all.clone().find(|&&id| id >= records.len()) {
        return Err(Error::invalid(format!(
            "split refers to record {id} but the dataset has {} records",
            records.len()
        )));
    }
    let max_len = match max_len {
        Some(l) => l,
        None => all.clone().map(|&id| records[id].len()).max().unwrap_or(1),
    };
    if let Some(&id) = all.clone().find(|&&id| records[id].len() > max_len) {
        return Err(Error::RecordTooLong {
            id,
            length: records[id].len(),
            max_len,
        });
    }
    let normalizer = if normalize {
        Some(fit_normalizer(records, &manifest.train)?)
    } else {
        None
    };
    let scaler = normalizer
        .clone()
        .unwrap_or_else(|| Normalizer::identity(FEATURE_WIDTH));
    let pad = |ids: &[usize]| {
        let picked: Vec<&PourRecord> = ids.iter().map(|&id| &records[id]).collect();
        scaler.pad_records(&picked, max_len)
    };
    Ok(PreparedSplits {
        train: pad(&manifest.train)?,
        val: pad(&manifest.val)?,
        test: pad(&manifest.test)?,
        normalizer,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch with the lowest validation loss (the last epoch when there is
    /// no validation split).
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub checkpoint: Option<PathBuf>,
}

impl RunHistory {
    pub fn final_train_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.train_loss)
    }

    pub fn final_val_loss(&self) -> Option<f64> {
        self.epochs.last().and_then(|e| e.val_loss)
    }

    /// Tab-separated `epoch train_loss val_loss seconds`, one row per epoch.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("epoch\ttrain_loss\tval_loss\tseconds\n");
        for e in &self.epochs {
            let val = e.val_loss.map_or_else(|| "nan".to_string(), |v| format!("{v:e}"));
            let _ = writeln!(out, "{}\t{:e}\t{val}\t{:.3}", e.epoch, e.train_loss, e.seconds);
        }
        out
    }
}

fn diverged(epoch: usize) -> impl FnOnce(Error) -> Error {
    move |e| match e {
        Error::NonFinite(reason) => Error::Diverged { epoch, reason },
        other => other,
    }
}

/// Mini-batch Adam on `splits.train` starting from `build_model(spec, seed)`.
pub fn train(spec: &ModelSpec, splits: &PreparedSplits, config: &TrainConfig) -> Result<(ModelParams, RunHistory)> {
    let init = build_model(spec, config.seed)?;
    train_from(init, splits, config)
}

/// As [`train`] but from given initial parameters.
pub fn train_from(
    mut params: ModelParams,
    splits: &PreparedSplits,
    config: &TrainConfig,
) -> Result<(ModelParams, RunHistory)> {
    config.validate()?;
    let n_train = splits.train.num_seq;
    if n_train == 0 {
        return Err(Error::invalid("training split is empty"));
    }
    let batch_size = config.batch_size.min(n_train);
    let adam = config.adam();
    let mut theta = params.flatten();
    let mut state = AdamState::new(theta.len());
    let mut history = RunHistory::default();
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut stale = 0;

    for epoch in 1..=config.epochs {
        let started = Instant::now();
        let mut order: Vec<usize> = (0..n_train).collect();
        order.shuffle(&mut rng_from(config.seed, &[SHUFFLE_STREAM, epoch as u64]));

        let mut weighted = 0.0;
        for (b, ids) in order.chunks(batch_size).enumerate() {
            let batch = splits.train.select(ids).trimmed();
            let mode = Mode::Train {
                seed: derive_seed(config.seed, &[DROPOUT_STREAM, epoch as u64, b as u64]),
            };
            let (loss, mut grad) = backward(&params, &batch, config.loss, mode).map_err(diverged(epoch))?;
            if let Some(c) = config.clip_norm {
                clip_global_norm(&mut grad, c);
            }
            adam_step(&mut theta, &grad, &mut state, &adam).map_err(diverged(epoch))?;
            params.assign_flat(&theta)?;
            weighted += loss * ids.len() as f64;
        }
        let train_loss = weighted / n_train as f64;

        let val_loss = if splits.val.num_seq > 0 {
            Some(
                evaluate(&params, &splits.val, config.loss)
                    .map_err(diverged(epoch))?
                    .loss,
            )
        } else {
            None
        };
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            seconds: if config.record_wall_time {
                started.elapsed().as_secs_f64()
            } else {
                0.0
            },
        });

        if let Some(v) = val_loss {
            match &best {
                Some((b, _, _)) if v >= *b => stale += 1,
                _ => {
                    best = Some((v, epoch, theta.clone()));
                    stale = 0;
                }
            }
            if config.patience.is_some_and(|p| stale >= p) {
                history.stopped_early = true;
                break;
            }
        }
    }

    history.best_epoch = best.as_ref().map_or(history.epochs.len(), |b| b.1);
    if history.stopped_early {
        if let Some((_, _, best_theta)) = &best {
            params.assign_flat(best_theta)?;
        }
    }
    Ok((params, history))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub loss_kind: LossKind,
    pub loss: f64,
    /// Euclidean distance per sequence, in batch order.
    pub distances: Vec<f64>,
    /// `[num_seq × max_len]`, zero at padded steps.
    pub predictions: Vec<f64>,
}

/// Eval-mode forward pass and masked loss over a batch.
pub fn evaluate(params: &ModelParams, batch: &PaddedBatch, loss: LossKind) -> Result<Metrics> {
    if batch.num_seq == 0 {
        return Err(Error::invalid("cannot evaluate an empty dataset"));
    }
    if params.spec.output_width() != 1 {
        return Err(Error::shape("sequence regression needs a model with output width 1"));
    }
    let mut predictions = model_forward(params, batch, Mode::Eval)?;
    for (p, &m) in predictions.iter_mut().zip(&batch.mask) {
        if !m {
            *p = 0.0;
        }
    }
    let value = match loss {
        LossKind::Mse => masked_mse(&predictions, &batch.targets, &batch.mask)?,
        LossKind::Euclidean => masked_euclidean(&predictions, &batch.targets, &batch.mask, batch.max_len)?,
    };
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("{loss} evaluation loss")));
    }
    let distances = sequence_distances(&predictions, &batch.targets, &batch.mask, batch.max_len)?;
    Ok(Metrics {
        loss_kind: loss,
        loss: value,
        distances,
        predictions,
    })
}

/// Eval-mode predictions for `ids`, normalized with the checkpoint's
/// statistics (identity when it has none).
pub fn predict_records(
    checkpoint: &Checkpoint,
    records: &[PourRecord],
    ids: &[usize],
    loss: LossKind,
) -> Result<Metrics> {
    let width = checkpoint.spec().input_width;
    if width != FEATURE_WIDTH {
        return Err(Error::shape(format!(
            "checkpoint expects {width} input features, dataset rows have {FEATURE_WIDTH}"
        )));
    }
    if let Some(&id) = ids.iter().find(|&&id| id >= records.len()) {
        return Err(Error::invalid(format!(
            "unknown record id {id} (dataset has {} records)",
            records.len()
        )));
    }
    let normalizer = checkpoint
        .normalizer
        .clone()
        .unwrap_or_else(|| Normalizer::identity(FEATURE_WIDTH));
    let picked: Vec<&PourRecord> = ids.iter().map(|&id| &records[id]).collect();
    let max_len = picked.iter().map(|r| r.len()).max().unwrap_or(1);
    let batch = normalizer.pad_records(&picked, max_len)?;
    evaluate(&checkpoint.params, &batch, loss)
}
