use super::{feature_rows, validate_record, PourRecord, FEATURE_WIDTH};
use crate::{Error, Result};

/// Padding length used when none is given; covers the longest recorded trial.
pub const DEFAULT_MAX_LEN: usize = 1099;

/// Rectangular, zero-padded view of a set of sequences.
///
/// `features` is `[num_seq × max_len × width]`, `targets` and `mask` are
/// `[num_seq × max_len]`, all row-major. Features and targets are exactly
/// zero wherever the mask is off.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedBatch {
    pub num_seq: usize,
    pub max_len: usize,
    pub width: usize,
    pub features: Vec<f64>,
    pub targets: Vec<f64>,
    pub mask: Vec<bool>,
    pub lengths: Vec<usize>,
}

/// Borrowed slices for one sequence of a batch.
#[derive(Debug, Clone, Copy)]
pub struct SequenceView<'a> {
    pub features: &'a [f64],
    pub targets: &'a [f64],
    pub mask: &'a [bool],
    pub width: usize,
}

impl SequenceView<'_> {
    pub fn steps(&self) -> usize {
        self.mask.len()
    }
}

impl PaddedBatch {
    /// Pads pre-built `(rows, targets)` pairs. Each pair is one sequence;
    /// rows are `width` wide and flattened.
    pub fn from_sequences(sequences: &[(Vec<f64>, Vec<f64>)], width: usize, max_len: usize) -> Result<Self> {
        if width == 0 {
            return Err(Error::invalid("feature width must be >= 1"));
        }
        let num_seq = sequences.len();
        let mut batch = PaddedBatch {
            num_seq,
            max_len,
            width,
            features: vec![0.0; num_seq * max_len * width],
            targets: vec![0.0; num_seq * max_len],
            mask: vec![false; num_seq * max_len],
            lengths: Vec::with_capacity(num_seq),
        };
        for (s, (rows, targets)) in sequences.iter().enumerate() {
            let len = targets.len();
            if rows.len() != len * width {
                return Err(Error::shape(format!(
                    "sequence {s}: {} feature values for {len} targets of width {width}",
                    rows.len()
                )));
            }
            if len > max_len {
                return Err(Error::RecordTooLong {
                    id: s,
                    length: len,
                    max_len,
                });
            }
            let base = s * max_len;
            batch.features[base * width..(base + len) * width].copy_from_slice(rows);
            batch.targets[base..base + len].copy_from_slice(targets);
            batch.mask[base..base + len].fill(true);
            batch.lengths.push(len);
        }
        Ok(batch)
    }

    pub fn sequence(&self, s: usize) -> SequenceView<'_> {
        let steps = s * self.max_len..(s + 1) * self.max_len;
        SequenceView {
            features: &self.features[steps.start * self.width..steps.end * self.width],
            targets: &self.targets[steps.clone()],
            mask: &self.mask[steps],
            width: self.width,
        }
    }

    /// Same sequences padded to a longer `max_len`.
    pub fn repad(&self, max_len: usize) -> Result<Self> {
        if max_len < self.max_len {
            return Err(Error::invalid(format!(
                "cannot shrink padding from {} to {max_len}",
                self.max_len
            )));
        }
        let w = self.width;
        let mut out = PaddedBatch {
            num_seq: self.num_seq,
            max_len,
            width: w,
            features: vec![0.0; self.num_seq * max_len * w],
            targets: vec![0.0; self.num_seq * max_len],
            mask: vec![false; self.num_seq * max_len],
            lengths: self.lengths.clone(),
        };
        for s in 0..self.num_seq {
            let (src, dst) = (s * self.max_len, s * max_len);
            let n = self.max_len;
            out.features[dst * w..(dst + n) * w].copy_from_slice(&self.features[src * w..(src + n) * w]);
            out.targets[dst..dst + n].copy_from_slice(&self.targets[src..src + n]);
            out.mask[dst..dst + n].copy_from_slice(&self.mask[src..src + n]);
        }
        Ok(out)
    }

    /// Subset of sequences, in the order given.
    pub fn select(&self, ids: &[usize]) -> Self {
        let w = self.width;
        let l = self.max_len;
        let mut out = PaddedBatch {
            num_seq: ids.len(),
            max_len: l,
            width: w,
            features: Vec::with_capacity(ids.len() * l * w),
            targets: Vec::with_capacity(ids.len() * l),
            mask: Vec::with_capacity(ids.len() * l),
            lengths: Vec::with_capacity(ids.len()),
        };
        for &s in ids {
            let view = self.sequence(s);
            out.features.extend_from_slice(view.features);
            out.targets.extend_from_slice(view.targets);
            out.mask.extend_from_slice(view.mask);
            out.lengths.push(self.lengths[s]);
        }
        out
    }

    /// Drops trailing padding shared by every sequence.
    pub fn trimmed(&self) -> Self {
        let l = self.lengths.iter().copied().max().unwrap_or(0).max(1);
        if l >= self.max_len {
            return self.clone();
        }
        let w = self.width;
        let mut out = PaddedBatch {
            num_seq: self.num_seq,
            max_len: l,
            width: w,
            features: Vec::with_capacity(self.num_seq * l * w),
            targets: Vec::with_capacity(self.num_seq * l),
            mask: Vec::with_capacity(self.num_seq * l),
            lengths: self.lengths.clone(),
        };
        for s in 0..self.num_seq {
            let view = self.sequence(s);
            out.features.extend_from_slice(&view.features[..l * w]);
            out.targets.extend_from_slice(&view.targets[..l]);
            out.mask.extend_from_slice(&view.mask[..l]);
        }
        out
    }

    pub fn valid_count(&self) -> usize {
        self.lengths.iter().sum()
    }
}

/// Zero-pads raw (unnormalized) records to `max_len`.
pub fn pad_and_mask(records: &[PourRecord], max_len: usize) -> Result<PaddedBatch> {
    let mut sequences = Vec::with_capacity(records.len());
    for (id, record) in records.iter().enumerate() {
        let violations = validate_record(record);
        if !violations.is_empty() {
            return Err(Error::InvalidRecord { id, violations });
        }
        if record.len() > max_len {
            return Err(Error::RecordTooLong {
                id,
                length: record.len(),
                max_len,
            });
        }
        let rows: Vec<f64> = feature_rows(record).into_iter().flatten().collect();
        sequences.push((rows, record.weight.clone()));
    }
    PaddedBatch::from_sequences(&sequences, FEATURE_WIDTH, max_len)
}
