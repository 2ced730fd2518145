use serde::{Deserialize, Serialize};

use super::{feature_rows, PaddedBatch, PourRecord, FEATURE_WIDTH};
use crate::{Error, Result};

/// `y = (x - offset) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub offset: f64,
    pub scale: f64,
}

impl Affine {
    pub const IDENTITY: Affine = Affine {
        offset: 0.0,
        scale: 1.0,
    };

    /// Min-max map of `[lo, hi]` onto `[0, 1]`; a constant maps to 0.
    fn from_range(lo: f64, hi: f64) -> Self {
        if hi > lo {
            Affine {
                offset: lo,
                scale: hi - lo,
            }
        } else {
            Affine { offset: lo, scale: 1.0 }
        }
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        (x - self.offset) / self.scale
    }

    #[inline]
    pub fn invert(&self, y: f64) -> f64 {
        y * self.scale + self.offset
    }
}

/// Per-feature and target min-max scaling fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub features: Vec<Affine>,
    pub target: Affine,
}

impl Normalizer {
    pub fn identity(width: usize) -> Self {
        Normalizer {
            features: vec![Affine::IDENTITY; width],
            target: Affine::IDENTITY,
        }
    }

    pub fn width(&self) -> usize {
        self.features.len()
    }

    pub fn apply_row(&self, row: &mut [f64]) {
        for (x, a) in row.iter_mut().zip(&self.features) {
            *x = a.apply(*x);
        }
    }

    pub fn invert_row(&self, row: &mut [f64]) {
        for (x, a) in row.iter_mut().zip(&self.features) {
            *x = a.invert(*x);
        }
    }

    /// Normalized, flattened feature rows and targets for one record.
    pub fn record_sequence(&self, record: &PourRecord) -> (Vec<f64>, Vec<f64>) {
        let mut rows: Vec<f64> = feature_rows(record).into_iter().flatten().collect();
        for row in rows.chunks_mut(FEATURE_WIDTH) {
            self.apply_row(row);
        }
        let targets = record.weight.iter().map(|&y| self.target.apply(y)).collect();
        (rows, targets)
    }

    /// Normalizes and pads records in one go.
    pub fn pad_records(&self, records: &[&PourRecord], max_len: usize) -> Result<PaddedBatch> {
        if self.width() != FEATURE_WIDTH {
            return Err(Error::shape(format!(
                "normalizer has width {}, records have {FEATURE_WIDTH}",
                self.width()
            )));
        }
        let sequences: Vec<_> = records.iter().map(|r| self.record_sequence(r)).collect();
        PaddedBatch::from_sequences(&sequences, FEATURE_WIDTH, max_len)
    }

    /// Normalizes an already padded batch; padded positions stay zero.
    pub fn apply_to_batch(&self, batch: &PaddedBatch) -> Result<PaddedBatch> {
        if batch.width != self.width() {
            return Err(Error::shape(format!(
                "normalizer has width {}, batch has {}",
                self.width(),
                batch.width
            )));
        }
        let mut out = batch.clone();
        for (step, &valid) in batch.mask.iter().enumerate() {
            if valid {
                self.apply_row(&mut out.features[step * batch.width..(step + 1) * batch.width]);
                out.targets[step] = self.target.apply(batch.targets[step]);
            }
        }
        Ok(out)
    }
}

/// Fits min-max statistics over the valid timesteps of `records[train_ids]`.
pub fn fit_normalizer(records: &[PourRecord], train_ids: &[usize]) -> Result<Normalizer> {
    if train_ids.is_empty() {
        return Err(Error::invalid("cannot fit a normalizer on an empty training split"));
    }
    let mut lo = [f64::INFINITY; FEATURE_WIDTH];
    let mut hi = [f64::NEG_INFINITY; FEATURE_WIDTH];
    let (mut t_lo, mut t_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &id in train_ids {
        let record = records
            .get(id)
            .ok_or_else(|| Error::invalid(format!("train id {id} out of range")))?;
        for row in feature_rows(record) {
            for (j, &v) in row.iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        for &y in &record.weight {
            t_lo = t_lo.min(y);
            t_hi = t_hi.max(y);
        }
    }
    let finite = lo.iter().chain(&hi).chain([&t_lo, &t_hi]).all(|v| v.is_finite());
    if !finite {
        return Err(Error::NonFinite("normalizer statistics".into()));
    }
    Ok(Normalizer {
        features: lo.iter().zip(&hi).map(|(&l, &h)| Affine::from_range(l, h)).collect(),
        target: Affine::from_range(t_lo, t_hi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::{ramp, record};
    use crate::data::pad_and_mask;
    use proptest::prelude::*;

    #[test]
    fn min_max_midpoint() {
        let a = Affine::from_range(0.0, 10.0);
        assert_eq!(a.apply(5.0), 0.5);
    }

    #[test]
    fn constant_feature_maps_to_zero() {
        let a = Affine::from_range(7.0, 7.0);
        assert_eq!(a.scale, 1.0);
        assert_eq!(a.apply(7.0), 0.0);
    }

    #[test]
    fn theta_range_from_training_records() {
        let records = vec![ramp(11, 1.0), ramp(3, 1.0)];
        let n = fit_normalizer(&records, &[0, 1]).unwrap();
        assert_eq!(
            n.features[0],
            Affine {
                offset: -10.0,
                scale: 10.0
            }
        );
        // rho_rel is constant across the fixtures
        assert_eq!(
            n.features[8],
            Affine {
                offset: 1.0,
                scale: 1.0
            }
        );
    }

    #[test]
    fn statistics_ignore_non_training_records() {
        let mut records = vec![ramp(5, 1.0), ramp(6, 2.0), ramp(7, 3.0)];
        let before = fit_normalizer(&records, &[0, 1]).unwrap();
        records[2].theta.iter_mut().for_each(|t| *t *= 100.0);
        records[2].d_cup = 9999.0;
        let after = fit_normalizer(&records, &[0, 1]).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn batch_padding_stays_zero() {
        let records = vec![ramp(3, 1.0), ramp(5, 1.0)];
        let norm = fit_normalizer(&records, &[0, 1]).unwrap();
        let batch = norm.apply_to_batch(&pad_and_mask(&records, 8).unwrap()).unwrap();
        for (step, &valid) in batch.mask.iter().enumerate() {
            if !valid {
                assert_eq!(batch.targets[step], 0.0);
                assert!(batch.features[step * 9..(step + 1) * 9].iter().all(|&v| v == 0.0));
            }
        }
        let refs: Vec<&PourRecord> = records.iter().collect();
        assert_eq!(norm.pad_records(&refs, 8).unwrap(), batch);
    }

    #[test]
    fn empty_training_split_is_rejected() {
        assert!(fit_normalizer(&[record(vec![0.0], vec![1.0])], &[]).is_err());
    }

    proptest! {
        #[test]
        fn apply_then_invert_round_trips(
            lo in -1e4f64..1e4, span in 1e-3f64..1e4, x in -1e5f64..1e5,
        ) {
            let a = Affine::from_range(lo, lo + span);
            let back = a.invert(a.apply(x));
            prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(lo.abs() + span));
        }
    }
}
