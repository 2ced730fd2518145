use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::rng_from;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    /// Share of all records used for training.
    pub train: f64,
    /// Share of the non-training remainder used for validation.
    pub val_of_rest: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            val_of_rest: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub ratios: SplitRatios,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitManifest {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.val.len(), self.test.len())
    }

    pub fn total(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }
}

/// Shuffles record ids `0..n` with a seeded RNG, then takes
/// `floor(n * train)` for training and `floor(rest * val_of_rest)` of the
/// remainder for validation. Whatever is left is the test split.
pub fn split_dataset(n: usize, seed: u64, ratios: SplitRatios) -> Result<SplitManifest> {
    for (name, r) in [("train", ratios.train), ("val_of_rest", ratios.val_of_rest)] {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::invalid(format!("split ratio {name}={r} must lie in (0, 1)")));
        }
    }
    if n < 3 {
        return Err(Error::invalid(format!("need at least 3 records to split, got {n}")));
    }

    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut rng_from(seed, &[]));

    let n_train = (n as f64 * ratios.train).floor() as usize;
    let rest = n - n_train;
    let n_val = (rest as f64 * ratios.val_of_rest).floor() as usize;

    let test = ids.split_off(n_train + n_val);
    let val = ids.split_off(n_train);
    Ok(SplitManifest {
        seed,
        ratios,
        train: ids,
        val,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn corpus_sizes() {
        let m = split_dataset(1307, 0, SplitRatios::default()).unwrap();
        assert_eq!(m.sizes(), (1045, 183, 79));
    }

    #[test]
    fn ten_records() {
        let m = split_dataset(10, 5, SplitRatios::default()).unwrap();
        assert_eq!(m.sizes(), (8, 1, 1));
    }

    #[test]
    fn bad_inputs() {
        assert!(split_dataset(2, 0, SplitRatios::default()).is_err());
        assert!(split_dataset(
            10,
            0,
            SplitRatios {
                train: 1.0,
                val_of_rest: 0.5
            }
        )
        .is_err());
        assert!(split_dataset(
            10,
            0,
            SplitRatios {
                train: 0.5,
                val_of_rest: 0.0
            }
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn partition_is_disjoint_exhaustive_and_deterministic(n in 3usize..400, seed in any::<u64>()) {
            let a = split_dataset(n, seed, SplitRatios::default()).unwrap();
            let b = split_dataset(n, seed, SplitRatios::default()).unwrap();
            prop_assert_eq!(&a, &b);
            let mut all: Vec<usize> = a.train.iter().chain(&a.val).chain(&a.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }
}
