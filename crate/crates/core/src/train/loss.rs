use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::nn::check_len;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Mean of squared residuals over all valid steps.
    Mse,
    /// Per-sequence `√Σ residual²` over valid steps, averaged over sequences.
    Euclidean,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Mse => "mse",
            LossKind::Euclidean => "euclidean",
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(LossKind::Mse),
            "euclidean" => Ok(LossKind::Euclidean),
            other => Err(Error::invalid(format!("unknown loss '{other}'"))),
        }
    }
}

pub fn masked_mse(pred: &[f64], target: &[f64], mask: &[bool]) -> Result<f64> {
    check_len("predictions", pred.len(), mask.len())?;
    check_len("targets", target.len(), mask.len())?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for ((&p, &y), &m) in pred.iter().zip(target).zip(mask) {
        if m {
            sum += (p - y) * (p - y);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::invalid("mask has no valid elements"));
    }
    Ok(sum / count as f64)
}

/// Euclidean distance of every `steps`-long sequence over its valid steps.
pub fn sequence_distances(pred: &[f64], target: &[f64], mask: &[bool], steps: usize) -> Result<Vec<f64>> {
    check_len("predictions", pred.len(), mask.len())?;
    check_len("targets", target.len(), mask.len())?;
    if steps == 0 || !mask.len().is_multiple_of(steps) {
        return Err(Error::shape(format!(
            "{} values do not split into sequences of {steps}",
            mask.len()
        )));
    }
    pred.chunks(steps)
        .zip(target.chunks(steps))
        .zip(mask.chunks(steps))
        .enumerate()
        .map(|(s, ((p, y), m))| {
            if !m.iter().any(|&v| v) {
                return Err(Error::invalid(format!("sequence {s} has an empty mask")));
            }
            let sq: f64 = p
                .iter()
                .zip(y)
                .zip(m)
                .filter(|(_, &v)| v)
                .map(|((a, b), _)| (a - b) * (a - b))
                .sum();
            Ok(sq.sqrt())
        })
        .collect()
}

pub fn masked_euclidean(pred: &[f64], target: &[f64], mask: &[bool], steps: usize) -> Result<f64> {
    let d = sequence_distances(pred, target, mask, steps)?;
    Ok(d.iter().sum::<f64>() / d.len() as f64)
}

/// Loss contribution of one sequence and its gradient with respect to the
/// predictions. `valid_total` is the batch's valid-step count (MSE) and
/// `num_seq` the batch's sequence count (Euclidean), so contributions sum
/// to the batch loss.
pub fn loss_and_output_grad(
    kind: LossKind,
    pred: &[f64],
    target: &[f64],
    mask: &[bool],
    valid_total: usize,
    num_seq: usize,
) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; pred.len()];
    match kind {
        LossKind::Mse => {
            let n = valid_total as f64;
            let mut sum = 0.0;
            for (t, ((&p, &y), &m)) in pred.iter().zip(target).zip(mask).enumerate() {
                if m {
                    sum += (p - y) * (p - y);
                    grad[t] = 2.0 * (p - y) / n;
                }
            }
            (sum / n, grad)
        }
        LossKind::Euclidean => {
            let n = num_seq as f64;
            let sq: f64 = pred
                .iter()
                .zip(target)
                .zip(mask)
                .filter(|(_, &m)| m)
                .map(|((p, y), _)| (p - y) * (p - y))
                .sum();
            let d = sq.sqrt();
            // at d = 0 the subgradient 0 is used
            if d > 0.0 {
                for (t, ((&p, &y), &m)) in pred.iter().zip(target).zip(mask).enumerate() {
                    if m {
                        grad[t] = (p - y) / (d * n);
                    }
                }
            }
            (d / n, grad)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_examples() {
        assert_eq!(masked_mse(&[1.0, 2.0], &[0.0, 0.0], &[true, true]).unwrap(), 2.5);
        assert_eq!(masked_mse(&[3.0, 4.0], &[3.0, 4.0], &[true, true]).unwrap(), 0.0);
        let padded = masked_mse(&[1.0, 2.0, 99.0, -7.0], &[0.0; 4], &[true, true, false, false]).unwrap();
        assert_eq!(padded, 2.5);
        assert!(masked_mse(&[1.0], &[0.0], &[false]).is_err());
    }

    #[test]
    fn euclidean_examples() {
        let d = masked_euclidean(&[1.0, 2.0, 2.0, 5.0], &[0.0; 4], &[true, true, true, false], 4).unwrap();
        assert_eq!(d, 3.0);
        let two = masked_euclidean(&[3.0, 0.0, 4.0, 0.0], &[0.0; 4], &[true; 4], 2).unwrap();
        assert_eq!(two, 3.5);
        assert_eq!(
            masked_euclidean(&[1.0, 2.0], &[1.0, 2.0], &[true, true], 2).unwrap(),
            0.0
        );
        assert!(masked_euclidean(&[1.0, 2.0], &[0.0; 2], &[true, false], 1).is_err());
    }

    #[test]
    fn duplicating_sequences_keeps_the_mean() {
        let pred = [0.3, 0.9, 1.4, -0.2, 0.0, 0.0];
        let target = [0.0, 1.0, 1.0, 0.5, 0.0, 0.0];
        let mask = [true, true, true, true, true, false];
        let one = masked_euclidean(&pred, &target, &mask, 3).unwrap();
        let dup = |v: &[f64]| [v, v].concat();
        let twice = masked_euclidean(&dup(&pred), &dup(&target), &[mask, mask].concat(), 3).unwrap();
        assert!((one - twice).abs() < 1e-15);
    }

    #[test]
    fn per_sequence_contributions_sum_to_batch_loss() {
        let pred = [0.3, 0.9, 1.4, -0.2, 0.7, 0.1];
        let target = [0.0, 1.0, 1.0, 0.5, 0.0, 0.0];
        let mask = [true, true, false, true, true, true];
        for kind in [LossKind::Mse, LossKind::Euclidean] {
            let total: f64 = (0..2)
                .map(|s| {
                    loss_and_output_grad(
                        kind,
                        &pred[s * 3..s * 3 + 3],
                        &target[s * 3..s * 3 + 3],
                        &mask[s * 3..s * 3 + 3],
                        5,
                        2,
                    )
                    .0
                })
                .sum();
            let whole = match kind {
                LossKind::Mse => masked_mse(&pred, &target, &mask).unwrap(),
                LossKind::Euclidean => masked_euclidean(&pred, &target, &mask, 3).unwrap(),
            };
            assert!((total - whole).abs() < 1e-15, "{kind}");
        }
    }

    #[test]
    fn output_gradients_match_differences() {
        let pred = [0.3, 0.9, 1.4, -0.2];
        let target = [0.0, 1.0, 1.0, 0.5];
        let mask = [true, true, true, false];
        for kind in [LossKind::Mse, LossKind::Euclidean] {
            let (_, g) = loss_and_output_grad(kind, &pred, &target, &mask, 3, 1);
            for t in 0..4 {
                let h = 1e-6;
                let (mut a, mut b) = (pred, pred);
                a[t] += h;
                b[t] -= h;
                let fa = loss_and_output_grad(kind, &a, &target, &mask, 3, 1).0;
                let fb = loss_and_output_grad(kind, &b, &target, &mask, 3, 1).0;
                assert!(((fa - fb) / (2.0 * h) - g[t]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("mse".parse::<LossKind>().unwrap(), LossKind::Mse);
        assert_eq!(LossKind::Euclidean.to_string(), "euclidean");
        assert!("l1".parse::<LossKind>().is_err());
    }
}
