use std::path::Path;

use crate::nn::{Activation, CellKind};
use crate::train::LossKind;
use crate::{Error, Result};

/// Seven training combinations: LSTM/GRU cells, MSE/Euclidean losses,
/// linear/relu dense activations, 500–2000 epochs.
pub const DEFAULT_GRIDSPEC: &str = include_str!("default.grid");

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCombo {
    pub cell: CellKind,
    pub loss: LossKind,
    pub activation: Activation,
    pub epochs: usize,
}

impl GridCombo {
    /// `max(1, round(epochs · scale))`.
    pub fn scaled_epochs(&self, scale: f64) -> usize {
        ((self.epochs as f64 * scale).round() as usize).max(1)
    }
}

/// One combination per line: `cell loss activation epochs`, whitespace
/// separated; `#` starts a comment.
pub fn parse_gridspec(text: &str, origin: &Path) -> Result<Vec<GridCombo>> {
    let mut combos = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: n + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [cell, loss, activation, epochs] = fields[..] else {
            return Err(err(format!(
                "expected 4 fields (cell loss activation epochs), got {}",
                fields.len()
            )));
        };
        let activation: Activation = activation.parse().map_err(|e: Error| err(e.to_string()))?;
        if !matches!(activation, Activation::Linear | Activation::Relu) {
            return Err(err(format!(
                "dense activation must be linear or relu, got {activation}"
            )));
        }
        let epochs: usize = epochs.parse().map_err(|_| err(format!("bad epoch count '{epochs}'")))?;
        if epochs == 0 {
            return Err(err("epochs must be >= 1".into()));
        }
        combos.push(GridCombo {
            cell: cell.parse().map_err(|e: Error| err(e.to_string()))?,
            loss: loss.parse().map_err(|e: Error| err(e.to_string()))?,
            activation,
            epochs,
        });
    }
    if combos.is_empty() {
        return Err(Error::Parse {
            path: origin.to_path_buf(),
            line: 0,
            message: "grid has no combinations".into(),
        });
    }
    Ok(combos)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_rows() {
        let combos = parse_gridspec(DEFAULT_GRIDSPEC, Path::new("default")).unwrap();
        let rows: Vec<String> = combos
            .iter()
            .map(|c| format!("{} {} {} {}", c.cell, c.loss, c.activation, c.epochs))
            .collect();
        assert_eq!(
            rows,
            [
                "lstm mse linear 500",
                "lstm euclidean relu 500",
                "lstm mse relu 1000",
                "lstm euclidean linear 1500",
                "gru euclidean relu 500",
                "gru mse relu 500",
                "lstm euclidean relu 2000",
            ]
        );
    }

    #[test]
    fn epoch_scaling() {
        let c = GridCombo {
            cell: CellKind::Lstm,
            loss: LossKind::Mse,
            activation: Activation::Relu,
            epochs: 2000,
        };
        assert_eq!(c.scaled_epochs(0.01), 20);
        assert_eq!(c.scaled_epochs(1e-6), 1);
        assert_eq!(GridCombo { epochs: 500, ..c }.scaled_epochs(0.01), 5);
    }

    #[test]
    fn rejects_bad_rows() {
        let p = Path::new("g");
        assert!(parse_gridspec("lstm mse relu\n", p).is_err());
        assert!(parse_gridspec("rnn mse relu 5\n", p).is_err());
        assert!(parse_gridspec("lstm mse tanh 5\n", p).is_err());
        assert!(parse_gridspec("lstm mse relu 0\n", p).is_err());
        assert!(parse_gridspec("# nothing\n", p).is_err());
    }
}
