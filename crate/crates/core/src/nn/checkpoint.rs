//! Versioned plain-text checkpoints.
//!
//! ```text
//! pour-rnn-checkpoint 1
//! spec {"input_width":9,"layers":[...]}
//! normalizer {...}            (or `normalizer none`)
//! seed init 7
//! seed train 7
//! layer 0 lstm
//! array weights 1600
//! 1.2345678901234567e-1 ...
//! array bias 64
//! ...
//! end
//! ```
//!
//! Values use 17 significant digits so a save/load cycle is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::model::{ModelParams, ModelSpec};
use crate::data::Normalizer;
use crate::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &str = "pour-rnn-checkpoint";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub normalizer: Option<Normalizer>,
    pub init_seed: u64,
    pub train_seed: u64,
}

impl Checkpoint {
    pub fn spec(&self) -> &ModelSpec {
        &self.params.spec
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let spec = serde_json::to_string(&self.params.spec).expect("spec serializes");
        let _ = writeln!(out, "{MAGIC} {CHECKPOINT_VERSION}");
        let _ = writeln!(out, "spec {spec}");
        match &self.normalizer {
            Some(n) => {
                let _ = writeln!(
                    out,
                    "normalizer {}",
                    serde_json::to_string(n).expect("normalizer serializes")
                );
            }
            None => out.push_str("normalizer none\n"),
        }
        let _ = writeln!(out, "seed init {}", self.init_seed);
        let _ = writeln!(out, "seed train {}", self.train_seed);
        for (i, (layer, spec)) in self.params.layers.iter().zip(&self.params.spec.layers).enumerate() {
            let _ = writeln!(out, "layer {i} {}", spec.kind_name());
            for (name, values) in layer.arrays() {
                let _ = writeln!(out, "array {name} {}", values.len());
                let line: Vec<String> = values.iter().map(|v| format!("{v:.16e}")).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let err = |line: usize, message: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| err(0, format!("unexpected end of file, expected {what}")))
        };

        let (n, header) = next("header")?;
        let version = header
            .strip_prefix(MAGIC)
            .map(str::trim)
            .ok_or_else(|| err(n, "not a pour-rnn checkpoint".into()))?;
        if version != CHECKPOINT_VERSION.to_string() {
            return Err(err(n, format!("unsupported checkpoint version {version}")));
        }

        let (n, line) = next("spec")?;
        let spec: ModelSpec = line
            .strip_prefix("spec ")
            .ok_or_else(|| err(n, "expected `spec`".into()))
            .and_then(|s| serde_json::from_str(s).map_err(|e| err(n, e.to_string())))?;

        let (n, line) = next("normalizer")?;
        let normalizer = match line.strip_prefix("normalizer ") {
            Some("none") => None,
            Some(json) => Some(serde_json::from_str(json).map_err(|e| err(n, e.to_string()))?),
            None => return Err(err(n, "expected `normalizer`".into())),
        };

        let mut seed = |key: &str| -> Result<u64> {
            let (n, line) = next("seed")?;
            line.strip_prefix(&format!("seed {key} "))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| err(n, format!("expected `seed {key} <u64>`")))
        };
        let init_seed = seed("init")?;
        let train_seed = seed("train")?;

        let mut params = ModelParams::zeros(&spec).map_err(|e| err(2, e.to_string()))?;
        for (i, (layer, lspec)) in params.layers.iter_mut().zip(&spec.layers).enumerate() {
            let (n, line) = next("layer")?;
            if line != format!("layer {i} {}", lspec.kind_name()) {
                return Err(err(n, format!("expected `layer {i} {}`", lspec.kind_name())));
            }
            for array in layer.arrays_mut() {
                let (n, line) = next("array header")?;
                let count: usize = line
                    .strip_prefix("array ")
                    .and_then(|rest| rest.split_whitespace().nth(1))
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| err(n, "expected `array <name> <count>`".into()))?;
                if count != array.len() {
                    return Err(err(n, format!("array has {count} values, spec needs {}", array.len())));
                }
                let (n, line) = next("array values")?;
                let values = line
                    .split_whitespace()
                    .map(|v| v.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| err(n, e.to_string()))?;
                if values.len() != count {
                    return Err(err(n, format!("expected {count} values, found {}", values.len())));
                }
                array.copy_from_slice(&values);
            }
        }
        let (n, line) = next("end")?;
        if line != "end" {
            return Err(err(n, "expected `end`".into()));
        }
        Ok(Checkpoint {
            params,
            normalizer,
            init_seed,
            train_seed,
        })
    }
}
