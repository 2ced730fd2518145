//! Line-delimited JSON dataset files: one [`PourRecord`] object per line.

use std::fs;
use std::path::Path;

use super::{validate_record, PourRecord};
use crate::{Error, Result};

pub fn write_dataset_string(records: &[PourRecord]) -> String {
    let mut out = String::new();
    for record in records {
        // PourRecord holds only f64s and Vec<f64>; serialization cannot fail
        // for finite values, and shortest round-trip formatting keeps it lossless.
        out.push_str(&serde_json::to_string(record).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn serialize_dataset(records: &[PourRecord], path: &Path) -> Result<()> {
    if let Some((id, violations)) = records
        .iter()
        .enumerate()
        .map(|(id, r)| (id, validate_record(r)))
        .find(|(_, v)| !v.is_empty())
    {
        return Err(Error::InvalidRecord { id, violations });
    }
    fs::write(path, write_dataset_string(records)).map_err(|e| Error::io(path, e))
}

pub fn parse_dataset(path: &Path) -> Result<Vec<PourRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset_str(&text, path)
}

/// Parses dataset text; `origin` is only used in error messages.
pub fn parse_dataset_str(text: &str, origin: &Path) -> Result<Vec<PourRecord>> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let record: PourRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        let violations = validate_record(&record);
        if !violations.is_empty() {
            return Err(Error::InvalidRecord {
                id: records.len(),
                violations,
            });
        }
        records.push(record);
    }
    Ok(records)
}
