//! Pouring-trial records and everything needed to turn them into network
//! input: feature rows, padding/masking, splits and normalization.

mod io;
mod normalize;
mod pad;
mod split;

pub use io::{parse_dataset, parse_dataset_str, serialize_dataset, write_dataset_string};
pub use normalize::{fit_normalizer, Affine, Normalizer};
pub use pad::{pad_and_mask, PaddedBatch, DEFAULT_MAX_LEN};
pub use split::{split_dataset, SplitManifest, SplitRatios};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Number of per-timestep input features.
pub const FEATURE_WIDTH: usize = 9;

/// Column order of a feature row. Frozen: checkpoints depend on it.
pub const FEATURE_NAMES: [&str; FEATURE_WIDTH] = [
    "theta", "f_init", "f_empty", "f_final", "d_cup", "h_cup", "d_cm", "h_cm", "rho_rel",
];

pub type FeatureRow = [f64; FEATURE_WIDTH];

/// One pouring trial.
///
/// `theta` is in degrees (0 upright, negative as the cup tilts), weights
/// in lbf, cup dimensions in mm. `rho_rel` is liquid density over water
/// density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PourRecord {
    pub theta: Vec<f64>,
    pub weight: Vec<f64>,
    pub f_init: f64,
    pub f_empty: f64,
    pub f_final: f64,
    pub d_cup: f64,
    pub h_cup: f64,
    pub d_cm: f64,
    pub h_cm: f64,
    pub rho_rel: f64,
}

impl PourRecord {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    fn statics(&self) -> [f64; FEATURE_WIDTH - 1] {
        [
            self.f_init,
            self.f_empty,
            self.f_final,
            self.d_cup,
            self.h_cup,
            self.d_cm,
            self.h_cm,
            self.rho_rel,
        ]
    }
}

/// Lists every invariant the record breaks. An empty list means valid.
pub fn validate_record(record: &PourRecord) -> Vec<String> {
    let mut violations = Vec::new();
    if record.theta.len() != record.weight.len() {
        violations.push("length mismatch".to_string());
    }
    if record.theta.is_empty() {
        violations.push("length must be >= 1".to_string());
    }
    if record.theta.iter().any(|v| !v.is_finite()) {
        violations.push("theta must be finite".to_string());
    }
    if record.weight.iter().any(|v| !v.is_finite()) {
        violations.push("weight must be finite".to_string());
    }

    let scalars = [
        ("f_init", record.f_init),
        ("f_empty", record.f_empty),
        ("f_final", record.f_final),
        ("d_cup", record.d_cup),
        ("h_cup", record.h_cup),
        ("d_cm", record.d_cm),
        ("h_cm", record.h_cm),
        ("rho_rel", record.rho_rel),
    ];
    for (name, value) in scalars {
        if !value.is_finite() {
            violations.push(format!("{name} must be finite"));
        }
    }
    for (name, value) in &scalars[3..] {
        if value.is_finite() && *value <= 0.0 {
            violations.push(format!("{name} must be > 0"));
        }
    }
    if !(record.f_empty <= record.f_final && record.f_final <= record.f_init) {
        violations.push("f_empty <= f_final <= f_init violated".to_string());
    }
    violations
}

/// One row per timestep: `[theta_t, f_init, f_empty, f_final, d_cup, h_cup,
/// d_cm, h_cm, rho_rel]`. The target for row `t` is `weight[t]`.
pub fn build_features(record: &PourRecord) -> Result<Vec<FeatureRow>> {
    let violations = validate_record(record);
    if !violations.is_empty() {
        return Err(Error::InvalidRecord { id: 0, violations });
    }
    Ok(feature_rows(record))
}

/// [`build_features`] without validation.
pub fn feature_rows(record: &PourRecord) -> Vec<FeatureRow> {
    let statics = record.statics();
    record
        .theta
        .iter()
        .map(|&theta| {
            let mut row = [0.0; FEATURE_WIDTH];
            row[0] = theta;
            row[1..].copy_from_slice(&statics);
            row
        })
        .collect()
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn well_formed_record_has_no_violations() {
        assert!(validate_record(&ramp(5, 2.0)).is_empty());
    }

    #[test]
    fn length_mismatch_is_reported() {
        let r = record(vec![0.0; 5], vec![1.0; 4]);
        assert_eq!(validate_record(&r), vec!["length mismatch".to_string()]);
    }

    #[test]
    fn negative_diameter_is_reported() {
        let mut r = ramp(3, 1.0);
        r.d_cup = -10.0;
        assert_eq!(validate_record(&r), vec!["d_cup must be > 0".to_string()]);
    }

    #[test]
    fn weight_ordering_and_finiteness() {
        let mut r = ramp(3, 1.0);
        r.f_final = 2.0;
        assert_eq!(validate_record(&r), vec!["f_empty <= f_final <= f_init violated"]);
        let mut r = ramp(3, 1.0);
        r.rho_rel = f64::NAN;
        let v = validate_record(&r);
        assert!(v.contains(&"rho_rel must be finite".to_string()));
        let r = record(vec![], vec![]);
        assert_eq!(validate_record(&r), vec!["length must be >= 1"]);
    }

    #[test]
    fn features_shape_and_order() {
        let r = ramp(3, 1.0);
        let rows = build_features(&r).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|row| row.len() == FEATURE_WIDTH));
        assert_eq!(rows[2], [-2.0, 1.5, 0.2, 0.7, 80.0, 100.0, 70.0, 110.0, 1.0]);
    }

    #[test]
    fn zero_statics_repeat_theta_only() {
        let r = PourRecord {
            theta: vec![1.0, 2.0],
            weight: vec![0.0, 0.0],
            f_init: 0.0,
            f_empty: 0.0,
            f_final: 0.0,
            d_cup: 0.0,
            h_cup: 0.0,
            d_cm: 0.0,
            h_cm: 0.0,
            rho_rel: 0.0,
        };
        let mut first = [0.0; FEATURE_WIDTH];
        first[0] = 1.0;
        let mut second = [0.0; FEATURE_WIDTH];
        second[0] = 2.0;
        assert_eq!(feature_rows(&r), vec![first, second]);
        // zero diameters are not a valid trial
        assert!(build_features(&r).is_err());
    }
}
