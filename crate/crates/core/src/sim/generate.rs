use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::geometry::{cup_shell_weight, quasi_static_pour, weight_from_volume, CupGeometry};
use super::trajectory::{gen_theta_trajectory, physical_tilt, TrajectoryConfig};
use crate::data::{validate_record, PourRecord};
use crate::rng::rng_from;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.hi > self.lo {
            rng.random_range(self.lo..=self.hi)
        } else {
            self.lo
        }
    }

    fn scaled(self, k: f64) -> Self {
        Interval::new(self.lo * k, self.hi * k)
    }
}

/// Sampling intervals for the static trial parameters. Dimensions in mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimRanges {
    pub d_cm: Interval,
    pub h_cm: Interval,
    pub d_cup: Interval,
    pub h_cup: Interval,
    pub rho_rel: Interval,
    /// Initial liquid volume as a share of the pouring cup's capacity.
    pub fill: Interval,
}

impl Default for SimRanges {
    fn default() -> Self {
        Self::in_distribution()
    }
}

impl SimRanges {
    /// Everyday cups, the regime training data comes from.
    pub fn in_distribution() -> Self {
        SimRanges {
            d_cm: Interval::new(60.0, 100.0),
            h_cm: Interval::new(80.0, 140.0),
            d_cup: Interval::new(70.0, 110.0),
            h_cup: Interval::new(80.0, 150.0),
            rho_rel: Interval::new(0.8, 1.4),
            fill: Interval::new(0.4, 0.9),
        }
    }

    /// All cup dimensions doubled: disjoint from [`Self::in_distribution`]
    /// in every dimension, for generalization tests.
    pub fn out_of_distribution() -> Self {
        let base = Self::in_distribution();
        SimRanges {
            d_cm: base.d_cm.scaled(2.0),
            h_cm: base.h_cm.scaled(2.0),
            d_cup: base.d_cup.scaled(2.0),
            h_cup: base.h_cup.scaled(2.0),
            ..base
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("d_cm", self.d_cm),
            ("h_cm", self.h_cm),
            ("d_cup", self.d_cup),
            ("h_cup", self.h_cup),
            ("rho_rel", self.rho_rel),
            ("fill", self.fill),
        ];
        for (name, iv) in fields {
            if !(iv.lo > 0.0 && iv.lo <= iv.hi && iv.hi.is_finite()) {
                return Err(Error::invalid(format!(
                    "range {name} = [{}, {}] must be non-empty and positive",
                    iv.lo, iv.hi
                )));
            }
        }
        if self.fill.hi > 1.0 {
            return Err(Error::invalid(format!("fill fraction {} exceeds 1", self.fill.hi)));
        }
        Ok(())
    }
}

/// Simulates `n` trials. Record `i` draws from its own stream derived from
/// `(seed, i)`, so the output does not depend on generation order.
pub fn generate_dataset(n: usize, ranges: &SimRanges, config: &TrajectoryConfig, seed: u64) -> Result<Vec<PourRecord>> {
    if n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    ranges.validate()?;
    config.validate()?;
    (0..n).map(|i| simulate_trial(i, ranges, config, seed)).collect()
}

fn simulate_trial(index: usize, ranges: &SimRanges, config: &TrajectoryConfig, seed: u64) -> Result<PourRecord> {
    let mut rng = rng_from(seed, &[index as u64]);
    let d_cm = ranges.d_cm.sample(&mut rng);
    let h_cm = ranges.h_cm.sample(&mut rng);
    let d_cup = ranges.d_cup.sample(&mut rng);
    let h_cup = ranges.h_cup.sample(&mut rng);
    let rho_rel = ranges.rho_rel.sample(&mut rng);
    let fill = ranges.fill.sample(&mut rng);

    let cup = CupGeometry::from_diameter(d_cm, h_cm)?;
    let theta = gen_theta_trajectory(config, &mut rng)?;
    let tilts: Vec<f64> = theta.iter().map(|&t| physical_tilt(t)).collect();
    let volumes = quasi_static_pour(&cup, &tilts, fill * cup.full_volume())?;

    let f_empty = cup_shell_weight(&cup);
    let clean = volumes
        .iter()
        .map(|&v| weight_from_volume(v, rho_rel, f_empty))
        .collect::<Result<Vec<_>>>()?;
    let f_init = clean[0];
    let f_final = clean[clean.len() - 1];

    let weight = if config.noise_sigma > 0.0 {
        let noise = Normal::new(0.0, config.noise_sigma).map_err(|e| Error::invalid(format!("noise sigma: {e}")))?;
        clean.iter().map(|&w| w + noise.sample(&mut rng)).collect()
    } else {
        clean
    };

    let record = PourRecord {
        theta,
        weight,
        f_init,
        f_empty,
        f_final,
        d_cup,
        h_cup,
        d_cm,
        h_cm,
        rho_rel,
    };
    let violations = validate_record(&record);
    if !violations.is_empty() {
        return Err(Error::InvalidRecord { id: index, violations });
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short() -> TrajectoryConfig {
        TrajectoryConfig {
            min_len: 30,
            max_len: 60,
            ..TrajectoryConfig::default()
        }
    }

    #[test]
    fn generates_valid_records_in_range() {
        let records = generate_dataset(5, &SimRanges::default(), &short(), 3).unwrap();
        assert_eq!(records.len(), 5);
        for r in &records {
            assert!(validate_record(r).is_empty());
            assert!((30..=60).contains(&r.len()));
        }
    }

    #[test]
    fn noise_free_weights_are_monotone_and_end_at_f_final() {
        let cfg = TrajectoryConfig {
            noise_sigma: 0.0,
            ..short()
        };
        for r in generate_dataset(20, &SimRanges::default(), &cfg, 11).unwrap() {
            assert!(r.weight.windows(2).all(|w| w[1] <= w[0]));
            assert_eq!(*r.weight.last().unwrap(), r.f_final);
            assert_eq!(r.weight[0], r.f_init);
            assert!(r.weight.iter().all(|&w| r.f_empty <= w && w <= r.f_init));
        }
    }

    #[test]
    fn liquid_actually_pours() {
        let cfg = TrajectoryConfig {
            noise_sigma: 0.0,
            ..short()
        };
        let records = generate_dataset(20, &SimRanges::default(), &cfg, 5).unwrap();
        let poured = records.iter().filter(|r| r.f_final < r.f_init).count();
        assert!(poured >= 15, "only {poured} of 20 trials poured anything");
    }

    #[test]
    fn out_of_distribution_cups_lie_outside_training_ranges() {
        let train = SimRanges::in_distribution();
        let records = generate_dataset(10, &SimRanges::out_of_distribution(), &short(), 8).unwrap();
        for r in records {
            assert!(!train.d_cm.contains(r.d_cm));
            assert!(!train.h_cm.contains(r.h_cm));
        }
    }

    #[test]
    fn order_independent_streams() {
        let all = generate_dataset(6, &SimRanges::default(), &short(), 21).unwrap();
        let again = generate_dataset(6, &SimRanges::default(), &short(), 21).unwrap();
        assert_eq!(all, again);
        let single = simulate_trial(4, &SimRanges::default(), &short(), 21).unwrap();
        assert_eq!(single, all[4]);
    }

    #[test]
    fn invalid_inputs() {
        assert!(generate_dataset(0, &SimRanges::default(), &short(), 0).is_err());
        let bad = SimRanges {
            fill: Interval::new(0.5, 1.5),
            ..SimRanges::default()
        };
        assert!(generate_dataset(1, &bad, &short(), 0).is_err());
        let bad = SimRanges {
            d_cm: Interval::new(10.0, 5.0),
            ..SimRanges::default()
        };
        assert!(bad.validate().is_err());
    }
}
