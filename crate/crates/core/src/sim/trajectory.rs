use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Shape of a synthetic rotation-angle series.
///
/// Angles follow the recorded convention: near 0° upright, negative as
/// the cup tilts toward pouring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub min_len: usize,
    pub max_len: usize,
    /// Share of the steps spent in the fast initial tilt, in (0, 0.3].
    pub ramp_fraction: f64,
    /// Tilt reached at the end of the ramp, degrees in (0, 90).
    pub final_tilt: (f64, f64),
    /// Half-width of the uniform wobble around the held tilt, degrees.
    pub jitter: f64,
    /// Gaussian sensor noise on the weight series, lbf.
    pub noise_sigma: f64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig {
            min_len: 400,
            max_len: 1099,
            ramp_fraction: 0.15,
            final_tilt: (55.0, 85.0),
            jitter: 1.5,
            noise_sigma: 0.01,
        }
    }
}

/// Largest start offset from upright, degrees.
const MAX_START_OFFSET: f64 = 2.0;

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid(msg));
        if self.min_len == 0 || self.min_len > self.max_len {
            return bad(format!("length range [{}, {}] is empty", self.min_len, self.max_len));
        }
        if !(self.ramp_fraction > 0.0 && self.ramp_fraction <= 0.3) {
            return bad(format!("ramp fraction {} outside (0, 0.3]", self.ramp_fraction));
        }
        let (lo, hi) = self.final_tilt;
        if !(lo > 0.0 && lo <= hi && hi < 90.0) {
            return bad(format!("final tilt range [{lo}, {hi}] outside (0, 90)"));
        }
        if !(self.jitter >= 0.0 && self.noise_sigma >= 0.0) {
            return bad("jitter and noise must be >= 0".into());
        }
        Ok(())
    }
}

/// Rotation angles for one trial: a start within ±2° of upright, a linear
/// ramp over the first `ceil(ramp_fraction · len)` steps down to
/// `-final_tilt`, then a hold with zero-mean wobble.
///
/// The start offset is drawn from `±min(jitter, 2°)`, so `jitter = 0`
/// yields an exact piecewise-linear series.
pub fn gen_theta_trajectory(config: &TrajectoryConfig, rng: &mut impl Rng) -> Result<Vec<f64>> {
    config.validate()?;
    let len = rng.random_range(config.min_len..=config.max_len);
    let (lo, hi) = config.final_tilt;
    let final_tilt = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let start_span = config.jitter.min(MAX_START_OFFSET);
    let start = if start_span > 0.0 {
        rng.random_range(-start_span..=start_span)
    } else {
        0.0
    };

    let ramp_steps = ((config.ramp_fraction * len as f64).ceil() as usize).clamp(1, len.max(2) - 1);
    let target = -final_tilt;
    let mut theta = Vec::with_capacity(len);
    for k in 0..len {
        let value = if k <= ramp_steps {
            start + (target - start) * k as f64 / ramp_steps as f64
        } else if config.jitter > 0.0 {
            target + rng.random_range(-config.jitter..=config.jitter)
        } else {
            target
        };
        theta.push(value);
    }
    Ok(theta)
}

/// Physical tilt from vertical for a recorded angle: `clamp(-θ, 0°, 90°)`.
pub fn physical_tilt(theta_deg: f64) -> f64 {
    (-theta_deg).clamp(0.0, 90.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;

    fn fixed(len: usize, jitter: f64) -> TrajectoryConfig {
        TrajectoryConfig {
            min_len: len,
            max_len: len,
            ramp_fraction: 0.3,
            final_tilt: (60.0, 60.0),
            jitter,
            noise_sigma: 0.0,
        }
    }

    #[test]
    fn jitter_free_series_is_piecewise_linear() {
        let theta = gen_theta_trajectory(&fixed(10, 0.0), &mut rng_from(1, &[])).unwrap();
        assert_eq!(theta.len(), 10);
        let expect = [0.0, -20.0, -40.0, -60.0, -60.0, -60.0, -60.0, -60.0, -60.0, -60.0];
        for (a, b) in theta.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{theta:?}");
        }
    }

    #[test]
    fn ramp_reaches_minimum_early_and_hold_is_small() {
        let cfg = fixed(200, 1.0);
        let theta = gen_theta_trajectory(&cfg, &mut rng_from(4, &[])).unwrap();
        let ramp_end = (0.3f64 * 200.0).ceil() as usize;
        assert!(theta[0].abs() <= 2.0);
        assert!((theta[ramp_end] + 60.0).abs() < 1e-12);
        let big_step = theta[..=ramp_end]
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min);
        let hold_step = theta[ramp_end..]
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max);
        assert!(hold_step <= 2.0 * cfg.jitter);
        assert!(big_step > 0.0);
    }

    #[test]
    fn same_seed_same_series() {
        let cfg = TrajectoryConfig::default();
        let a = gen_theta_trajectory(&cfg, &mut rng_from(9, &[2])).unwrap();
        let b = gen_theta_trajectory(&cfg, &mut rng_from(9, &[2])).unwrap();
        assert_eq!(a, b);
        assert!(a.len() >= cfg.min_len && a.len() <= cfg.max_len);
    }

    #[test]
    fn config_validation() {
        let mut c = fixed(10, 0.0);
        c.ramp_fraction = 0.5;
        assert!(c.validate().is_err());
        let mut c = fixed(10, 0.0);
        c.final_tilt = (10.0, 95.0);
        assert!(c.validate().is_err());
        let mut c = fixed(10, 0.0);
        c.min_len = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn tilt_mapping() {
        assert_eq!(physical_tilt(1.5), 0.0);
        assert_eq!(physical_tilt(-30.0), 30.0);
        assert_eq!(physical_tilt(-120.0), 90.0);
    }
}
