use std::f64::consts::PI;

use crate::{Error, Result};

/// Water density, kg/m³.
pub const RHO_WATER: f64 = 1000.0;
/// Standard gravity, m/s².
pub const G: f64 = 9.80665;
/// Newtons to pound-force.
pub const N_TO_LBF: f64 = 0.224_808_943_1;
/// Areal density of the cup wall and base, kg/m².
const SHELL_AREAL_DENSITY: f64 = 1.2;

const MM3_TO_M3: f64 = 1e-9;
const MM2_TO_M2: f64 = 1e-6;

/// Relative tolerance of the ungula quadrature.
const QUAD_REL_TOL: f64 = 1e-10;
const QUAD_MAX_DEPTH: u32 = 40;
/// Subdivisions forced before the error estimate is trusted.
const QUAD_MIN_DEPTH: u32 = 4;

/// Cylinder dimensions in mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CupGeometry {
    pub radius: f64,
    pub height: f64,
}

impl CupGeometry {
    pub fn new(radius: f64, height: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite() && height > 0.0 && height.is_finite()) {
            return Err(Error::invalid(format!(
                "cup radius and height must be positive, got ({radius}, {height})"
            )));
        }
        Ok(CupGeometry { radius, height })
    }

    pub fn from_diameter(diameter: f64, height: f64) -> Result<Self> {
        Self::new(diameter / 2.0, height)
    }

    pub fn full_volume(&self) -> f64 {
        PI * self.radius * self.radius * self.height
    }
}

/// Largest liquid volume (mm³) the cup holds when tilted `tilt_deg` from
/// vertical, with the free surface passing through the lip's low point.
///
/// While the surface still covers the whole base (`tan θ <= H / 2R`) the
/// retained liquid is a slab with closed form `πR²(H − R tan θ)`. Past
/// that the liquid is a cylindrical wedge (ungula) and is integrated
/// numerically.
pub fn retained_volume(geometry: &CupGeometry, tilt_deg: f64) -> Result<f64> {
    if !tilt_deg.is_finite() {
        return Err(Error::NonFinite(format!("tilt {tilt_deg}")));
    }
    let CupGeometry { radius: r, height: h } = *geometry;
    if tilt_deg <= 0.0 {
        return Ok(geometry.full_volume());
    }
    if tilt_deg >= 90.0 {
        return Ok(0.0);
    }
    let tan = tilt_deg.to_radians().tan();
    if tan <= h / (2.0 * r) {
        Ok(PI * r * r * (h - r * tan))
    } else {
        Ok(tilted_volume_quadrature(geometry, tan))
    }
}

/// Volume under the plane `z = H − (R − x)·tan θ` inside the cylinder,
/// by adaptive Simpson quadrature. Valid in both regimes.
///
/// With `x = R cos φ` the integrand `(H − (R − x) tan θ)·2√(R² − x²)`
/// becomes `2R²(H − R(1 − cos φ) tan θ) sin² φ`, which is smooth on the
/// whole interval, unlike the original square-root endpoint.
pub fn tilted_volume_quadrature(geometry: &CupGeometry, tan: f64) -> f64 {
    let CupGeometry { radius: r, height: h } = *geometry;
    if tan <= 0.0 {
        return geometry.full_volume();
    }
    // liquid reaches x = a on the base; clipped to the cup
    let a = (r - h / tan).max(-r);
    let phi_end = (a / r).clamp(-1.0, 1.0).acos();
    let f = |phi: f64| {
        let s = phi.sin();
        2.0 * r * r * (h - r * (1.0 - phi.cos()) * tan) * s * s
    };
    let tol = QUAD_REL_TOL * geometry.full_volume();
    adaptive_simpson(&f, 0.0, phi_end, tol)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, QUAD_MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || (depth <= QUAD_MAX_DEPTH - QUAD_MIN_DEPTH && delta.abs() <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Retained volume over a tilt series: the running minimum of capacity,
/// starting from `v0`.
pub fn quasi_static_pour(geometry: &CupGeometry, tilts_deg: &[f64], v0: f64) -> Result<Vec<f64>> {
    if v0.is_nan() || v0 < 0.0 {
        return Err(Error::invalid(format!("initial volume must be >= 0, got {v0}")));
    }
    let mut current = v0;
    tilts_deg
        .iter()
        .map(|&tilt| {
            current = current.min(retained_volume(geometry, tilt)?);
            Ok(current)
        })
        .collect()
}

/// Weight (lbf) of a cup weighing `f_cup_empty` holding `volume_mm3` of
/// liquid with relative density `rho_rel`.
pub fn weight_from_volume(volume_mm3: f64, rho_rel: f64, f_cup_empty: f64) -> Result<f64> {
    if volume_mm3.is_nan() || volume_mm3 < 0.0 {
        return Err(Error::invalid(format!("volume must be >= 0, got {volume_mm3}")));
    }
    let newtons = rho_rel * RHO_WATER * G * volume_mm3 * MM3_TO_M3;
    Ok(f_cup_empty + newtons * N_TO_LBF)
}

/// Empty-cup weight (lbf) from the wall and base area.
pub fn cup_shell_weight(geometry: &CupGeometry) -> f64 {
    let CupGeometry { radius: r, height: h } = *geometry;
    let area_m2 = (PI * r * r + 2.0 * PI * r * h) * MM2_TO_M2;
    area_m2 * SHELL_AREAL_DENSITY * G * N_TO_LBF
}
