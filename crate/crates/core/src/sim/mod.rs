//! Quasi-static pouring simulator.
//!
//! The pouring cup is a right circular cylinder. At each timestep the
//! liquid it can hold is the volume below the plane through the low point
//! of its lip; what it actually holds is the running minimum of that
//! capacity, since liquid that left never returns.

mod generate;
mod geometry;
mod trajectory;

pub use generate::{generate_dataset, Interval, SimRanges};
pub use geometry::{
    cup_shell_weight, quasi_static_pour, retained_volume, tilted_volume_quadrature, weight_from_volume, CupGeometry, G,
    N_TO_LBF, RHO_WATER,
};
pub use trajectory::{gen_theta_trajectory, physical_tilt, TrajectoryConfig};
