//! Height maps from tactile images.
//!
//! A GelSight-style sensor is modelled as a Lambertian surface lit by three
//! coloured lights. `render_tactile` is the forward model, `estimate_gradients`
//! inverts it pixel by pixel, and `integrate_heights` turns the slopes into a
//! least-squares surface.

mod integrate;
mod shading;
mod types;

pub use self::integrate::{integrate_heights, Boundary};
pub use self::shading::{central_gradients, estimate_gradients, render_tactile, shade};
pub use self::types::{
    GradientField, HeightMap, PhotometricCalibration, TactileImage, DEFAULT_MAX_SLOPE,
    MIN_TACTILE_SIDE,
};

use crate::error::Result;

/// Tactile image to canonical height map with the default mirror boundary.
pub fn reconstruct_height(t: &TactileImage, cal: &PhotometricCalibration) -> Result<HeightMap> {
    integrate_heights(&estimate_gradients(t, cal), Boundary::Mirror)
}
