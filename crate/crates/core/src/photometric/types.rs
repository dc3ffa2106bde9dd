use ndarray::{Array2, Array3};

use crate::error::{Error, Result};

/// Smallest tactile image side accepted.
pub const MIN_TACTILE_SIDE: usize = 8;

/// RGB tactile-sensor image, `(row, col, channel)`, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TactileImage {
    pixels: Array3<f64>,
}

impl TactileImage {
    pub fn new(pixels: Array3<f64>) -> Result<Self> {
        let (h, w, c) = pixels.dim();
        if c != 3 {
            return Err(Error::invalid(
                "tactile image",
                format!("{c} channels, expected 3"),
            ));
        }
        if h < MIN_TACTILE_SIDE || w < MIN_TACTILE_SIDE {
            return Err(Error::invalid(
                "tactile image",
                format!("{h}x{w} is below the {MIN_TACTILE_SIDE}x{MIN_TACTILE_SIDE} minimum"),
            ));
        }
        if pixels.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid(
                "tactile image",
                "channel values must lie in [0, 1]",
            ));
        }
        Ok(Self { pixels })
    }

    pub fn pixels(&self) -> &Array3<f64> {
        &self.pixels
    }

    pub fn resolution(&self) -> (usize, usize) {
        let (h, w, _) = self.pixels.dim();
        (h, w)
    }

    pub fn into_pixels(self) -> Array3<f64> {
        self.pixels
    }
}

/// Surface slopes `∂z/∂x` (along columns) and `∂z/∂y` (along rows), sampled
/// at pixel centres.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub gx: Array2<f64>,
    pub gy: Array2<f64>,
    /// Pixels whose slope hit the clamp during estimation.
    pub clamped: usize,
}

impl GradientField {
    pub fn new(gx: Array2<f64>, gy: Array2<f64>) -> Result<Self> {
        if gx.dim() != gy.dim() {
            return Err(Error::ShapeMismatch {
                left: gx.shape().to_vec(),
                right: gy.shape().to_vec(),
            });
        }
        if gx.iter().chain(gy.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("gradient field", "non-finite slope"));
        }
        Ok(Self { gx, gy, clamped: 0 })
    }

    pub fn dim(&self) -> (usize, usize) {
        self.gx.dim()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            gx: &self.gx * a,
            gy: &self.gy * a,
            clamped: self.clamped,
        }
    }
}

/// Surface relief in normalized height units.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightMap {
    heights: Array2<f64>,
}

impl HeightMap {
    /// Wraps raw heights without shifting them.
    pub fn new(heights: Array2<f64>) -> Result<Self> {
        if heights.is_empty() {
            return Err(Error::invalid("height map", "zero area"));
        }
        if heights.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("height map", "non-finite height"));
        }
        Ok(Self { heights })
    }

    /// Wraps heights and removes the integration constant (min becomes 0).
    pub fn canonical(heights: Array2<f64>) -> Result<Self> {
        let mut map = Self::new(heights)?;
        map.canonicalize();
        Ok(map)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            heights: Array2::zeros((rows, cols)),
        }
    }

    pub fn canonicalize(&mut self) {
        let min = self.min();
        self.heights.mapv_inplace(|v| v - min);
    }

    pub fn heights(&self) -> &Array2<f64> {
        &self.heights
    }

    pub fn into_heights(self) -> Array2<f64> {
        self.heights
    }

    pub fn resolution(&self) -> (usize, usize) {
        self.heights.dim()
    }

    pub fn min(&self) -> f64 {
        self.heights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.heights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn range(&self) -> f64 {
        self.max() - self.min()
    }
}

/// Three-light Lambertian sensor model, one light per colour channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotometricCalibration {
    light_directions: [[f64; 3]; 3],
    inverse: [[f64; 3]; 3],
    pub albedo: f64,
    /// Largest slope magnitude reported by gradient estimation.
    pub max_slope: f64,
}

pub const DEFAULT_MAX_SLOPE: f64 = 5.0;

impl Default for PhotometricCalibration {
    /// Lights 120° apart in azimuth at 45° elevation, albedo 0.9.
    fn default() -> Self {
        Self::ring(45.0, 0.0, 0.9).expect("default calibration is well conditioned")
    }
}

impl PhotometricCalibration {
    pub fn new(light_directions: [[f64; 3]; 3], albedo: f64, max_slope: f64) -> Result<Self> {
        if !(albedo.is_finite() && albedo > 0.0) {
            return Err(Error::invalid(
                "calibration",
                format!("albedo {albedo} must be positive"),
            ));
        }
        if !(max_slope.is_finite() && max_slope > 0.0) {
            return Err(Error::invalid(
                "calibration",
                format!("max slope {max_slope} must be positive"),
            ));
        }
        let mut lights = light_directions;
        for l in &mut lights {
            let n = (l[0] * l[0] + l[1] * l[1] + l[2] * l[2]).sqrt();
            if !(n.is_finite() && n > 0.0) {
                return Err(Error::invalid("calibration", "zero-length light direction"));
            }
            l.iter_mut().for_each(|v| *v /= n);
        }
        let inverse = invert3(&lights).ok_or_else(|| {
            Error::invalid("calibration", "light directions are linearly dependent")
        })?;
        Ok(Self {
            light_directions: lights,
            inverse,
            albedo,
            max_slope,
        })
    }

    /// Three lights evenly spaced in azimuth starting at `azimuth0_deg`.
    pub fn ring(elevation_deg: f64, azimuth0_deg: f64, albedo: f64) -> Result<Self> {
        let el = elevation_deg.to_radians();
        let mut lights = [[0.0; 3]; 3];
        for (i, l) in lights.iter_mut().enumerate() {
            let az = (azimuth0_deg + 120.0 * i as f64).to_radians();
            *l = [el.cos() * az.cos(), el.cos() * az.sin(), el.sin()];
        }
        Self::new(lights, albedo, DEFAULT_MAX_SLOPE)
    }

    pub fn light_directions(&self) -> &[[f64; 3]; 3] {
        &self.light_directions
    }

    pub(crate) fn inverse_lights(&self) -> &[[f64; 3]; 3] {
        &self.inverse
    }
}

fn invert3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let c = |r: usize, s: usize| m[r][s];
    let cof = [
        [
            c(1, 1) * c(2, 2) - c(1, 2) * c(2, 1),
            c(0, 2) * c(2, 1) - c(0, 1) * c(2, 2),
            c(0, 1) * c(1, 2) - c(0, 2) * c(1, 1),
        ],
        [
            c(1, 2) * c(2, 0) - c(1, 0) * c(2, 2),
            c(0, 0) * c(2, 2) - c(0, 2) * c(2, 0),
            c(0, 2) * c(1, 0) - c(0, 0) * c(1, 2),
        ],
        [
            c(1, 0) * c(2, 1) - c(1, 1) * c(2, 0),
            c(0, 1) * c(2, 0) - c(0, 0) * c(2, 1),
            c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0),
        ],
    ];
    let det = c(0, 0) * cof[0][0] + c(0, 1) * cof[1][0] + c(0, 2) * cof[2][0];
    if det.abs() < 1e-9 {
        return None;
    }
    let mut inv = cof;
    inv.iter_mut().flatten().for_each(|v| *v /= det);
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn inverse_of_default_lights() {
        let cal = PhotometricCalibration::default();
        let l = cal.light_directions();
        let inv = cal.inverse_lights();
        for (i, row) in inv.iter().enumerate() {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| row[k] * l[k][j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dependent_lights_rejected() {
        let l = [[0.0, 0.0, 1.0], [0.0, 0.0, 2.0], [1.0, 0.0, 1.0]];
        assert!(PhotometricCalibration::new(l, 0.9, 5.0).is_err());
        let ok = [[1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [-1.0, -1.0, 1.0]];
        assert!(PhotometricCalibration::new(ok, 0.0, 5.0).is_err());
    }

    #[test]
    fn tactile_image_bounds() {
        assert!(TactileImage::new(Array3::zeros((8, 8, 3))).is_ok());
        assert!(TactileImage::new(Array3::zeros((7, 8, 3))).is_err());
        assert!(TactileImage::new(Array3::zeros((8, 8, 1))).is_err());
        assert!(TactileImage::new(Array3::from_elem((8, 8, 3), 1.5)).is_err());
    }

    #[test]
    fn canonical_height_has_zero_min() {
        let h =
            HeightMap::canonical(Array2::from_elem((3, 3), 4.0) + Array2::<f64>::eye(3)).unwrap();
        assert_eq!(h.min(), 0.0);
        assert_eq!(h.max(), 1.0);
        assert!(HeightMap::new(Array2::zeros((0, 4))).is_err());
    }
}
