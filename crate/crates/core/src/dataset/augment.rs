use ndarray::{Array2, Array3, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::synth::VisualImage;

/// Ranges the random augmentation draws from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentPolicy {
    /// Rotations are uniform in `[-max_rotation_deg, max_rotation_deg]`.
    pub max_rotation_deg: f64,
    pub flip_horizontal: bool,
    pub flip_vertical: bool,
    pub noise_sigma: f64,
}

impl Default for AugmentPolicy {
    fn default() -> Self {
        Self {
            max_rotation_deg: 180.0,
            flip_horizontal: true,
            flip_vertical: true,
            noise_sigma: 0.01,
        }
    }
}

impl AugmentPolicy {
    pub fn identity() -> Self {
        Self {
            max_rotation_deg: 0.0,
            flip_horizontal: false,
            flip_vertical: false,
            noise_sigma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::invalid(
                "augment policy",
                format!("noise sigma {} must be >= 0", self.noise_sigma),
            ));
        }
        if !(self.max_rotation_deg.is_finite() && self.max_rotation_deg >= 0.0) {
            return Err(Error::invalid(
                "augment policy",
                "rotation range must be finite and >= 0",
            ));
        }
        Ok(())
    }

    /// Draws one concrete augmentation; each flip is taken with probability ½.
    pub fn sample(&self, seed: u64) -> Result<Augmentation> {
        self.validate()?;
        let mut rng = seed::rng(seed);
        let rotation_deg = if self.max_rotation_deg > 0.0 {
            rng.random_range(-self.max_rotation_deg..=self.max_rotation_deg)
        } else {
            0.0
        };
        let flip_horizontal = self.flip_horizontal && rng.random_bool(0.5);
        let flip_vertical = self.flip_vertical && rng.random_bool(0.5);
        Ok(Augmentation {
            rotation_deg,
            flip_horizontal,
            flip_vertical,
            noise_sigma: self.noise_sigma,
            noise_seed: seed::derive(seed, "noise"),
        })
    }
}

/// A concrete augmentation: rotate about the centre, then flip, then add noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Augmentation {
    /// Counter-clockwise as displayed.
    pub rotation_deg: f64,
    pub flip_horizontal: bool,
    pub flip_vertical: bool,
    pub noise_sigma: f64,
    pub noise_seed: u64,
}

impl Augmentation {
    pub fn none() -> Self {
        Self {
            rotation_deg: 0.0,
            flip_horizontal: false,
            flip_vertical: false,
            noise_sigma: 0.0,
            noise_seed: 0,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.rotation_deg == 0.0
            && !self.flip_horizontal
            && !self.flip_vertical
            && self.noise_sigma == 0.0
    }
}

/// Folds a continuous coordinate back into `[0, n-1]` by mirroring at the edges.
fn reflect(x: f64, n: usize) -> f64 {
    if n == 1 {
        return 0.0;
    }
    let last = (n - 1) as f64;
    let period = 2.0 * last;
    let m = x.rem_euclid(period);
    if m > last {
        period - m
    } else {
        m
    }
}

fn bilinear(src: &ArrayView2<f64>, y: f64, x: f64) -> f64 {
    let (h, w) = src.dim();
    let (y, x) = (reflect(y, h), reflect(x, w));
    let (y0, x0) = (y.floor() as usize, x.floor() as usize);
    let (y1, x1) = ((y0 + 1).min(h - 1), (x0 + 1).min(w - 1));
    let (ty, tx) = (y - y0 as f64, x - x0 as f64);
    let top = src[[y0, x0]] * (1.0 - tx) + src[[y0, x1]] * tx;
    let bottom = src[[y1, x0]] * (1.0 - tx) + src[[y1, x1]] * tx;
    top * (1.0 - ty) + bottom * ty
}

/// Rotates one plane counter-clockwise by `deg` about its centre, keeping its
/// shape. Quarter turns of square planes (and half turns of any plane) are
/// exact index permutations; other angles sample bilinearly with reflected
/// borders filling the exposed corners.
pub fn rotate_plane(src: &ArrayView2<f64>, deg: f64) -> Array2<f64> {
    let (h, w) = src.dim();
    let quarter = deg / 90.0;
    if quarter == quarter.round() {
        let q = (quarter as i64).rem_euclid(4);
        match q {
            0 => return src.to_owned(),
            2 => return Array2::from_shape_fn((h, w), |(r, c)| src[[h - 1 - r, w - 1 - c]]),
            1 if h == w => return Array2::from_shape_fn((h, w), |(r, c)| src[[c, w - 1 - r]]),
            3 if h == w => return Array2::from_shape_fn((h, w), |(r, c)| src[[h - 1 - c, r]]),
            _ => {}
        }
    }
    let (sin, cos) = deg.to_radians().sin_cos();
    let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
    Array2::from_shape_fn((h, w), |(r, c)| {
        let (dx, dy) = (c as f64 - cx, r as f64 - cy);
        let sx = cos * dx - sin * dy;
        let sy = sin * dx + cos * dy;
        bilinear(src, cy + sy, cx + sx)
    })
}

/// Rotation and flips only; used for height maps that must follow the image.
pub fn apply_geometric(plane: &Array2<f64>, aug: &Augmentation) -> Array2<f64> {
    let mut out = rotate_plane(&plane.view(), aug.rotation_deg);
    if aug.flip_horizontal {
        out.invert_axis(Axis(1));
    }
    if aug.flip_vertical {
        out.invert_axis(Axis(0));
    }
    out.as_standard_layout().into_owned()
}

pub fn apply(img: &VisualImage, aug: &Augmentation) -> Result<VisualImage> {
    if !(aug.noise_sigma.is_finite() && aug.noise_sigma >= 0.0) {
        return Err(Error::invalid(
            "augmentation",
            format!("noise sigma {} must be >= 0", aug.noise_sigma),
        ));
    }
    let px = img.pixels();
    let (h, w, _) = px.dim();
    let mut out = Array3::zeros((h, w, 3));
    for ch in 0..3 {
        let plane = apply_geometric(&px.index_axis(Axis(2), ch).to_owned(), aug);
        out.index_axis_mut(Axis(2), ch).assign(&plane);
    }
    if aug.noise_sigma > 0.0 {
        let noise = Normal::new(0.0, aug.noise_sigma)
            .map_err(|e| Error::invalid("augmentation", e.to_string()))?;
        let mut rng = seed::rng(aug.noise_seed);
        out.mapv_inplace(|v| v + noise.sample(&mut rng));
    }
    out.mapv_inplace(|v| v.clamp(0.0, 1.0));
    VisualImage::new(out)
}

/// Samples an augmentation from `policy` with `seed` and applies it.
pub fn augment(
    img: &VisualImage,
    policy: &AugmentPolicy,
    seed: u64,
) -> Result<(VisualImage, Augmentation)> {
    let aug = policy.sample(seed)?;
    Ok((apply(img, &aug)?, aug))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern() -> Array2<f64> {
        Array2::from_shape_vec((3, 3), (1..=9).map(f64::from).collect()).unwrap()
    }

    #[test]
    fn quarter_turn_permutation() {
        let r = rotate_plane(&pattern().view(), 90.0);
        let expected =
            Array2::from_shape_vec((3, 3), vec![3., 6., 9., 2., 5., 8., 1., 4., 7.]).unwrap();
        assert_eq!(r, expected);
        let back = rotate_plane(&r.view(), -90.0);
        assert_eq!(back, pattern());
        let half = rotate_plane(&pattern().view(), 180.0);
        assert_eq!(
            half,
            Array2::from_shape_vec((3, 3), (1..=9).rev().map(f64::from).collect()).unwrap()
        );
    }

    #[test]
    fn general_path_agrees_with_permutation_near_quarter_turn() {
        let p = Array2::from_shape_fn((6, 6), |(r, c)| (r * 7 + c * 3) as f64);
        let exact = rotate_plane(&p.view(), 90.0);
        let near = rotate_plane(&p.view(), 90.0 + 1e-9);
        for (a, b) in exact.iter().zip(near.iter()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn reflection_fills_corners() {
        let p = Array2::from_elem((8, 8), 0.5);
        let r = rotate_plane(&p.view(), 33.0);
        assert!(r.iter().all(|v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn double_flip_is_identity() {
        let p = Array2::from_shape_fn((4, 5), |(r, c)| (r * 5 + c) as f64);
        let aug = Augmentation {
            flip_horizontal: true,
            ..Augmentation::none()
        };
        let once = apply_geometric(&p, &aug);
        assert_ne!(once, p);
        assert_eq!(apply_geometric(&once, &aug), p);
    }

    #[test]
    fn identity_policy_is_noop() {
        let img = VisualImage::new(Array3::from_shape_fn((5, 6, 3), |(r, c, ch)| {
            ((r + c + ch) % 4) as f64 / 3.0
        }))
        .unwrap();
        let (out, aug) = augment(&img, &AugmentPolicy::identity(), 42).unwrap();
        assert!(aug.is_identity());
        assert_eq!(out, img);
    }

    #[test]
    fn negative_sigma_rejected() {
        let policy = AugmentPolicy {
            noise_sigma: -0.1,
            ..AugmentPolicy::default()
        };
        assert!(policy.sample(1).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let img = VisualImage::new(Array3::from_elem((8, 8, 3), 0.5)).unwrap();
        let p = AugmentPolicy::default();
        assert_eq!(augment(&img, &p, 9).unwrap(), augment(&img, &p, 9).unwrap());
        assert_ne!(
            augment(&img, &p, 9).unwrap().0,
            augment(&img, &p, 10).unwrap().0
        );
    }
}
