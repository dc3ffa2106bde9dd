use ndarray::{Array2, Array3};

use super::types::{GradientField, HeightMap, PhotometricCalibration, TactileImage};
use crate::error::{Error, Result};

/// Central differences in the interior, one-sided at the borders.
pub fn central_gradients(h: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let (rows, cols) = h.dim();
    let mut gx = Array2::zeros((rows, cols));
    let mut gy = Array2::zeros((rows, cols));
    for r in 0..rows {
        for c in 0..cols {
            gx[[r, c]] = if cols < 2 {
                0.0
            } else if c == 0 {
                h[[r, 1]] - h[[r, 0]]
            } else if c == cols - 1 {
                h[[r, c]] - h[[r, c - 1]]
            } else {
                0.5 * (h[[r, c + 1]] - h[[r, c - 1]])
            };
            gy[[r, c]] = if rows < 2 {
                0.0
            } else if r == 0 {
                h[[1, c]] - h[[0, c]]
            } else if r == rows - 1 {
                h[[r, c]] - h[[r - 1, c]]
            } else {
                0.5 * (h[[r + 1, c]] - h[[r - 1, c]])
            };
        }
    }
    (gx, gy)
}

/// Lambertian shading for a given slope: `albedo · max(0, n·L)` per channel.
pub fn shade(gx: f64, gy: f64, cal: &PhotometricCalibration) -> [f64; 3] {
    let norm = (gx * gx + gy * gy + 1.0).sqrt();
    let n = [-gx / norm, -gy / norm, 1.0 / norm];
    let mut out = [0.0; 3];
    for (o, l) in out.iter_mut().zip(cal.light_directions()) {
        let d = n[0] * l[0] + n[1] * l[1] + n[2] * l[2];
        *o = (cal.albedo * d.max(0.0)).clamp(0.0, 1.0);
    }
    out
}

/// Forward sensor model: renders the tactile image a height map would produce.
pub fn render_tactile(h: &HeightMap, cal: &PhotometricCalibration) -> Result<TactileImage> {
    let (rows, cols) = h.resolution();
    if rows < 2 || cols < 2 {
        return Err(Error::invalid(
            "height map",
            format!("{rows}x{cols} has no area to shade"),
        ));
    }
    let (gx, gy) = central_gradients(h.heights());
    let mut px = Array3::zeros((rows, cols, 3));
    for r in 0..rows {
        for c in 0..cols {
            let s = shade(gx[[r, c]], gy[[r, c]], cal);
            for (ch, v) in s.iter().enumerate() {
                px[[r, c, ch]] = *v;
            }
        }
    }
    TactileImage::new(px)
}

/// Per-pixel inverse of the three-light model.
///
/// Solves `albedo · n = L⁻¹ I` and reports `(−n_x/n_z, −n_y/n_z)`. Normals too
/// close to grazing for the calibration's slope limit are clamped to that
/// limit along their own direction and counted in `clamped`.
pub fn estimate_gradients(t: &TactileImage, cal: &PhotometricCalibration) -> GradientField {
    let (rows, cols) = t.resolution();
    let inv = cal.inverse_lights();
    let px = t.pixels();
    let mut gx = Array2::zeros((rows, cols));
    let mut gy = Array2::zeros((rows, cols));
    let mut clamped = 0;
    for r in 0..rows {
        for c in 0..cols {
            let i = [px[[r, c, 0]], px[[r, c, 1]], px[[r, c, 2]]];
            let n: Vec<f64> = inv
                .iter()
                .map(|row| (row[0] * i[0] + row[1] * i[1] + row[2] * i[2]) / cal.albedo)
                .collect();
            let lateral = (n[0] * n[0] + n[1] * n[1]).sqrt();
            let (sx, sy) = if n[2] > 0.0 && lateral <= cal.max_slope * n[2] {
                (-n[0] / n[2], -n[1] / n[2])
            } else {
                clamped += 1;
                if lateral > 0.0 {
                    (
                        -cal.max_slope * n[0] / lateral,
                        -cal.max_slope * n[1] / lateral,
                    )
                } else {
                    (0.0, 0.0)
                }
            };
            gx[[r, c]] = sx;
            gy[[r, c]] = sy;
        }
    }
    if clamped > 0 {
        log::warn!(
            "{clamped} pixels exceeded the slope limit {} and were clamped",
            cal.max_slope
        );
    }
    GradientField { gx, gy, clamped }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(rows: usize, cols: usize, sx: f64, sy: f64) -> HeightMap {
        HeightMap::canonical(Array2::from_shape_fn((rows, cols), |(r, c)| {
            sx * c as f64 + sy * r as f64
        }))
        .unwrap()
    }

    #[test]
    fn flat_map_is_uniform() {
        let cal = PhotometricCalibration::default();
        let img = render_tactile(&HeightMap::zeros(16, 16), &cal).unwrap();
        for (ch, l) in cal.light_directions().iter().enumerate() {
            let expect = cal.albedo * l[2].max(0.0);
            assert!(img
                .pixels()
                .slice(ndarray::s![.., .., ch])
                .iter()
                .all(|v| (v - expect).abs() < 1e-15));
        }
        let g = estimate_gradients(&img, &cal);
        assert!(g.gx.iter().chain(g.gy.iter()).all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn ramp_matches_closed_form_normal() {
        let cal = PhotometricCalibration::default();
        let img = render_tactile(&ramp(12, 12, 0.1, 0.0), &cal).unwrap();
        let norm = (0.01f64 + 1.0).sqrt();
        let n = [-0.1 / norm, 0.0, 1.0 / norm];
        for (ch, l) in cal.light_directions().iter().enumerate() {
            let expect = cal.albedo * (n[0] * l[0] + n[1] * l[1] + n[2] * l[2]).max(0.0);
            for v in img.pixels().slice(ndarray::s![.., .., ch]) {
                assert!((v - expect).abs() < 1e-12);
            }
        }
        let g = estimate_gradients(&img, &cal);
        assert!(g.gx.iter().all(|v| (v - 0.1).abs() < 1e-6));
        assert!(g.gy.iter().all(|v| v.abs() < 1e-6));
        assert_eq!(g.clamped, 0);
    }

    #[test]
    fn back_facing_lights_give_black_image() {
        let l = [[0.5, 0.0, -0.8], [-0.3, 0.5, -0.6], [-0.3, -0.5, -0.7]];
        let cal = PhotometricCalibration::new(l, 0.9, 5.0).unwrap();
        let h = HeightMap::canonical(Array2::from_shape_fn((10, 10), |(r, c)| {
            ((r * c) as f64 * 0.01).sin()
        }))
        .unwrap();
        let img = render_tactile(&h, &cal).unwrap();
        assert!(img.pixels().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn degenerate_map_is_rejected() {
        let cal = PhotometricCalibration::default();
        assert!(render_tactile(&HeightMap::zeros(1, 20), &cal).is_err());
    }

    #[test]
    fn grazing_normals_are_clamped() {
        let mut cal = PhotometricCalibration::default();
        cal.max_slope = 0.05;
        let img = render_tactile(&ramp(10, 10, 0.1, 0.0), &cal).unwrap();
        let g = estimate_gradients(&img, &cal);
        assert_eq!(g.clamped, 100);
        assert!(g.gx.iter().all(|v| (v - 0.05).abs() < 1e-9));
    }
}
