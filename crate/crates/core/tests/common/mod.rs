#![allow(dead_code)]

use std::path::{Path, PathBuf};

use hapforge::photometric::{HeightMap, TactileImage};
use hapforge::seed;
use hapforge::signals::FrictionTrace;
use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Direct SSIM: a 2-D Gaussian window evaluated at every valid position with
/// plain loops, no separable filtering.
pub fn scalar_loop_ssim(a: &Array2<f64>, b: &Array2<f64>, data_range: f64) -> f64 {
    let (win, sigma) = (11usize, 1.5f64);
    let r = (win / 2) as f64;
    let mut w = vec![vec![0.0; win]; win];
    let mut total = 0.0;
    for (i, row) in w.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - r, j as f64 - r);
            *v = (-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp();
            total += *v;
        }
    }
    let c1 = (0.01 * data_range).powi(2);
    let c2 = (0.03 * data_range).powi(2);
    let (rows, cols) = a.dim();
    let (mut sum, mut count) = (0.0, 0usize);
    for top in 0..=rows - win {
        for left in 0..=cols - win {
            let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..win {
                for j in 0..win {
                    let k = w[i][j] / total;
                    let (x, y) = (a[[top + i, left + j]], b[[top + i, left + j]]);
                    ma += k * x;
                    mb += k * y;
                    saa += k * x * x;
                    sbb += k * y * y;
                    sab += k * x * y;
                }
            }
            let (va, vb, cov) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
            sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    sum / count as f64
}

/// Sum of a few Gaussian bumps and dents at seeded positions, in pixel units.
pub fn smooth_field(n: usize, seed_value: u64) -> HeightMap {
    let mut rng = seed::rng(seed_value);
    let bumps: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.random_range(0.2..0.8) * n as f64,
                rng.random_range(0.2..0.8) * n as f64,
                rng.random_range(5.0..10.0),
                rng.random_range(-6.0..6.0),
            )
        })
        .collect();
    let h = Array2::from_shape_fn((n, n), |(r, c)| {
        bumps
            .iter()
            .map(|(cy, cx, s, a)| {
                a * (-((r as f64 - cy).powi(2) + (c as f64 - cx).powi(2)) / (2.0 * s * s)).exp()
            })
            .sum()
    });
    HeightMap::canonical(h).unwrap()
}

pub fn relative_rmse(a: &HeightMap, b: &HeightMap) -> f64 {
    let (x, y) = (a.heights(), b.heights());
    let (mx, my) = (x.mean().unwrap(), y.mean().unwrap());
    let mse = x
        .iter()
        .zip(y)
        .map(|(p, q)| ((p - mx) - (q - my)).powi(2))
        .sum::<f64>()
        / x.len() as f64;
    mse.sqrt() / b.range()
}

pub fn with_noise(t: &TactileImage, sigma: f64, seed_value: u64) -> TactileImage {
    let normal = Normal::new(0.0, sigma).unwrap();
    let mut rng = seed::rng(seed_value);
    TactileImage::new(
        t.pixels()
            .mapv(|p| (p + normal.sample(&mut rng)).clamp(0.0, 1.0)),
    )
    .unwrap()
}

pub fn random_trace(len: usize, seed_value: u64) -> FrictionTrace {
    let mut rng = seed::rng(seed_value);
    FrictionTrace::new(
        (0..len).map(|_| rng.random_range(0.05..0.9)).collect(),
        60.0,
    )
    .unwrap()
}

pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}
