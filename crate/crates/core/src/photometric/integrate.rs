use std::f64::consts::PI;

use ndarray::{s, Array2};
use num_complex::Complex64;
use rustfft::FftPlanner;

use super::types::{GradientField, HeightMap};
use crate::error::{Error, Result};

/// How the gradient field is extended past its borders before the spectral solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Even reflection of the field (slopes flip sign across the mirror).
    /// Equivalent to the Neumann least-squares problem on the open domain.
    #[default]
    Mirror,
    /// Treat the field as one period of a periodic surface.
    Periodic,
}

/// Least-squares surface from centre-sampled slopes.
///
/// Fits `z` so that each forward difference `z[j+1] − z[j]` matches the
/// trapezoid average of the neighbouring slopes, in both directions. On the
/// (mirror-extended) periodic grid that system is diagonal in the Fourier
/// basis: `Ẑ = −i(sin ωx·Ĝx + sin ωy·Ĝy) / (4 sin²(ωx/2) + 4 sin²(ωy/2))`.
/// The result is canonicalized so its minimum is 0.
pub fn integrate_heights(g: &GradientField, boundary: Boundary) -> Result<HeightMap> {
    let (rows, cols) = g.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("gradient field", "zero area"));
    }
    if g.gx.iter().chain(g.gy.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("gradient field", "non-finite slope"));
    }
    let (gx, gy) = match boundary {
        Boundary::Periodic => (g.gx.clone(), g.gy.clone()),
        Boundary::Mirror => mirror_extend(&g.gx, &g.gy),
    };
    let z = solve_periodic(&gx, &gy);
    HeightMap::canonical(z.slice(s![..rows, ..cols]).to_owned())
}

fn mirror_extend(gx: &Array2<f64>, gy: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let (rows, cols) = gx.dim();
    let mut ex = Array2::zeros((2 * rows, 2 * cols));
    let mut ey = Array2::zeros((2 * rows, 2 * cols));
    for r in 0..2 * rows {
        let (sr, fy) = if r < rows {
            (r, 1.0)
        } else {
            (2 * rows - 1 - r, -1.0)
        };
        for c in 0..2 * cols {
            let (sc, fx) = if c < cols {
                (c, 1.0)
            } else {
                (2 * cols - 1 - c, -1.0)
            };
            ex[[r, c]] = fx * gx[[sr, sc]];
            ey[[r, c]] = fy * gy[[sr, sc]];
        }
    }
    (ex, ey)
}

fn solve_periodic(gx: &Array2<f64>, gy: &Array2<f64>) -> Array2<f64> {
    let (rows, cols) = gx.dim();
    let mut planner = FftPlanner::new();
    let mut fx = gx.mapv(|v| Complex64::new(v, 0.0));
    let mut fy = gy.mapv(|v| Complex64::new(v, 0.0));
    fft2(&mut planner, &mut fx, false);
    fft2(&mut planner, &mut fy, false);

    let sx: Vec<(f64, f64)> = (0..cols)
        .map(|v| {
            let w = 2.0 * PI * v as f64 / cols as f64;
            (w.sin(), 4.0 * (0.5 * w).sin().powi(2))
        })
        .collect();
    let sy: Vec<(f64, f64)> = (0..rows)
        .map(|u| {
            let w = 2.0 * PI * u as f64 / rows as f64;
            (w.sin(), 4.0 * (0.5 * w).sin().powi(2))
        })
        .collect();

    let mut z = Array2::<Complex64>::zeros((rows, cols));
    for u in 0..rows {
        for v in 0..cols {
            let den = sx[v].1 + sy[u].1;
            if den == 0.0 {
                continue;
            }
            let num = fx[[u, v]] * sx[v].0 + fy[[u, v]] * sy[u].0;
            z[[u, v]] = Complex64::new(num.im, -num.re) / den;
        }
    }
    fft2(&mut planner, &mut z, true);
    let scale = 1.0 / (rows * cols) as f64;
    z.mapv(|c| c.re * scale)
}

/// Unnormalized 2-D FFT along rows then columns.
fn fft2(planner: &mut FftPlanner<f64>, data: &mut Array2<Complex64>, inverse: bool) {
    let (rows, cols) = data.dim();
    let row_fft = if inverse {
        planner.plan_fft_inverse(cols)
    } else {
        planner.plan_fft_forward(cols)
    };
    let col_fft = if inverse {
        planner.plan_fft_inverse(rows)
    } else {
        planner.plan_fft_forward(rows)
    };
    let mut buf = vec![Complex64::new(0.0, 0.0); cols.max(rows)];
    for r in 0..rows {
        let line = &mut buf[..cols];
        for (c, b) in line.iter_mut().enumerate() {
            *b = data[[r, c]];
        }
        row_fft.process(line);
        for (c, b) in line.iter().enumerate() {
            data[[r, c]] = *b;
        }
    }
    for c in 0..cols {
        let line = &mut buf[..rows];
        for (r, b) in line.iter_mut().enumerate() {
            *b = data[[r, c]];
        }
        col_fft.process(line);
        for (r, b) in line.iter().enumerate() {
            data[[r, c]] = *b;
        }
    }
}
