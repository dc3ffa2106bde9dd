//! Procedural surfaces standing in for a physical fabric collection.
//!
//! A [`SurfaceSpec`] defines an infinite textured plane in millimetre
//! coordinates. Height fields, visual images and friction traces are sampled
//! from it through a [`FieldGeometry`] window, so samples of one class taken
//! at different origins share texture statistics but not pixels.

use std::f64::consts::PI;
use std::path::Path;

use ndarray::{Array2, Array3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats;
use crate::photometric::{central_gradients, render_tactile, HeightMap, PhotometricCalibration};
use crate::seed;
use crate::signals::FrictionTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TextureKind {
    /// Warp and weft sinusoids aligned with the image axes.
    WovenSinusoid,
    /// Staggered lattice of Gaussian loops.
    KnitLattice,
    /// Three octaves of smooth value noise.
    FilteredNoise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub texture_kind: TextureKind,
    pub spatial_period_mm: f64,
    /// Peak-to-valley relief in normalized height units.
    pub relief_amplitude: f64,
    pub base_friction: f64,
    /// Friction change per unit relief slope (height units per pixel).
    pub friction_texture_gain: f64,
    pub albedo_rgb: [f64; 3],
    /// Standard deviation of additive noise on friction samples.
    pub friction_noise: f64,
    /// Standard deviation of additive noise on visual pixels.
    pub visual_noise: f64,
    pub seed: u64,
}

impl SurfaceSpec {
    pub fn new(texture_kind: TextureKind, spatial_period_mm: f64, seed: u64) -> Self {
        Self {
            texture_kind,
            spatial_period_mm,
            relief_amplitude: 1.0,
            base_friction: 0.4,
            friction_texture_gain: 0.05,
            albedo_rgb: [0.7, 0.6, 0.5],
            friction_noise: 0.005,
            visual_noise: 0.01,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Err(Error::invalid("surface spec", reason.to_string()));
        if !(self.spatial_period_mm.is_finite() && self.spatial_period_mm > 0.0) {
            return bad("spatial_period_mm must be positive");
        }
        if !(self.relief_amplitude.is_finite() && self.relief_amplitude >= 0.0) {
            return bad("relief_amplitude must be non-negative");
        }
        if !(self.base_friction.is_finite() && self.base_friction > 0.0) {
            return bad("base_friction must be positive");
        }
        if !(self.friction_texture_gain.is_finite() && self.friction_texture_gain >= 0.0) {
            return bad("friction_texture_gain must be non-negative");
        }
        if self.albedo_rgb.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return bad("albedo_rgb channels must lie in [0, 1]");
        }
        for s in [self.friction_noise, self.visual_noise] {
            if !(s.is_finite() && s >= 0.0) {
                return bad("noise levels must be non-negative");
            }
        }
        Ok(())
    }
}

/// A rectangular sampling window on the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldGeometry {
    pub rows: usize,
    pub cols: usize,
    pub mm_per_pixel: f64,
    /// Surface position of pixel (0, 0) as `(x, y)` millimetres.
    pub origin_mm: (f64, f64),
}

impl FieldGeometry {
    pub fn new(rows: usize, cols: usize, mm_per_pixel: f64) -> Self {
        Self {
            rows,
            cols,
            mm_per_pixel,
            origin_mm: (0.0, 0.0),
        }
    }

    pub fn at(mut self, x_mm: f64, y_mm: f64) -> Self {
        self.origin_mm = (x_mm, y_mm);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.rows < 2 || self.cols < 2 {
            return Err(Error::invalid(
                "field geometry",
                format!("{}x{} is too small", self.rows, self.cols),
            ));
        }
        if !(self.mm_per_pixel.is_finite() && self.mm_per_pixel > 0.0) {
            return Err(Error::invalid(
                "field geometry",
                "mm_per_pixel must be positive",
            ));
        }
        Ok(())
    }
}

/// Unnormalized relief function of one surface.
struct Texture {
    kind: TextureKind,
    period: f64,
    phases: [f64; 2],
    seed: u64,
}

impl Texture {
    fn new(spec: &SurfaceSpec) -> Self {
        let mut rng = seed::rng(seed::derive(spec.seed, "texture"));
        Self {
            kind: spec.texture_kind,
            period: spec.spatial_period_mm,
            phases: [
                rng.random::<f64>() * 2.0 * PI,
                rng.random::<f64>() * 2.0 * PI,
            ],
            seed: spec.seed,
        }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        match self.kind {
            TextureKind::WovenSinusoid => {
                let w = 2.0 * PI / self.period;
                let a = (w * x + self.phases[0]).sin();
                let b = (w * y + self.phases[1]).sin();
                a + b + 0.5 * a * b
            }
            TextureKind::KnitLattice => {
                let p = self.period;
                let row_pitch = p * 0.75f64.sqrt();
                let sigma2 = (0.25 * p).powi(2);
                let j0 = (y / row_pitch).floor() as i64;
                let mut sum = 0.0;
                for j in j0 - 1..=j0 + 2 {
                    let cy = j as f64 * row_pitch;
                    let shift = if j.rem_euclid(2) == 1 { 0.5 * p } else { 0.0 };
                    let i0 = ((x - shift) / p).floor() as i64;
                    for i in i0 - 1..=i0 + 2 {
                        let cx = i as f64 * p + shift;
                        let d2 = (x - cx).powi(2) + (y - cy).powi(2);
                        sum += (-d2 / (2.0 * sigma2)).exp();
                    }
                }
                sum
            }
            TextureKind::FilteredNoise => {
                let mut sum = 0.0;
                let mut weight = 1.0;
                let mut spacing = self.period;
                for octave in 0..3u64 {
                    sum += weight * self.value_noise(x / spacing, y / spacing, octave);
                    weight *= 0.5;
                    spacing *= 0.5;
                }
                sum
            }
        }
    }

    fn lattice(&self, i: i64, j: i64, octave: u64) -> f64 {
        let key = seed::derive_index(seed::derive_index(self.seed ^ octave, i as u64), j as u64);
        (key >> 11) as f64 / (1u64 << 53) as f64
    }

    fn value_noise(&self, u: f64, v: f64, octave: u64) -> f64 {
        let (i, j) = (u.floor(), v.floor());
        let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
        let (fu, fv) = (smooth(u - i), smooth(v - j));
        let (i, j) = (i as i64, j as i64);
        let top = self.lattice(i, j, octave) * (1.0 - fu) + self.lattice(i + 1, j, octave) * fu;
        let bottom =
            self.lattice(i, j + 1, octave) * (1.0 - fu) + self.lattice(i + 1, j + 1, octave) * fu;
        top * (1.0 - fv) + bottom * fv
    }
}

/// Samples the relief inside `geom`, rescaled so the window's peak-to-valley
/// equals `relief_amplitude` with minimum 0.
pub fn make_height_field(spec: &SurfaceSpec, geom: &FieldGeometry) -> Result<HeightMap> {
    spec.validate()?;
    geom.validate()?;
    if spec.relief_amplitude == 0.0 {
        return Ok(HeightMap::zeros(geom.rows, geom.cols));
    }
    let tex = Texture::new(spec);
    let (x0, y0) = geom.origin_mm;
    let raw = Array2::from_shape_fn((geom.rows, geom.cols), |(r, c)| {
        tex.eval(
            x0 + c as f64 * geom.mm_per_pixel,
            y0 + r as f64 * geom.mm_per_pixel,
        )
    });
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if span <= 0.0 {
        return Ok(HeightMap::zeros(geom.rows, geom.cols));
    }
    HeightMap::new(raw.mapv(|v| (v - lo) / span * spec.relief_amplitude))
}

/// Colour image of a surface patch, `(row, col, channel)` in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualImage {
    pixels: Array3<f64>,
}

impl VisualImage {
    pub fn new(pixels: Array3<f64>) -> Result<Self> {
        let (h, w, c) = pixels.dim();
        if c != 3 || h == 0 || w == 0 {
            return Err(Error::invalid(
                "visual image",
                format!("shape {h}x{w}x{c}, expected HxWx3"),
            ));
        }
        if pixels.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid(
                "visual image",
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

const OCCLUSION_STRENGTH: f64 = 0.6;
const VISUAL_LIGHT: [f64; 3] = [0.5, 0.5, std::f64::consts::FRAC_1_SQRT_2];

/// Shades `h` under a raking light with cavity darkening, tints it by the
/// spec albedo and adds seeded pixel noise.
pub fn make_visual(spec: &SurfaceSpec, h: &HeightMap, noise_seed: u64) -> Result<VisualImage> {
    spec.validate()?;
    let (rows, cols) = h.resolution();
    let (gx, gy) = if rows >= 2 && cols >= 2 {
        central_gradients(h.heights())
    } else {
        (Array2::zeros((rows, cols)), Array2::zeros((rows, cols)))
    };
    let top = h.max();
    let hs = h.heights();
    let mut rng = seed::rng(noise_seed);
    let noise = Normal::new(0.0, spec.visual_noise)
        .map_err(|e| Error::invalid("visual noise", e.to_string()))?;
    let mut pixels = Array3::zeros((rows, cols, 3));
    for r in 0..rows {
        for c in 0..cols {
            let (px, py) = (gx[[r, c]], gy[[r, c]]);
            let norm = (px * px + py * py + 1.0).sqrt();
            let lambert = ((-px * VISUAL_LIGHT[0] - py * VISUAL_LIGHT[1] + VISUAL_LIGHT[2]) / norm)
                .max(0.0)
                / VISUAL_LIGHT[2];
            let occlusion = (-OCCLUSION_STRENGTH * (top - hs[[r, c]])).exp();
            for ch in 0..3 {
                let v = spec.albedo_rgb[ch] * lambert * occlusion;
                let n = if spec.visual_noise > 0.0 {
                    noise.sample(&mut rng)
                } else {
                    0.0
                };
                pixels[[r, c, ch]] = (v + n).clamp(0.0, 1.0);
            }
        }
    }
    VisualImage::new(pixels)
}

/// Sliding-contact protocol for [`make_friction_trace`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlideProtocol {
    pub path_length_mm: f64,
    pub speed_mm_s: f64,
    pub sample_rate_hz: f64,
    /// Ground spacing of the height map the finger slides over.
    pub mm_per_pixel: f64,
}

impl Default for SlideProtocol {
    fn default() -> Self {
        Self {
            path_length_mm: 40.0,
            speed_mm_s: 5.0,
            sample_rate_hz: 60.0,
            mm_per_pixel: 0.1,
        }
    }
}

impl SlideProtocol {
    pub fn sample_count(&self) -> usize {
        (self.path_length_mm / self.speed_mm_s * self.sample_rate_hz).round() as usize
    }
}

/// Friction along the middle row of `h`: base level plus gain times the
/// local relief slope, plus seeded noise, clipped at zero.
pub fn make_friction_trace(
    spec: &SurfaceSpec,
    h: &HeightMap,
    protocol: &SlideProtocol,
    noise_seed: u64,
) -> Result<FrictionTrace> {
    spec.validate()?;
    let p = protocol;
    for (name, v) in [
        ("path_length_mm", p.path_length_mm),
        ("speed_mm_s", p.speed_mm_s),
        ("sample_rate_hz", p.sample_rate_hz),
        ("mm_per_pixel", p.mm_per_pixel),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(
                "slide protocol",
                format!("{name} must be positive"),
            ));
        }
    }
    let (rows, cols) = h.resolution();
    let field_mm = (cols.saturating_sub(1)) as f64 * p.mm_per_pixel;
    if p.path_length_mm > field_mm + 1e-9 {
        return Err(Error::invalid(
            "slide protocol",
            format!(
                "path of {} mm exceeds the {field_mm} mm field",
                p.path_length_mm
            ),
        ));
    }
    let n = p.sample_count().max(1);
    let row = h.heights().row(rows / 2).to_owned();
    let at = |x: f64| -> f64 {
        let x = x.clamp(0.0, (cols - 1) as f64);
        let i = (x.floor() as usize).min(cols - 2);
        let t = x - i as f64;
        row[i] * (1.0 - t) + row[i + 1] * t
    };
    let mut rng = seed::rng(noise_seed);
    let noise = Normal::new(0.0, spec.friction_noise)
        .map_err(|e| Error::invalid("friction noise", e.to_string()))?;
    let samples = (0..n)
        .map(|k| {
            let x = k as f64 * p.speed_mm_s / p.sample_rate_hz / p.mm_per_pixel;
            let slope = 0.5 * (at(x + 1.0) - at(x - 1.0));
            let e = if spec.friction_noise > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            (spec.base_friction + spec.friction_texture_gain * slope + e).max(0.0)
        })
        .collect();
    FrictionTrace::new(samples, p.sample_rate_hz)
}

/// One surface class in a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub id: String,
    pub surface: SurfaceSpec,
}

/// Deterministic set of `count` varied classes cycling through texture kinds.
pub fn default_classes(count: usize, root_seed: u64) -> Vec<ClassSpec> {
    let kinds = [
        TextureKind::WovenSinusoid,
        TextureKind::KnitLattice,
        TextureKind::FilteredNoise,
    ];
    (0..count)
        .map(|i| {
            let s = seed::derive_index(seed::derive(root_seed, "classes"), i as u64);
            let mut rng = seed::rng(s);
            let mut surface =
                SurfaceSpec::new(kinds[i % kinds.len()], rng.random_range(0.8..3.0), s);
            surface.relief_amplitude = rng.random_range(0.5..1.5);
            surface.base_friction = rng.random_range(0.2..0.8);
            surface.friction_texture_gain = rng.random_range(0.02..0.1);
            surface.albedo_rgb = [
                rng.random_range(0.3..0.95),
                rng.random_range(0.3..0.95),
                rng.random_range(0.3..0.95),
            ];
            ClassSpec {
                id: format!("class{i:02}"),
                surface,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub seed: u64,
    pub samples_per_class: usize,
    pub visual: FieldGeometry,
    pub tactile: FieldGeometry,
    pub protocol: SlideProtocol,
    /// Rows of the strip sampled for each friction trace.
    pub trace_rows: usize,
    /// Samples are drawn with origins in `[0, extent_mm)²`.
    pub extent_mm: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            samples_per_class: 5,
            visual: FieldGeometry::new(64, 64, 0.2),
            tactile: FieldGeometry::new(64, 64, 0.1),
            protocol: SlideProtocol::default(),
            trace_rows: 16,
            extent_mm: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSample {
    pub id: String,
    pub class_id: String,
    pub visual_path: String,
    pub tactile_path: String,
    pub trace_path: String,
}

/// Index written as `corpus.json` at the corpus root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusIndex {
    pub config: CorpusConfig,
    pub calibration: CalibrationRecord,
    pub classes: Vec<ClassSpec>,
    pub samples: Vec<RawSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub light_directions: [[f64; 3]; 3],
    pub albedo: f64,
    pub max_slope: f64,
}

impl From<&PhotometricCalibration> for CalibrationRecord {
    fn from(c: &PhotometricCalibration) -> Self {
        Self {
            light_directions: *c.light_directions(),
            albedo: c.albedo,
            max_slope: c.max_slope,
        }
    }
}

impl CalibrationRecord {
    pub fn to_calibration(&self) -> Result<PhotometricCalibration> {
        PhotometricCalibration::new(self.light_directions, self.albedo, self.max_slope)
    }
}

pub const CORPUS_INDEX: &str = "corpus.json";

impl CorpusIndex {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(CORPUS_INDEX);
        let text = formats::read_text(&path)?;
        serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))
    }
}

/// Writes a weakly paired corpus: every raw sample draws its visual image,
/// tactile image and friction strip at three independent surface locations.
pub fn make_corpus(
    classes: &[ClassSpec],
    config: &CorpusConfig,
    out_dir: &Path,
) -> Result<CorpusIndex> {
    if classes.len() < 2 {
        return Err(Error::invalid(
            "corpus",
            "at least two classes are required",
        ));
    }
    if config.samples_per_class == 0 {
        return Err(Error::invalid(
            "corpus",
            "samples_per_class must be at least 1",
        ));
    }
    let mut seen = std::collections::BTreeSet::new();
    for c in classes {
        c.surface.validate()?;
        if c.id.is_empty()
            || !c
                .id
                .chars()
                .all(|ch| ch.is_ascii_alphanumeric() || ch == '-' || ch == '_')
        {
            return Err(Error::invalid(
                "corpus",
                format!("class id `{}` must be non-empty [A-Za-z0-9_-]", c.id),
            ));
        }
        if !seen.insert(c.id.as_str()) {
            return Err(Error::invalid(
                "corpus",
                format!("duplicate class id `{}`", c.id),
            ));
        }
    }
    let cal = PhotometricCalibration::default();
    let strip = FieldGeometry::new(
        config.trace_rows.max(2),
        (config.protocol.path_length_mm / config.protocol.mm_per_pixel).ceil() as usize + 2,
        config.protocol.mm_per_pixel,
    );

    let jobs: Vec<(usize, usize)> = (0..classes.len())
        .flat_map(|c| (0..config.samples_per_class).map(move |i| (c, i)))
        .collect();
    let samples = jobs
        .par_iter()
        .map(|&(ci, i)| -> Result<RawSample> {
            let class = &classes[ci];
            let id = format!("{}_{i:03}", class.id);
            let s = seed::derive(config.seed, &id);
            let mut rng = seed::rng(s);
            let mut origin = || {
                (
                    rng.random::<f64>() * config.extent_mm,
                    rng.random::<f64>() * config.extent_mm,
                )
            };

            let (vx, vy) = origin();
            let vh = make_height_field(&class.surface, &config.visual.at(vx, vy))?;
            let visual = make_visual(&class.surface, &vh, seed::derive(s, "visual-noise"))?;

            let (tx, ty) = origin();
            let th = make_height_field(&class.surface, &config.tactile.at(tx, ty))?;
            let tactile = render_tactile(&th, &cal)?;

            let (sx, sy) = origin();
            let sh = make_height_field(&class.surface, &strip.at(sx, sy))?;
            let trace = make_friction_trace(
                &class.surface,
                &sh,
                &config.protocol,
                seed::derive(s, "trace-noise"),
            )?;

            let sample = RawSample {
                visual_path: format!("visual/{id}.png"),
                tactile_path: format!("tactile/{id}.png"),
                trace_path: format!("trace/{id}.csv"),
                class_id: class.id.clone(),
                id,
            };
            formats::write_rgb_png(&out_dir.join(&sample.visual_path), visual.pixels())?;
            formats::write_rgb_png(&out_dir.join(&sample.tactile_path), tactile.pixels())?;
            formats::write_trace_csv(&out_dir.join(&sample.trace_path), &trace)?;
            Ok(sample)
        })
        .collect::<Result<Vec<_>>>()?;

    let index = CorpusIndex {
        config: config.clone(),
        calibration: CalibrationRecord::from(&cal),
        classes: classes.to_vec(),
        samples,
    };
    let json = serde_json::to_string_pretty(&index)
        .map_err(|e| Error::format(out_dir.join(CORPUS_INDEX), e.to_string()))?;
    formats::write_file(&out_dir.join(CORPUS_INDEX), format!("{json}\n").as_bytes())?;
    log::info!(
        "wrote {} raw samples over {} classes to {}",
        index.samples.len(),
        classes.len(),
        out_dir.display()
    );
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::num_complex::Complex64;
    use rustfft::FftPlanner;

    fn luma_std(v: &VisualImage) -> f64 {
        let l = crate::compose::luminance(v);
        let m = l.mean().unwrap();
        (l.mapv(|x| (x - m).powi(2)).mean().unwrap()).sqrt()
    }

    fn dominant_bin(xs: &[f64]) -> usize {
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let mut buf: Vec<Complex64> = xs.iter().map(|x| Complex64::new(x - mean, 0.0)).collect();
        FftPlanner::new()
            .plan_fft_forward(buf.len())
            .process(&mut buf);
        (1..buf.len() / 2)
            .max_by(|a, b| buf[*a].norm().total_cmp(&buf[*b].norm()))
            .unwrap()
    }

    #[test]
    fn zero_amplitude_is_flat() {
        let mut spec = SurfaceSpec::new(TextureKind::FilteredNoise, 1.0, 3);
        spec.relief_amplitude = 0.0;
        let h = make_height_field(&spec, &FieldGeometry::new(16, 16, 0.1)).unwrap();
        assert!(h.heights().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn amplitude_and_determinism() {
        for kind in [
            TextureKind::WovenSinusoid,
            TextureKind::KnitLattice,
            TextureKind::FilteredNoise,
        ] {
            let mut spec = SurfaceSpec::new(kind, 1.3, 11);
            spec.relief_amplitude = 0.7;
            let g = FieldGeometry::new(32, 40, 0.1).at(3.0, 4.0);
            let a = make_height_field(&spec, &g).unwrap();
            assert!(a.min().abs() < 1e-15);
            assert!((a.max() - 0.7).abs() < 1e-12);
            assert_eq!(a, make_height_field(&spec, &g).unwrap());
        }
    }

    #[test]
    fn woven_peak_at_period() {
        // 64 px at 0.125 mm/px is 8 mm; a 2 mm period is 4 cycles per row.
        let spec = SurfaceSpec::new(TextureKind::WovenSinusoid, 2.0, 5);
        let h = make_height_field(&spec, &FieldGeometry::new(64, 64, 0.125)).unwrap();
        let row: Vec<f64> = h.heights().row(10).to_vec();
        assert_eq!(dominant_bin(&row), 4);
        let col: Vec<f64> = h.heights().column(7).to_vec();
        assert_eq!(dominant_bin(&col), 4);
    }

    #[test]
    fn flat_visual_is_albedo() {
        let mut spec = SurfaceSpec::new(TextureKind::WovenSinusoid, 1.0, 1);
        spec.visual_noise = 0.0;
        let v = make_visual(&spec, &HeightMap::zeros(8, 8), 0).unwrap();
        for ((_, _, ch), p) in v.pixels().indexed_iter() {
            assert!((p - spec.albedo_rgb[ch]).abs() < 1e-12);
        }
        assert_eq!(make_visual(&spec, &HeightMap::zeros(8, 8), 9).unwrap(), v);
    }

    #[test]
    fn contrast_grows_with_relief() {
        for s in 0..20u64 {
            let mut spec = SurfaceSpec::new(TextureKind::KnitLattice, 1.5, s);
            spec.relief_amplitude = 0.5;
            let g = FieldGeometry::new(32, 32, 0.2);
            let lo = make_visual(&spec, &make_height_field(&spec, &g).unwrap(), s).unwrap();
            spec.relief_amplitude = 1.0;
            let hi = make_visual(&spec, &make_height_field(&spec, &g).unwrap(), s).unwrap();
            assert!(luma_std(&hi) > luma_std(&lo), "seed {s}");
        }
    }

    #[test]
    fn trace_protocol() {
        let mut spec = SurfaceSpec::new(TextureKind::WovenSinusoid, 2.0, 2);
        spec.friction_texture_gain = 0.0;
        spec.friction_noise = 0.0;
        let h = make_height_field(&spec, &FieldGeometry::new(8, 402, 0.1)).unwrap();
        let t = make_friction_trace(&spec, &h, &SlideProtocol::default(), 0).unwrap();
        assert_eq!(t.len(), 480);
        assert!(t.samples().iter().all(|v| *v == spec.base_friction));

        let short = make_height_field(&spec, &FieldGeometry::new(8, 300, 0.1)).unwrap();
        assert!(make_friction_trace(&spec, &short, &SlideProtocol::default(), 0).is_err());
    }

    #[test]
    fn trace_frequency_follows_relief() {
        // Period 2 mm at 5 mm/s is 2.5 Hz; 480 samples at 60 Hz resolve 0.125 Hz bins.
        let mut spec = SurfaceSpec::new(TextureKind::WovenSinusoid, 2.0, 8);
        spec.friction_noise = 0.0;
        spec.friction_texture_gain = 0.2;
        let h = make_height_field(&spec, &FieldGeometry::new(8, 402, 0.1)).unwrap();
        let t = make_friction_trace(&spec, &h, &SlideProtocol::default(), 0).unwrap();
        assert_eq!(dominant_bin(t.samples()), 20);
    }

    #[test]
    fn noisy_trace_stays_positive_and_centred() {
        let mut spec = SurfaceSpec::new(TextureKind::FilteredNoise, 1.5, 4);
        spec.friction_texture_gain = 0.0;
        spec.friction_noise = 0.02;
        let h = make_height_field(&spec, &FieldGeometry::new(8, 402, 0.1)).unwrap();
        let t = make_friction_trace(&spec, &h, &SlideProtocol::default(), 77).unwrap();
        let mean = crate::signals::mean_friction(&t);
        assert!((mean - spec.base_friction).abs() < 0.05 * spec.base_friction);
        assert!(t.samples().iter().all(|v| *v > 0.0));
    }
}
