//! Friction-image rendering.
//!
//! A height map is scaled by the object's mean friction coefficient, then the
//! whole batch of scaled maps is mapped affinely onto the display's pixel
//! range. The extrema of that map are taken over the batch, not per image:
//! per-image extrema would cancel the friction scaling exactly (see
//! [`normalize_per_image`]).

use std::fmt::Write as _;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::photometric::HeightMap;
use crate::synth::VisualImage;

/// Lowest display intensity (natural surface friction).
pub const PIXEL_MIN: f64 = 0.0;
/// Highest display intensity (maximum electrostatic friction).
pub const PIXEL_MAX: f64 = 255.0;
/// Native resolution of the target display, `(width, height)`.
pub const DISPLAY_SIZE: (usize, usize) = (1280, 800);

/// Luma weights for the grey-scale visual baseline.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// 8-bit bitmap consumed 1:1 by the display; higher means more friction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrictionImage {
    pub pixels: Array2<u8>,
    /// `(width, height)` the image was resampled to, if any.
    pub display_target: Option<(usize, usize)>,
}

impl FrictionImage {
    pub fn width(&self) -> usize {
        self.pixels.ncols()
    }

    pub fn height(&self) -> usize {
        self.pixels.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaledHeightMap {
    pub values: Array2<f64>,
    pub source_object_id: String,
}

/// Batch-wide extrema used to map scaled heights to pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationContext {
    pub global_min: f64,
    pub global_max: f64,
    pub object_count: usize,
}

impl NormalizationContext {
    pub fn new(global_min: f64, global_max: f64, object_count: usize) -> Result<Self> {
        if !(global_min.is_finite() && global_max.is_finite()) {
            return Err(Error::invalid(
                "normalization context",
                "non-finite extrema",
            ));
        }
        if global_max <= global_min {
            return Err(Error::Degenerate(format!(
                "normalization range [{global_min}, {global_max}] is empty"
            )));
        }
        Ok(Self {
            global_min,
            global_max,
            object_count,
        })
    }

    /// `key=value` text record, one field per line.
    pub fn to_record(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "global_min={}", self.global_min);
        let _ = writeln!(s, "global_max={}", self.global_max);
        let _ = writeln!(s, "object_count={}", self.object_count);
        s
    }

    pub fn from_record(text: &str) -> Result<Self> {
        let mut min = None;
        let mut max = None;
        let mut count = None;
        for line in text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid("normalization record", format!("line `{line}`")))?;
            let bad = |_| Error::invalid("normalization record", format!("value `{v}` for {k}"));
            match k.trim() {
                "global_min" => min = Some(v.trim().parse::<f64>().map_err(bad)?),
                "global_max" => max = Some(v.trim().parse::<f64>().map_err(bad)?),
                "object_count" => {
                    count = Some(v.trim().parse::<usize>().map_err(|_| {
                        Error::invalid("normalization record", format!("object_count `{v}`"))
                    })?)
                }
                _ => {}
            }
        }
        match (min, max, count) {
            (Some(a), Some(b), Some(n)) => Self::new(a, b, n),
            _ => Err(Error::invalid("normalization record", "missing field")),
        }
    }
}

/// Scales relief by mean friction: slippery objects get a lower ceiling.
pub fn scale_height_map(
    h: &HeightMap,
    f_avg: f64,
    source_object_id: impl Into<String>,
) -> Result<ScaledHeightMap> {
    if !(f_avg.is_finite() && f_avg > 0.0) {
        return Err(Error::invalid(
            "mean friction",
            format!("{f_avg}; a friction coefficient must be positive"),
        ));
    }
    Ok(ScaledHeightMap {
        values: h.heights().mapv(|v| f_avg * v),
        source_object_id: source_object_id.into(),
    })
}

pub fn build_normalization(batch: &[ScaledHeightMap]) -> Result<NormalizationContext> {
    if batch.is_empty() {
        return Err(Error::invalid(
            "normalization batch",
            "no scaled height maps",
        ));
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for m in batch {
        for &v in &m.values {
            if !v.is_finite() {
                return Err(Error::invalid(
                    "scaled height map",
                    format!("non-finite value in {}", m.source_object_id),
                ));
            }
            min = min.min(v);
            max = max.max(v);
        }
    }
    if min == f64::INFINITY {
        return Err(Error::invalid("normalization batch", "maps have no pixels"));
    }
    NormalizationContext::new(min, max, batch.len())
}

/// Affine value-to-intensity map, rounded half up, clamped to the pixel range.
fn to_pixel(v: f64, ctx: &NormalizationContext) -> u8 {
    let t = ((v - ctx.global_min) / (ctx.global_max - ctx.global_min)).clamp(0.0, 1.0);
    let p = (PIXEL_MAX - PIXEL_MIN) * t + PIXEL_MIN;
    (p + 0.5).floor().clamp(PIXEL_MIN, PIXEL_MAX) as u8
}

/// Number of values lying outside the context's range.
pub fn count_out_of_range(m: &ScaledHeightMap, ctx: &NormalizationContext) -> usize {
    m.values
        .iter()
        .filter(|v| **v < ctx.global_min || **v > ctx.global_max)
        .count()
}

pub fn to_friction_image(m: &ScaledHeightMap, ctx: &NormalizationContext) -> Result<FrictionImage> {
    NormalizationContext::new(ctx.global_min, ctx.global_max, ctx.object_count)?;
    let outside = count_out_of_range(m, ctx);
    if outside > 0 {
        log::warn!(
            "{}: {outside} values outside [{}, {}] clamped",
            m.source_object_id,
            ctx.global_min,
            ctx.global_max
        );
    }
    Ok(FrictionImage {
        pixels: m.values.mapv(|v| to_pixel(v, ctx)),
        display_target: None,
    })
}

/// The per-image reading of the mapping, kept for comparison: the image is
/// normalized by its own extrema, which makes it blind to `f_avg`.
pub fn normalize_per_image(m: &ScaledHeightMap) -> Result<FrictionImage> {
    let ctx = build_normalization(std::slice::from_ref(m))?;
    to_friction_image(m, &ctx)
}

/// Renders a batch of `(id, height map, mean friction)` objects under one context.
pub fn render_batch(
    objects: &[(String, HeightMap, f64)],
) -> Result<(NormalizationContext, Vec<FrictionImage>)> {
    let scaled = objects
        .iter()
        .map(|(id, h, f)| scale_height_map(h, *f, id.clone()))
        .collect::<Result<Vec<_>>>()?;
    let ctx = build_normalization(&scaled)?;
    let images = scaled
        .iter()
        .map(|m| to_friction_image(m, &ctx))
        .collect::<Result<Vec<_>>>()?;
    Ok((ctx, images))
}

pub fn luminance(x: &VisualImage) -> Array2<f64> {
    let px = x.pixels();
    let (h, w, _) = px.dim();
    Array2::from_shape_fn((h, w), |(r, c)| {
        LUMA_WEIGHTS[0] * px[[r, c, 0]]
            + LUMA_WEIGHTS[1] * px[[r, c, 1]]
            + LUMA_WEIGHTS[2] * px[[r, c, 2]]
    })
}

/// Grey-scale visual baseline: luma, normalized over the batch like scaled heights.
pub fn grey_baseline(batch: &[VisualImage]) -> Result<Vec<FrictionImage>> {
    let maps: Vec<ScaledHeightMap> = batch
        .iter()
        .enumerate()
        .map(|(i, x)| ScaledHeightMap {
            values: luminance(x),
            source_object_id: format!("visual-{i}"),
        })
        .collect();
    let ctx = build_normalization(&maps)?;
    maps.iter().map(|m| to_friction_image(m, &ctx)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Resample {
    #[default]
    Nearest,
    /// Corner-aligned bilinear: output corners coincide with input corners.
    Bilinear,
}

/// Resamples to `(width, height)`.
pub fn resample_to_display(
    img: &FrictionImage,
    target: (usize, usize),
    mode: Resample,
) -> Result<FrictionImage> {
    let (tw, th) = target;
    if tw == 0 || th == 0 {
        return Err(Error::invalid("display size", format!("{tw}x{th}")));
    }
    let (ih, iw) = img.pixels.dim();
    let src = &img.pixels;
    let pixels = match mode {
        Resample::Nearest => Array2::from_shape_fn((th, tw), |(r, c)| {
            let sr = (((r as f64 + 0.5) * ih as f64 / th as f64) as usize).min(ih - 1);
            let sc = (((c as f64 + 0.5) * iw as f64 / tw as f64) as usize).min(iw - 1);
            src[[sr, sc]]
        }),
        Resample::Bilinear => {
            let pos = |d: usize, out: usize, inp: usize| -> f64 {
                if out == 1 {
                    (inp as f64 - 1.0) / 2.0
                } else {
                    d as f64 * (inp as f64 - 1.0) / (out as f64 - 1.0)
                }
            };
            Array2::from_shape_fn((th, tw), |(r, c)| {
                let y = pos(r, th, ih);
                let x = pos(c, tw, iw);
                let (y0, x0) = (y.floor() as usize, x.floor() as usize);
                let (y1, x1) = ((y0 + 1).min(ih - 1), (x0 + 1).min(iw - 1));
                let (fy, fx) = (y - y0 as f64, x - x0 as f64);
                let v = |a: usize, b: usize| f64::from(src[[a, b]]);
                let top = v(y0, x0) * (1.0 - fx) + v(y0, x1) * fx;
                let bot = v(y1, x0) * (1.0 - fx) + v(y1, x1) * fx;
                let p = top * (1.0 - fy) + bot * fy;
                (p + 0.5).floor().clamp(PIXEL_MIN, PIXEL_MAX) as u8
            })
        }
    };
    Ok(FrictionImage {
        pixels,
        display_target: Some(target),
    })
}
