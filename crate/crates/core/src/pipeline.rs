//! End-to-end batch operations behind the command-line tool.

use std::path::Path;

use ndarray::{Array2, Array3};
use rayon::prelude::*;

use crate::compose::{
    build_normalization, resample_to_display, scale_height_map, to_friction_image, FrictionImage,
    NormalizationContext, Resample,
};
use crate::dataset::{DatasetManifest, Split};
use crate::error::{Error, Result};
use crate::formats;
use crate::infer::{generate_pair, resize_bilinear, Generator, OutputKind};
use crate::metrics::{mae, ssim, EvalReport, SampleScore, SsimParams};
use crate::photometric::{render_tactile, HeightMap, PhotometricCalibration};
use crate::signals::{
    mean_friction, reconstruct_phase, spectrogram_to_image, stft, FrictionTrace, GriffinLim,
    Reference, SpectrogramImage, StftParams, DEFAULT_DB_FLOOR,
};
use crate::synth::VisualImage;

/// One object after rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedObject {
    pub id: String,
    pub height: HeightMap,
    pub spectrogram_image: SpectrogramImage,
    pub trace: FrictionTrace,
    pub mean_friction: f64,
    pub friction: FrictionImage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderBatch {
    pub context: NormalizationContext,
    pub objects: Vec<RenderedObject>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RenderOptions {
    pub griffin_lim: GriffinLim,
    /// Resample friction images to `(width, height)` with the given filter.
    pub display: Option<((usize, usize), Resample)>,
}

fn finish(
    objects: Vec<(String, HeightMap, SpectrogramImage, FrictionTrace)>,
    opts: &RenderOptions,
) -> Result<RenderBatch> {
    if objects.is_empty() {
        return Err(Error::invalid("render", "no inputs"));
    }
    let scaled = objects
        .iter()
        .map(|(id, h, _, t)| scale_height_map(h, mean_friction(t), id.clone()))
        .collect::<Result<Vec<_>>>()?;
    let context = build_normalization(&scaled)?;
    let objects = objects
        .into_iter()
        .zip(&scaled)
        .map(|((id, height, spectrogram_image, trace), m)| {
            let mut friction = to_friction_image(m, &context)?;
            if let Some((size, mode)) = opts.display {
                friction = resample_to_display(&friction, size, mode)?;
            }
            Ok(RenderedObject {
                mean_friction: mean_friction(&trace),
                id,
                height,
                spectrogram_image,
                trace,
                friction,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RenderBatch { context, objects })
}

/// Generates height and friction for each visual image and renders the batch.
pub fn render_generated(
    g_h: &Generator,
    g_s: &Generator,
    images: &[(String, VisualImage)],
    opts: &RenderOptions,
) -> Result<RenderBatch> {
    let objects = images
        .par_iter()
        .map(|(id, x)| {
            let pair = generate_pair(g_h, g_s, x)?;
            let trace = reconstruct_phase(&pair.spectrogram, &opts.griffin_lim)?.trace;
            Ok((id.clone(), pair.height, pair.spectrogram_image, trace))
        })
        .collect::<Result<Vec<_>>>()?;
    finish(objects, opts)
}

/// Renders stored height maps and friction traces directly.
pub fn render_ground_truth(
    items: Vec<(String, HeightMap, FrictionTrace)>,
    params: &StftParams,
    reference: Reference,
    opts: &RenderOptions,
) -> Result<RenderBatch> {
    let objects = items
        .into_iter()
        .map(|(id, h, t)| {
            let img = spectrogram_to_image(&stft(&t, params)?, DEFAULT_DB_FLOOR, reference)?;
            Ok((id, h, img, t))
        })
        .collect::<Result<Vec<_>>>()?;
    finish(objects, opts)
}

/// Spectrogram image as 8-bit grey, frequency increasing upwards.
pub fn spectrogram_png_pixels(img: &SpectrogramImage) -> Array2<u8> {
    let (bins, frames) = img.pixels.dim();
    Array2::from_shape_fn((bins, frames), |(r, c)| {
        formats::quantize_u8(img.pixels[[bins - 1 - r, c]])
    })
}

pub const NORMALIZATION_FILE: &str = "normalization.txt";

/// Writes `height/`, `spectrogram/`, `trace/` and `friction/` outputs plus
/// the normalization record.
pub fn write_render(batch: &RenderBatch, out_dir: &Path) -> Result<()> {
    batch.objects.par_iter().try_for_each(|o| -> Result<()> {
        formats::write_height_png(&out_dir.join(format!("height/{}.png", o.id)), &o.height)?;
        formats::write_gray_png(
            &out_dir.join(format!("spectrogram/{}.png", o.id)),
            &spectrogram_png_pixels(&o.spectrogram_image),
        )?;
        formats::write_trace_csv(&out_dir.join(format!("trace/{}.csv", o.id)), &o.trace)?;
        formats::write_gray_png(
            &out_dir.join(format!("friction/{}.png", o.id)),
            &o.friction.pixels,
        )
    })?;
    formats::write_file(
        &out_dir.join(NORMALIZATION_FILE),
        batch.context.to_record().as_bytes(),
    )
}

/// Divisor mapping heights of a height generator onto `[0, 1]`: the span of
/// its output normalization over the tanh range.
pub fn declared_height_range(g_h: &Generator) -> Result<f64> {
    let d = g_h.descriptor();
    if !matches!(d.output_kind, OutputKind::Height) {
        return Err(Error::invalid(
            "height generator",
            format!("`{}` does not produce heights", d.name),
        ));
    }
    let span = f64::from(d.output_normalization.scale[0])
        * f64::from(d.output.range[1] - d.output.range[0]);
    if !(span.is_finite() && span > 0.0) {
        return Err(Error::Degenerate(format!("height range {span}")));
    }
    Ok(span.abs())
}

/// Scores generated signals against one split of a dataset.
///
/// Heights are compared with SSIM after dividing both maps by the
/// generator's declared height range (dynamic range 1). Traces come from
/// phase reconstruction of the generated magnitude and are compared with the
/// stored friction window sample by sample.
pub fn evaluate(
    dataset_dir: &Path,
    manifest: &DatasetManifest,
    split: Split,
    g_h: &Generator,
    g_s: &Generator,
    griffin_lim: &GriffinLim,
) -> Result<(EvalReport, Vec<SampleScore>)> {
    let range = declared_height_range(g_h)?;
    let records: Vec<_> = manifest.records_in(split).collect();
    if records.len() < 2 {
        return Err(Error::Dataset(format!(
            "split {} holds {} records; evaluation needs 2",
            split.as_str(),
            records.len()
        )));
    }
    let scores = records
        .par_iter()
        .map(|r| -> Result<SampleScore> {
            let x = VisualImage::new(formats::read_rgb_png(&dataset_dir.join(&r.visual_path))?)?;
            let truth_h = formats::read_height_png(&dataset_dir.join(&r.height_path))?;
            let truth_t = formats::read_trace_csv(&dataset_dir.join(&r.trace_path))?;
            let pair = generate_pair(g_h, g_s, &x)?;
            let gen_t = reconstruct_phase(&pair.spectrogram, griffin_lim)?.trace;
            let gen_t = if gen_t.len() == truth_t.len() {
                gen_t
            } else {
                return Err(Error::LengthMismatch {
                    left: gen_t.len(),
                    right: truth_t.len(),
                });
            };
            let (rows, cols) = truth_h.resolution();
            let gen_h = resize_bilinear(pair.height.heights(), rows, cols) / range;
            let s = ssim(
                &gen_h,
                &(truth_h.heights() / range),
                &SsimParams::for_range(1.0),
            )?;
            let m = mae(&gen_t, &truth_t)?;
            let truth_mean = mean_friction(&truth_t);
            Ok(SampleScore {
                id: r.id.clone(),
                mae: m,
                mae_ratio: if truth_mean > 0.0 {
                    m / truth_mean
                } else {
                    f64::NAN
                },
                ssim: s,
                generated_mean_friction: mean_friction(&gen_t),
                true_mean_friction: truth_mean,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((EvalReport::from_scores(&scores)?, scores))
}

/// Line plot of a trace on a white background, dark line, 8-bit grey.
pub fn plot_trace(trace: &FrictionTrace, width: usize, height: usize) -> Result<Array2<u8>> {
    if width < 2 || height < 2 {
        return Err(Error::invalid("plot size", format!("{width}x{height}")));
    }
    let s = trace.samples();
    let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let y_of = |v: f64| -> usize {
        let t = (v - lo) / span;
        ((1.0 - t) * (height - 1) as f64).round() as usize
    };
    let mut img = Array2::from_elem((height, width), 255u8);
    let n = s.len();
    let mut prev: Option<usize> = None;
    for x in 0..width {
        let pos = if n > 1 {
            x as f64 * (n - 1) as f64 / (width - 1) as f64
        } else {
            0.0
        };
        let i = (pos.floor() as usize).min(n - 1);
        let j = (i + 1).min(n - 1);
        let t = pos - i as f64;
        let y = y_of(s[i] * (1.0 - t) + s[j] * t);
        // Join vertically to the previous column so steep segments stay connected.
        let (a, b) = match prev {
            Some(p) => (p.min(y), p.max(y)),
            None => (y, y),
        };
        for r in a..=b {
            img[[r, x]] = 0;
        }
        prev = Some(y);
    }
    Ok(img)
}

/// Shaded relief of a height map, as the tactile sensor would see it.
pub fn shaded_relief(h: &HeightMap) -> Result<Array3<f64>> {
    Ok(render_tactile(h, &PhotometricCalibration::default())?.into_pixels())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_truth_batch_spans_pixel_range() {
        let items: Vec<_> = [0.3, 0.45, 0.6]
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let h = HeightMap::canonical(Array2::from_shape_fn((10, 10), |(r, c)| {
                    ((r + c * (i + 1)) % 5) as f64 * 0.1
                }))
                .unwrap();
                let t = FrictionTrace::new(vec![*f; 128], 60.0).unwrap();
                (format!("o{i}"), h, t)
            })
            .collect();
        let b = render_ground_truth(
            items,
            &StftParams::default(),
            Reference::Fixed(32.0),
            &RenderOptions::default(),
        )
        .unwrap();
        let all: Vec<u8> = b
            .objects
            .iter()
            .flat_map(|o| o.friction.pixels.iter().copied())
            .collect();
        assert_eq!(*all.iter().min().unwrap(), 0);
        assert_eq!(*all.iter().max().unwrap(), 255);
        assert!((b.objects[2].mean_friction - 0.6).abs() < 1e-12);
    }

    #[test]
    fn empty_render_is_an_error() {
        assert!(render_ground_truth(
            Vec::new(),
            &StftParams::default(),
            Reference::Max,
            &RenderOptions::default()
        )
        .is_err());
    }

    #[test]
    fn trace_plot_draws_every_column() {
        let t = FrictionTrace::new(
            (0..50)
                .map(|i| 0.3 + 0.1 * (i as f64 * 0.3).sin())
                .collect(),
            60.0,
        )
        .unwrap();
        let img = plot_trace(&t, 120, 40).unwrap();
        for c in 0..120 {
            assert!(img.column(c).iter().any(|v| *v == 0));
        }
    }
}
