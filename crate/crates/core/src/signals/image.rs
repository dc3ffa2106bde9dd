use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::stft::{Spectrogram, StftParams};
use crate::error::{Error, Result};

pub const DEFAULT_DB_FLOOR: f64 = -80.0;

/// Magnitude level that maps to pixel 1.0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Reference {
    /// Largest magnitude in the spectrogram (1.0 if it is all zero).
    Max,
    Fixed(f64),
}

/// Log-magnitude spectrogram scaled to `[0, 1]`, the form exchanged with the
/// spectrogram generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrogramImage {
    /// Indexed `(frequency_bin, frame)`, same layout as the spectrogram.
    pub pixels: Array2<f64>,
    pub db_floor: f64,
    pub reference_magnitude: f64,
    pub params: StftParams,
    pub original_length: usize,
    pub sample_rate_hz: f64,
}

fn check_floor(db_floor: f64) -> Result<()> {
    if !(db_floor.is_finite() && db_floor < 0.0) {
        return Err(Error::invalid(
            "dB floor",
            format!("{db_floor} dB; the floor must be finite and below 0 dB"),
        ));
    }
    Ok(())
}

pub fn magnitude_to_pixel(magnitude: f64, reference: f64, db_floor: f64) -> f64 {
    if magnitude <= 0.0 {
        return 0.0;
    }
    let db = 20.0 * (magnitude / reference).log10();
    ((db - db_floor) / -db_floor).clamp(0.0, 1.0)
}

pub fn pixel_to_magnitude(pixel: f64, reference: f64, db_floor: f64) -> f64 {
    if pixel <= 0.0 {
        return 0.0;
    }
    let db = pixel.min(1.0) * -db_floor + db_floor;
    reference * 10f64.powf(db / 20.0)
}

pub fn spectrogram_to_image(
    spec: &Spectrogram,
    db_floor: f64,
    reference: Reference,
) -> Result<SpectrogramImage> {
    check_floor(db_floor)?;
    let mag = spec.magnitude();
    let reference_magnitude = match reference {
        Reference::Max => {
            let m = mag.iter().copied().fold(0.0, f64::max);
            if m > 0.0 {
                m
            } else {
                1.0
            }
        }
        Reference::Fixed(r) => {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::invalid(
                    "reference magnitude",
                    format!("{r} is not positive"),
                ));
            }
            r
        }
    };
    Ok(SpectrogramImage {
        pixels: mag.mapv(|m| magnitude_to_pixel(m, reference_magnitude, db_floor)),
        db_floor,
        reference_magnitude,
        params: spec.params,
        original_length: spec.original_length,
        sample_rate_hz: spec.sample_rate_hz,
    })
}

/// Inverts the dB mapping; pixels at 0 (the floor) become zero magnitude.
pub fn image_to_magnitude(img: &SpectrogramImage) -> Result<Spectrogram> {
    check_floor(img.db_floor)?;
    if img.pixels.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("spectrogram image", "non-finite pixel"));
    }
    let mag = img
        .pixels
        .mapv(|p| pixel_to_magnitude(p, img.reference_magnitude, img.db_floor));
    Spectrogram::from_magnitude(mag, img.params, img.original_length, img.sample_rate_hz)
}
