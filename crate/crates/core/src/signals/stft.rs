use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::trace::{FrictionTrace, DEFAULT_SAMPLE_RATE_HZ};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    /// Raised cosine sampled at half-integer offsets, `sin²(π(n + ½)/N)`.
    ///
    /// The offset keeps every tap strictly positive, so the first sample of a
    /// trace is recoverable without padding, while the periodic overlap-add
    /// sum stays constant for any hop that divides `N/2`.
    #[default]
    Hann,
    Rectangular,
}

impl WindowKind {
    pub fn taps(self, len: usize) -> Vec<f64> {
        match self {
            WindowKind::Hann => (0..len)
                .map(|n| {
                    let s = (PI * (n as f64 + 0.5) / len as f64).sin();
                    s * s
                })
                .collect(),
            WindowKind::Rectangular => vec![1.0; len],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftParams {
    pub window_length: usize,
    pub hop_length: usize,
    pub window_kind: WindowKind,
    pub fft_length: usize,
}

impl Default for StftParams {
    fn default() -> Self {
        Self::hann(64, 16)
    }
}

impl StftParams {
    pub fn hann(window_length: usize, hop_length: usize) -> Self {
        Self {
            window_length,
            hop_length,
            window_kind: WindowKind::Hann,
            fft_length: window_length,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_length == 0 || self.hop_length == 0 {
            return Err(Error::invalid(
                "stft params",
                "window and hop must be positive",
            ));
        }
        if self.hop_length > self.window_length {
            return Err(Error::invalid(
                "stft params",
                format!(
                    "hop {} exceeds window {}",
                    self.hop_length, self.window_length
                ),
            ));
        }
        if self.fft_length < self.window_length {
            return Err(Error::invalid(
                "stft params",
                format!(
                    "fft length {} below window {}",
                    self.fft_length, self.window_length
                ),
            ));
        }
        Ok(())
    }

    pub fn bin_count(&self) -> usize {
        self.fft_length / 2 + 1
    }

    /// Frames needed to cover `len` samples; the last frame is zero-padded.
    pub fn frame_count(&self, len: usize) -> usize {
        if len <= self.window_length {
            1
        } else {
            1 + (len - self.window_length).div_ceil(self.hop_length)
        }
    }

    /// Whether shifted copies of the window (step `hop_length`) sum to a constant.
    pub fn satisfies_cola(&self) -> bool {
        let w = self.window_kind.taps(self.window_length);
        let hop = self.hop_length;
        let sums: Vec<f64> = (0..hop)
            .map(|phase| w.iter().skip(phase).step_by(hop).sum())
            .collect();
        let reference = sums[0];
        reference > 0.0
            && sums
                .iter()
                .all(|s| (s - reference).abs() <= 1e-10 * reference.abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpectrogramData {
    Complex(Array2<Complex64>),
    Magnitude(Array2<f64>),
}

/// Time-frequency matrix indexed `(frequency_bin, frame)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub data: SpectrogramData,
    pub params: StftParams,
    pub original_length: usize,
    pub sample_rate_hz: f64,
    /// False when the window/hop pair breaks constant overlap-add; such a
    /// spectrogram is kept for analysis but refused by `istft`.
    pub cola: bool,
}

impl Spectrogram {
    /// Attaches layout metadata to raw bins, checking shape and values.
    pub fn from_data(
        data: SpectrogramData,
        params: StftParams,
        original_length: usize,
        sample_rate_hz: f64,
    ) -> Result<Self> {
        params.validate()?;
        let expected = (params.bin_count(), params.frame_count(original_length));
        let (dim, finite) = match &data {
            SpectrogramData::Complex(c) => (
                c.dim(),
                c.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
            ),
            SpectrogramData::Magnitude(m) => {
                (m.dim(), m.iter().all(|v| v.is_finite() && *v >= 0.0))
            }
        };
        if dim != expected {
            return Err(Error::ShapeMismatch {
                left: vec![dim.0, dim.1],
                right: vec![expected.0, expected.1],
            });
        }
        if !finite {
            return Err(Error::invalid(
                "spectrogram",
                "values must be finite (and non-negative when magnitude-only)",
            ));
        }
        Ok(Self {
            data,
            cola: params.satisfies_cola(),
            params,
            original_length,
            sample_rate_hz,
        })
    }

    /// Builds a magnitude-only spectrogram, checking its layout.
    pub fn from_magnitude(
        magnitude: Array2<f64>,
        params: StftParams,
        original_length: usize,
        sample_rate_hz: f64,
    ) -> Result<Self> {
        Self::from_data(
            SpectrogramData::Magnitude(magnitude),
            params,
            original_length,
            sample_rate_hz,
        )
    }

    pub fn shape(&self) -> (usize, usize) {
        match &self.data {
            SpectrogramData::Complex(c) => c.dim(),
            SpectrogramData::Magnitude(m) => m.dim(),
        }
    }

    pub fn is_magnitude_only(&self) -> bool {
        matches!(self.data, SpectrogramData::Magnitude(_))
    }

    pub fn magnitude(&self) -> Array2<f64> {
        match &self.data {
            SpectrogramData::Complex(c) => c.mapv(|z| z.norm()),
            SpectrogramData::Magnitude(m) => m.clone(),
        }
    }

    /// Drops the phase.
    pub fn to_magnitude_only(&self) -> Spectrogram {
        Spectrogram {
            data: SpectrogramData::Magnitude(self.magnitude()),
            ..self.clone()
        }
    }
}

/// Reusable forward/inverse transform for one parameter set.
///
/// Holds only immutable plans and the window, so it can be shared between
/// threads.
#[derive(Clone)]
pub(crate) struct StftEngine {
    params: StftParams,
    window: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl StftEngine {
    pub(crate) fn new(params: StftParams) -> Result<Self> {
        params.validate()?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            window: params.window_kind.taps(params.window_length),
            forward: planner.plan_fft_forward(params.fft_length),
            inverse: planner.plan_fft_inverse(params.fft_length),
            params,
        })
    }

    pub(crate) fn analyze(&self, samples: &[f64]) -> Array2<Complex64> {
        let p = &self.params;
        let frames = p.frame_count(samples.len());
        let bins = p.bin_count();
        let mut out = Array2::zeros((bins, frames));
        let mut buf = vec![Complex64::new(0.0, 0.0); p.fft_length];
        for t in 0..frames {
            let start = t * p.hop_length;
            buf.fill(Complex64::new(0.0, 0.0));
            for (n, w) in self.window.iter().enumerate() {
                if let Some(x) = samples.get(start + n) {
                    buf[n] = Complex64::new(w * x, 0.0);
                }
            }
            self.forward.process(&mut buf);
            for k in 0..bins {
                out[[k, t]] = buf[k];
            }
        }
        out
    }

    /// Least-squares overlap-add inverse: each output sample is the
    /// window-weighted average of the frames covering it.
    pub(crate) fn synthesize(&self, bins: &Array2<Complex64>, len: usize) -> Vec<f64> {
        let p = &self.params;
        let nfft = p.fft_length;
        let (nbins, frames) = bins.dim();
        let mut acc = vec![0.0; len];
        let mut norm = vec![0.0; len];
        let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
        let scale = 1.0 / nfft as f64;
        for t in 0..frames {
            for k in 0..nbins {
                buf[k] = bins[[k, t]];
            }
            for k in nbins..nfft {
                buf[k] = bins[[nfft - k, t]].conj();
            }
            self.inverse.process(&mut buf);
            let start = t * p.hop_length;
            for (n, w) in self.window.iter().enumerate() {
                let i = start + n;
                if i >= len {
                    break;
                }
                acc[i] += w * buf[n].re * scale;
                norm[i] += w * w;
            }
        }
        acc.iter()
            .zip(&norm)
            .map(|(a, d)| if *d > 0.0 { a / d } else { 0.0 })
            .collect()
    }
}

/// Short-time Fourier transform of a friction trace.
pub fn stft(trace: &FrictionTrace, params: &StftParams) -> Result<Spectrogram> {
    stft_samples(trace.samples(), trace.sample_rate_hz(), params)
}

pub(crate) fn stft_samples(
    samples: &[f64],
    sample_rate_hz: f64,
    params: &StftParams,
) -> Result<Spectrogram> {
    params.validate()?;
    if samples.len() < params.window_length {
        return Err(Error::TooShort {
            len: samples.len(),
            window: params.window_length,
        });
    }
    let engine = StftEngine::new(*params)?;
    Ok(Spectrogram {
        data: SpectrogramData::Complex(engine.analyze(samples)),
        params: *params,
        original_length: samples.len(),
        sample_rate_hz,
        cola: params.satisfies_cola(),
    })
}

/// Inverse transform of a spectrogram that still carries phase.
///
/// Negative excursions introduced by modified spectrograms are clipped to
/// zero, since friction coefficients cannot be negative.
pub fn istft(spec: &Spectrogram) -> Result<FrictionTrace> {
    let samples = istft_samples(spec)?;
    let rate = if spec.sample_rate_hz > 0.0 {
        spec.sample_rate_hz
    } else {
        DEFAULT_SAMPLE_RATE_HZ
    };
    let (trace, clipped) = FrictionTrace::from_reconstruction(samples, rate)?;
    if clipped > 1e-9 {
        log::debug!("istft clipped negative samples down to -{clipped:e}");
    }
    Ok(trace)
}

/// Raw inverse transform without the non-negativity projection.
pub fn istft_samples(spec: &Spectrogram) -> Result<Vec<f64>> {
    let bins = match &spec.data {
        SpectrogramData::Complex(c) => c,
        SpectrogramData::Magnitude(_) => return Err(Error::MagnitudeOnly),
    };
    if !spec.params.satisfies_cola() {
        return Err(Error::ColaViolation {
            window: spec.params.window_length,
            hop: spec.params.hop_length,
        });
    }
    let expected = (
        spec.params.bin_count(),
        spec.params.frame_count(spec.original_length),
    );
    if bins.dim() != expected {
        return Err(Error::ShapeMismatch {
            left: vec![bins.nrows(), bins.ncols()],
            right: vec![expected.0, expected.1],
        });
    }
    let engine = StftEngine::new(spec.params)?;
    Ok(engine.synthesize(bins, spec.original_length))
}
