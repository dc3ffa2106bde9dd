use std::f64::consts::TAU;

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rand::Rng;

use super::stft::{Spectrogram, SpectrogramData, StftEngine};
use super::trace::FrictionTrace;
use crate::error::{Error, Result};
use crate::seed;

/// Starting phase for Griffin–Lim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseInit {
    #[default]
    Zero,
    Random {
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GriffinLim {
    pub iterations: usize,
    pub init: PhaseInit,
}

impl Default for GriffinLim {
    fn default() -> Self {
        Self {
            iterations: 64,
            init: PhaseInit::Zero,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhaseReconstruction {
    pub trace: FrictionTrace,
    /// Unclipped reconstructed samples; `trace` is these with negatives zeroed.
    pub samples: Vec<f64>,
    /// Spectral convergence of the estimate before the first projection and
    /// after each iteration (`iterations + 1` entries).
    pub errors: Vec<f64>,
}

/// Relative Frobenius distance between an estimated and a target magnitude,
/// measured over the full two-sided spectrum (interior bins count twice).
pub fn spectral_convergence(
    estimate: &Array2<f64>,
    target: &Array2<f64>,
    fft_length: usize,
) -> f64 {
    let nyquist = if fft_length.is_multiple_of(2) {
        Some(fft_length / 2)
    } else {
        None
    };
    let mut num = 0.0;
    let mut den = 0.0;
    for ((k, j), e) in estimate.indexed_iter() {
        let t = target[[k, j]];
        let w = if k == 0 || Some(k) == nyquist {
            1.0
        } else {
            2.0
        };
        num += w * (e - t) * (e - t);
        den += w * t * t;
    }
    if den == 0.0 {
        return if num == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (num / den).sqrt()
}

/// Recovers a trace whose STFT magnitude approximates `mag`.
///
/// Alternates the least-squares inverse transform with re-imposing the target
/// magnitude on the phase of the current estimate. With the least-squares
/// inverse the inconsistency between the two is non-increasing.
pub fn reconstruct_phase(mag: &Spectrogram, config: &GriffinLim) -> Result<PhaseReconstruction> {
    let target = match &mag.data {
        SpectrogramData::Magnitude(m) => m,
        SpectrogramData::Complex(_) => {
            return Err(Error::invalid(
                "phase reconstruction input",
                "expected a magnitude-only spectrogram",
            ))
        }
    };
    if config.iterations == 0 {
        return Err(Error::invalid(
            "phase reconstruction",
            "iterations must be at least 1",
        ));
    }
    if target.iter().any(|m| !m.is_finite() || *m < 0.0) {
        return Err(Error::invalid(
            "magnitude spectrogram",
            "values must be finite and non-negative",
        ));
    }
    let len = mag.original_length;
    let engine = StftEngine::new(mag.params)?;

    let mut bins: Array2<Complex64> = match config.init {
        PhaseInit::Zero => target.mapv(|m| Complex64::new(m, 0.0)),
        PhaseInit::Random { seed } => {
            let mut rng = seed::rng(seed);
            target.mapv(|m| Complex64::from_polar(m, rng.random::<f64>() * TAU))
        }
    };

    let fft_len = mag.params.fft_length;
    let mut errors = Vec::with_capacity(config.iterations + 1);
    let mut samples = engine.synthesize(&bins, len);
    for _ in 0..config.iterations {
        let analysis = engine.analyze(&samples);
        errors.push(spectral_convergence(
            &analysis.mapv(|z| z.norm()),
            target,
            fft_len,
        ));
        Zip::from(&mut bins)
            .and(&analysis)
            .and(target)
            .for_each(|b, a, m| {
                let n = a.norm();
                *b = if n > 0.0 {
                    a * (*m / n)
                } else {
                    Complex64::new(*m, 0.0)
                };
            });
        samples = engine.synthesize(&bins, len);
    }
    let analysis = engine.analyze(&samples);
    errors.push(spectral_convergence(
        &analysis.mapv(|z| z.norm()),
        target,
        fft_len,
    ));

    let (trace, _) = FrictionTrace::from_reconstruction(samples.clone(), mag.sample_rate_hz)?;
    Ok(PhaseReconstruction {
        trace,
        samples,
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{stft, StftParams};

    #[test]
    fn zero_magnitude_gives_zero_trace() {
        let p = StftParams::default();
        let mag =
            Spectrogram::from_magnitude(Array2::zeros((33, p.frame_count(128))), p, 128, 60.0)
                .unwrap();
        let r = reconstruct_phase(&mag, &GriffinLim::default()).unwrap();
        assert!(r.trace.samples().iter().all(|v| *v == 0.0));
        assert!(r.errors.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn rejects_complex_and_zero_iterations() {
        let t = FrictionTrace::new(vec![0.3; 128], 60.0).unwrap();
        let s = stft(&t, &StftParams::default()).unwrap();
        assert!(reconstruct_phase(&s, &GriffinLim::default()).is_err());
        let cfg = GriffinLim {
            iterations: 0,
            ..Default::default()
        };
        assert!(reconstruct_phase(&s.to_magnitude_only(), &cfg).is_err());
    }

    #[test]
    fn rejects_non_finite_magnitude() {
        let p = StftParams::default();
        let mut m = Array2::from_elem((33, p.frame_count(128)), 1.0);
        m[[3, 2]] = f64::NAN;
        let spec = Spectrogram {
            data: SpectrogramData::Magnitude(m),
            params: p,
            original_length: 128,
            sample_rate_hz: 60.0,
            cola: true,
        };
        assert!(reconstruct_phase(&spec, &GriffinLim::default()).is_err());
    }

    #[test]
    fn seeded_init_is_deterministic() {
        let x: Vec<f64> = (0..256)
            .map(|i| 0.4 + 0.1 * (i as f64 * 0.3).sin())
            .collect();
        let t = FrictionTrace::new(x, 60.0).unwrap();
        let mag = stft(&t, &StftParams::default())
            .unwrap()
            .to_magnitude_only();
        let cfg = GriffinLim {
            iterations: 10,
            init: PhaseInit::Random { seed: 9 },
        };
        let a = reconstruct_phase(&mag, &cfg).unwrap();
        let b = reconstruct_phase(&mag, &cfg).unwrap();
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn spectral_convergence_weights_interior_bins() {
        let target = Array2::from_shape_vec((3, 1), vec![1.0, 1.0, 1.0]).unwrap();
        let est = Array2::from_shape_vec((3, 1), vec![1.0, 0.0, 1.0]).unwrap();
        // fft length 4: bins 0 and 2 count once, bin 1 twice.
        let sc = spectral_convergence(&est, &target, 4);
        assert!((sc - (2.0f64 / 4.0).sqrt()).abs() < 1e-15);
    }
}
