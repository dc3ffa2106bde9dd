use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nominal force/torque sensor rate.
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 60.0;

/// A sliding-friction recording: dimensionless friction coefficients sampled
/// at a fixed rate along a straight path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrictionTrace {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl FrictionTrace {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("friction trace", "no samples"));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::invalid(
                "friction trace",
                format!("sample rate {sample_rate_hz} is not positive"),
            ));
        }
        if let Some((i, v)) = samples
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::invalid(
                "friction trace",
                format!("sample {i} = {v} is not a finite non-negative coefficient"),
            ));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    /// Builds a trace from a reconstructed signal, zeroing negative excursions.
    ///
    /// Returns the trace and the largest negative magnitude that was removed.
    pub fn from_reconstruction(mut samples: Vec<f64>, sample_rate_hz: f64) -> Result<(Self, f64)> {
        let mut clipped = 0.0_f64;
        for s in &mut samples {
            if *s < 0.0 {
                clipped = clipped.max(-*s);
                *s = 0.0;
            }
        }
        Ok((Self::new(samples, sample_rate_hz)?, clipped))
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    /// Multiplies every sample by `factor` (must be non-negative).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.samples.iter().map(|s| s * factor).collect(),
            self.sample_rate_hz,
        )
    }

    /// Copies `len` samples starting at `start`.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.samples.len() || len == 0 {
            return Err(Error::invalid(
                "trace window",
                format!(
                    "[{start}, {}) outside trace of {} samples",
                    start + len,
                    self.samples.len()
                ),
            ));
        }
        Self::new(
            self.samples[start..start + len].to_vec(),
            self.sample_rate_hz,
        )
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// Average friction coefficient over the trace.
pub fn mean_friction(trace: &FrictionTrace) -> f64 {
    trace.samples.iter().sum::<f64>() / trace.samples.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_negative_and_nan() {
        assert!(FrictionTrace::new(vec![], 60.0).is_err());
        assert!(FrictionTrace::new(vec![0.1, -0.2], 60.0).is_err());
        assert!(FrictionTrace::new(vec![0.1, f64::NAN], 60.0).is_err());
        assert!(FrictionTrace::new(vec![0.1], 0.0).is_err());
    }

    #[test]
    fn mean_of_small_traces() {
        let t = FrictionTrace::new(vec![0.2, 0.4, 0.6], 60.0).unwrap();
        assert!((mean_friction(&t) - 0.4).abs() < 1e-15);
        let c = FrictionTrace::new(vec![0.37; 17], 60.0).unwrap();
        assert!((mean_friction(&c) - 0.37).abs() < 1e-15);
    }

    #[test]
    fn reconstruction_clips_negatives() {
        let (t, clipped) = FrictionTrace::from_reconstruction(vec![0.1, -1e-3, 0.2], 60.0).unwrap();
        assert_eq!(t.samples(), &[0.1, 0.0, 0.2]);
        assert_eq!(clipped, 1e-3);
    }

    #[test]
    fn window_bounds() {
        let t = FrictionTrace::new((0..10).map(f64::from).collect(), 60.0).unwrap();
        assert_eq!(t.window(2, 3).unwrap().samples(), &[2.0, 3.0, 4.0]);
        assert!(t.window(8, 3).is_err());
    }
}
