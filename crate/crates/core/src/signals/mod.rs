//! Friction traces and their time-frequency representation.
//!
//! Traces become complex spectrograms through a windowed DFT; spectrograms
//! produced by a generator carry magnitude only and are turned back into
//! traces with Griffin–Lim phase retrieval.

mod image;
mod phase;
mod stft;
mod trace;

pub use self::image::{
    image_to_magnitude, magnitude_to_pixel, pixel_to_magnitude, spectrogram_to_image, Reference,
    SpectrogramImage, DEFAULT_DB_FLOOR,
};
pub use self::phase::{
    reconstruct_phase, spectral_convergence, GriffinLim, PhaseInit, PhaseReconstruction,
};
pub use self::stft::{
    istft, istft_samples, stft, Spectrogram, SpectrogramData, StftParams, WindowKind,
};
pub use self::trace::{mean_friction, FrictionTrace, DEFAULT_SAMPLE_RATE_HZ};
