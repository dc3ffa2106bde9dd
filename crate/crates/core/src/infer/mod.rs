//! Forward-only execution of exported generator networks.
//!
//! A network ships as one `V2HW` archive: a JSON [`GraphDescriptor`] listing
//! nodes in execution order, plus named f32 tensors. [`Generator::new`]
//! checks the topology, every tensor shape and the output contract once, so a
//! loaded generator cannot hit a shape error while running.

mod archive;
mod exec;
mod graph;
mod unet;

pub use self::archive::{ArchiveError, Tensor, WeightArchive, ARCHIVE_MAGIC, ARCHIVE_VERSION};
pub use self::exec::{resize_bilinear, FeatureMap, Generator};
pub use self::graph::{
    Affine, GraphDescriptor, Node, Op, OutputKind, PadMode, Shape, SpectrogramLayout, TensorSpec,
    INPUT,
};
pub use self::unet::{random_archive, UNetConfig};

use crate::error::{Error, Result};
use crate::photometric::HeightMap;
use crate::signals::{image_to_magnitude, Spectrogram, SpectrogramImage};
use crate::synth::VisualImage;

/// Outputs of the two generators for one visual image.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedPair {
    pub height: HeightMap,
    pub spectrogram_image: SpectrogramImage,
    pub spectrogram: Spectrogram,
}

/// Height map from a height generator, canonicalized to minimum 0.
pub fn generate_height(g: &Generator, x: &VisualImage) -> Result<HeightMap> {
    if !matches!(g.descriptor().output_kind, OutputKind::Height) {
        return Err(Error::invalid(
            "height generator",
            format!("`{}` does not produce heights", g.descriptor().name),
        ));
    }
    HeightMap::canonical(g.run(x)?)
}

/// Spectrogram image from a spectrogram generator, resampled to the layout's
/// bins × frames and clamped to `[0, 1]`.
pub fn generate_spectrogram_image(g: &Generator, x: &VisualImage) -> Result<SpectrogramImage> {
    let OutputKind::Spectrogram { layout } = &g.descriptor().output_kind else {
        return Err(Error::invalid(
            "spectrogram generator",
            format!("`{}` does not produce spectrograms", g.descriptor().name),
        ));
    };
    let raw = g.run(x)?;
    let pixels = resize_bilinear(&raw, layout.bins, layout.frames).mapv(|v| v.clamp(0.0, 1.0));
    Ok(SpectrogramImage {
        pixels,
        db_floor: layout.db_floor,
        reference_magnitude: layout.reference_magnitude,
        params: layout.stft,
        original_length: layout.original_length,
        sample_rate_hz: layout.sample_rate_hz,
    })
}

pub fn generate_pair(g_h: &Generator, g_s: &Generator, x: &VisualImage) -> Result<GeneratedPair> {
    let height = generate_height(g_h, x)?;
    let spectrogram_image = generate_spectrogram_image(g_s, x)?;
    let spectrogram = image_to_magnitude(&spectrogram_image)?;
    Ok(GeneratedPair {
        height,
        spectrogram_image,
        spectrogram,
    })
}
