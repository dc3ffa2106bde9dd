//! Training corpora: augmentation, splitting and the on-disk dataset layout.
//!
//! ```text
//! manifest.json        one DatasetManifest
//! visual/<id>.png      augmented 8-bit RGB visual image
//! tactile/<raw>.png    raw tactile image the height map was reconstructed from
//! height/<id>.png      16-bit height map, plus height/<id>.scale
//! trace/<id>.csv       friction window (time_s,mu)
//! spec/<id>.v2hs       complex spectrogram of that window
//! ```

mod augment;
mod build;
mod split;

pub use self::augment::{
    apply, apply_geometric, augment, rotate_plane, AugmentPolicy, Augmentation,
};
pub use self::build::{
    build, trace_windows, BuildConfig, DatasetManifest, SampleRecord, MANIFEST_FILE,
};
pub use self::split::{split, split_sizes, Split, SplitCounts, SplitRatio};
