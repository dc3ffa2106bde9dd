use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::augment::{apply, apply_geometric, AugmentPolicy, Augmentation};
use super::split::{split, Split, SplitCounts, SplitRatio};
use crate::error::{Error, Result};
use crate::formats;
use crate::photometric::{reconstruct_height, HeightMap, TactileImage};
use crate::seed;
use crate::signals::{stft, Reference, StftParams, DEFAULT_DB_FLOOR};
use crate::synth::{CalibrationRecord, CorpusIndex, VisualImage};

pub const MANIFEST_FILE: &str = "manifest.json";
const LOCK_FILE: &str = ".build.lock";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub seed: u64,
    /// Augmented records produced from each raw sample.
    pub augmentations_per_sample: usize,
    pub policy: AugmentPolicy,
    pub ratio: SplitRatio,
    pub stft: StftParams,
    /// Samples per friction window; windows overlap by half.
    pub trace_window: usize,
    pub db_floor: f64,
    /// Magnitude mapped to pixel 1.0 when spectrograms are shown as images.
    pub spectrogram_reference: f64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        let stft = StftParams::default();
        Self {
            seed: 0,
            augmentations_per_sample: 45,
            policy: AugmentPolicy::default(),
            ratio: SplitRatio::default(),
            trace_window: 240,
            db_floor: DEFAULT_DB_FLOOR,
            // A unit-level friction coefficient under the Hann window sums to window_length / 2.
            spectrogram_reference: stft.window_length as f64 / 2.0,
            stft,
        }
    }
}

impl BuildConfig {
    pub fn reference(&self) -> Reference {
        Reference::Fixed(self.spectrogram_reference)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub class_id: String,
    pub raw_id: String,
    pub visual_path: String,
    pub tactile_path: Option<String>,
    pub height_path: String,
    pub trace_path: String,
    pub spectrogram_path: String,
    pub split: Split,
    pub augmentation: Augmentation,
    /// First sample of the friction window within the raw trace.
    pub trace_offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub counts: SplitCounts,
    pub raw_counts: SplitCounts,
    pub config: BuildConfig,
    pub calibration: CalibrationRecord,
    pub provenance: String,
    pub records: Vec<SampleRecord>,
}

impl DatasetManifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = formats::read_text(&path)?;
        serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))
    }

    pub fn records_in(&self, split: Split) -> impl Iterator<Item = &SampleRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }
}

/// Start offsets of half-overlapping windows of `window` samples.
pub fn trace_windows(len: usize, window: usize) -> Vec<usize> {
    if window == 0 || len < window {
        return Vec::new();
    }
    let hop = (window / 2).max(1);
    (0..=(len - window) / hop).map(|k| k * hop).collect()
}

struct Lock(PathBuf);

impl Lock {
    fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(LOCK_FILE);
        OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(Self(path))
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

struct RawData {
    class_id: String,
    raw_id: String,
    visual: VisualImage,
    height: HeightMap,
    trace: crate::signals::FrictionTrace,
    windows: Vec<usize>,
    tactile_path: String,
    split: Split,
}

fn check_corpus(raw_dir: &Path, index: &CorpusIndex) -> Result<()> {
    if index.samples.is_empty() {
        return Err(Error::Dataset(format!(
            "{} lists no samples",
            raw_dir.display()
        )));
    }
    let mut per_class: BTreeMap<&str, usize> =
        index.classes.iter().map(|c| (c.id.as_str(), 0)).collect();
    for s in &index.samples {
        let slot = per_class.get_mut(s.class_id.as_str()).ok_or_else(|| {
            Error::Dataset(format!(
                "sample {} names unknown class {}",
                s.id, s.class_id
            ))
        })?;
        *slot += 1;
        for (what, p) in [
            ("visual image", &s.visual_path),
            ("tactile image", &s.tactile_path),
            ("friction trace", &s.trace_path),
        ] {
            if !raw_dir.join(p).is_file() {
                return Err(Error::Dataset(format!(
                    "class {}: missing {what} {p} for sample {}",
                    s.class_id, s.id
                )));
            }
        }
    }
    if let Some((class, _)) = per_class.iter().find(|(_, n)| **n == 0) {
        return Err(Error::Dataset(format!("class {class}: no samples")));
    }
    if per_class.len() < 2 {
        return Err(Error::Dataset("at least two classes are required".into()));
    }
    Ok(())
}

/// Builds a dataset from the raw corpus in `raw_dir`.
///
/// The split is drawn over raw samples (stratified by class) before
/// augmentation, so every augmented variant of one raw sample shares its
/// split. Height maps are reconstructed once per raw tactile image and then
/// follow the geometric part of each record's augmentation.
pub fn build(raw_dir: &Path, out_dir: &Path, config: &BuildConfig) -> Result<DatasetManifest> {
    if !raw_dir.is_dir() {
        return Err(Error::io(
            raw_dir,
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "raw corpus directory not found",
            ),
        ));
    }
    let index = CorpusIndex::read(raw_dir)?;
    check_corpus(raw_dir, &index)?;
    config.policy.validate()?;
    config.stft.validate()?;
    if config.augmentations_per_sample == 0 {
        return Err(Error::invalid(
            "build config",
            "augmentations_per_sample must be at least 1",
        ));
    }
    if config.trace_window < config.stft.window_length {
        return Err(Error::invalid(
            "build config",
            format!(
                "trace window {} is shorter than the STFT window {}",
                config.trace_window, config.stft.window_length
            ),
        ));
    }
    if !(config.spectrogram_reference.is_finite() && config.spectrogram_reference > 0.0) {
        return Err(Error::invalid(
            "build config",
            "spectrogram_reference must be positive",
        ));
    }
    let cal = index.calibration.to_calibration()?;
    let labels: Vec<&str> = index.samples.iter().map(|s| s.class_id.as_str()).collect();
    let raw_splits = split(&labels, config.ratio, seed::derive(config.seed, "split"))?;

    let _lock = Lock::acquire(out_dir)?;

    let raws = index
        .samples
        .par_iter()
        .zip(raw_splits.par_iter())
        .map(|(s, &sp)| -> Result<RawData> {
            let visual = VisualImage::new(formats::read_rgb_png(&raw_dir.join(&s.visual_path))?)?;
            let tactile_src = raw_dir.join(&s.tactile_path);
            let tactile = TactileImage::new(formats::read_rgb_png(&tactile_src)?)?;
            let height = reconstruct_height(&tactile, &cal)?;
            let trace = formats::read_trace_csv(&raw_dir.join(&s.trace_path))?;
            let windows = trace_windows(trace.len(), config.trace_window);
            if windows.is_empty() {
                return Err(Error::Dataset(format!(
                    "class {}: trace {} has {} samples, fewer than the {}-sample window",
                    s.class_id,
                    s.trace_path,
                    trace.len(),
                    config.trace_window
                )));
            }
            let tactile_path = format!("tactile/{}.png", s.id);
            formats::write_file(
                &out_dir.join(&tactile_path),
                &formats::read_file(&tactile_src)?,
            )?;
            Ok(RawData {
                class_id: s.class_id.clone(),
                raw_id: s.id.clone(),
                visual,
                height,
                trace,
                windows,
                tactile_path,
                split: sp,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> = (0..raws.len())
        .flat_map(|r| (0..config.augmentations_per_sample).map(move |k| (r, k)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(ri, k)| -> Result<SampleRecord> {
            let raw = &raws[ri];
            let id = format!("{}_a{k:02}", raw.raw_id);
            let aug = config.policy.sample(seed::derive(config.seed, &id))?;
            let visual = apply(&raw.visual, &aug)?;
            let height = HeightMap::canonical(apply_geometric(raw.height.heights(), &aug))?;
            let offset = raw.windows[k % raw.windows.len()];
            let window = raw.trace.window(offset, config.trace_window)?;
            let spec = stft(&window, &config.stft)?;

            let rec = SampleRecord {
                visual_path: format!("visual/{id}.png"),
                tactile_path: Some(raw.tactile_path.clone()),
                height_path: format!("height/{id}.png"),
                trace_path: format!("trace/{id}.csv"),
                spectrogram_path: format!("spec/{id}.v2hs"),
                class_id: raw.class_id.clone(),
                raw_id: raw.raw_id.clone(),
                split: raw.split,
                augmentation: aug,
                trace_offset: offset,
                id,
            };
            formats::write_rgb_png(&out_dir.join(&rec.visual_path), visual.pixels())?;
            formats::write_height_png(&out_dir.join(&rec.height_path), &height)?;
            formats::write_trace_csv(&out_dir.join(&rec.trace_path), &window)?;
            formats::write_spectrogram(&out_dir.join(&rec.spectrogram_path), &spec.data)?;
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = DatasetManifest {
        seed: config.seed,
        counts: SplitCounts::tally(records.iter().map(|r| r.split)),
        raw_counts: SplitCounts::tally(raws.iter().map(|r| r.split)),
        config: config.clone(),
        calibration: index.calibration.clone(),
        provenance: format!(
            "built from {} raw samples in {} classes; split drawn over raw samples before augmentation",
            raws.len(),
            index.classes.len()
        ),
        records,
    };
    let path = out_dir.join(MANIFEST_FILE);
    let json =
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::format(&path, e.to_string()))?;
    formats::write_file(&path, format!("{json}\n").as_bytes())?;
    log::info!(
        "dataset {}: {} records (train {}, val {}, test {})",
        out_dir.display(),
        manifest.records.len(),
        manifest.counts.train,
        manifest.counts.val,
        manifest.counts.test
    );
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_overlap_by_half() {
        assert_eq!(trace_windows(480, 240), vec![0, 120, 240]);
        assert_eq!(trace_windows(239, 240), Vec::<usize>::new());
        assert_eq!(trace_windows(240, 240), vec![0]);
    }

    #[test]
    fn missing_raw_dir_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = build(
            &dir.path().join("nope"),
            &dir.path().join("out"),
            &BuildConfig::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("nope"));
        // An empty directory has no corpus index.
        assert!(build(dir.path(), &dir.path().join("out"), &BuildConfig::default()).is_err());
    }
}
