use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use hapforge::dataset::{
    build, split, split_sizes, BuildConfig, DatasetManifest, Split, SplitRatio,
};
use hapforge::formats::{read_spectrogram, read_trace_csv};
use hapforge::signals::{istft, Spectrogram};
use hapforge::synth::{default_classes, make_corpus, CorpusConfig};
use tempfile::TempDir;

fn small_corpus(dir: &Path, classes: usize, per_class: usize, seed: u64) {
    let config = CorpusConfig {
        seed,
        samples_per_class: per_class,
        ..CorpusConfig::default()
    };
    make_corpus(&default_classes(classes, seed), &config, dir).unwrap();
}

fn small_build(root: &Path, seed: u64) -> DatasetManifest {
    small_corpus(&root.join("raw"), 4, 5, seed);
    let config = BuildConfig {
        seed,
        augmentations_per_sample: 3,
        ..BuildConfig::default()
    };
    build(&root.join("raw"), &root.join("ds"), &config).unwrap()
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for sub in std::fs::read_dir(dir).unwrap() {
        let p = sub.unwrap().path();
        if p.is_dir() {
            for (k, v) in files(&p) {
                out.insert(
                    format!("{}/{k}", p.file_name().unwrap().to_string_lossy()),
                    v,
                );
            }
        } else {
            out.insert(
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            );
        }
    }
    out
}

#[test]
fn counts_and_leakage() {
    let tmp = TempDir::new().unwrap();
    let m = small_build(tmp.path(), 21);
    assert_eq!(m.records.len(), 60);
    assert_eq!(m.counts.total(), 60);
    let mut split_of: BTreeMap<&str, Split> = BTreeMap::new();
    for r in &m.records {
        if let Some(prev) = split_of.insert(&r.raw_id, r.split) {
            assert_eq!(prev, r.split, "{} spans splits", r.raw_id);
        }
    }
    let classes: BTreeSet<_> = m
        .records_in(Split::Train)
        .map(|r| r.class_id.as_str())
        .collect();
    assert_eq!(classes.len(), 4);
}

#[test]
fn rebuild_is_byte_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    small_build(a.path(), 8);
    small_build(b.path(), 8);
    assert_eq!(files(&a.path().join("ds")), files(&b.path().join("ds")));
}

#[test]
fn seeds_change_the_dataset() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let (ma, mb) = (small_build(a.path(), 1), small_build(b.path(), 2));
    assert_ne!(ma.records[0].augmentation, mb.records[0].augmentation);
}

#[test]
fn stored_spectrogram_reconstructs_its_trace_window() {
    let tmp = TempDir::new().unwrap();
    let m = small_build(tmp.path(), 3);
    let ds = tmp.path().join("ds");
    for r in m.records.iter().step_by(7) {
        let trace = read_trace_csv(&ds.join(&r.trace_path)).unwrap();
        assert_eq!(trace.len(), m.config.trace_window);
        let data = read_spectrogram(&ds.join(&r.spectrogram_path)).unwrap();
        let spec = Spectrogram::from_data(data, m.config.stft, trace.len(), trace.sample_rate_hz())
            .unwrap();
        let back = istft(&spec).unwrap();
        let err = back
            .samples()
            .iter()
            .zip(trace.samples())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        // Payload is stored as f32; edge samples see the window tails amplify that rounding.
        assert!(err < 1e-4, "{}: {err}", r.id);
    }
}

#[test]
fn missing_corpus_is_an_error() {
    let tmp = TempDir::new().unwrap();
    assert!(build(
        &tmp.path().join("nope"),
        &tmp.path().join("ds"),
        &BuildConfig::default()
    )
    .is_err());
}

#[test]
fn split_sizes_for_the_full_corpus() {
    let s = split_sizes(3375, SplitRatio::default()).unwrap();
    assert_eq!((s.train, s.val, s.test), (2700, 337, 338));
    let raw = split_sizes(75, SplitRatio::default()).unwrap();
    assert_eq!(
        (raw.train * 45, raw.val * 45, raw.test * 45),
        (2700, 315, 360)
    );
}

#[test]
fn split_assignment_is_stratified() {
    let labels: Vec<String> = (0..75).map(|i| format!("c{:02}", i / 5)).collect();
    let a = split(&labels, SplitRatio::default(), 4).unwrap();
    let mut train_per_class: BTreeMap<&str, usize> = BTreeMap::new();
    for (l, s) in labels.iter().zip(&a) {
        if *s == Split::Train {
            *train_per_class.entry(l).or_default() += 1;
        }
    }
    assert!(
        train_per_class.values().all(|n| *n == 4),
        "{train_per_class:?}"
    );
    assert_eq!(a, split(&labels, SplitRatio::default(), 4).unwrap());
}
