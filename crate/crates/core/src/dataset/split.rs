use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// Train and validation fractions; the test split takes the remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatio {
    pub train: f64,
    pub val: f64,
}

impl Default for SplitRatio {
    fn default() -> Self {
        Self {
            train: 0.8,
            val: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }

    pub fn tally(splits: impl IntoIterator<Item = Split>) -> Self {
        let mut c = Self::default();
        for s in splits {
            match s {
                Split::Train => c.train += 1,
                Split::Val => c.val += 1,
                Split::Test => c.test += 1,
            }
        }
        c
    }
}

/// `⌊train·n⌋ / ⌊val·n⌋ / remainder`.
pub fn split_sizes(n: usize, ratio: SplitRatio) -> Result<SplitCounts> {
    if n < 3 {
        return Err(Error::invalid(
            "split",
            format!("need at least 3 items, got {n}"),
        ));
    }
    let ok = |f: f64| f.is_finite() && (0.0..=1.0).contains(&f);
    if !ok(ratio.train) || !ok(ratio.val) || ratio.train + ratio.val > 1.0 {
        return Err(Error::invalid(
            "split",
            format!(
                "ratio {}/{} is not a valid partition",
                ratio.train, ratio.val
            ),
        ));
    }
    // The epsilon keeps products like 0.8 * 3375 from landing just below an integer.
    let floor = |f: f64| ((f * n as f64) + 1e-9).floor() as usize;
    let train = floor(ratio.train);
    let val = floor(ratio.val).min(n - train);
    Ok(SplitCounts {
        train,
        val,
        test: n - train - val,
    })
}

/// Class-stratified seeded assignment of `labels.len()` items.
///
/// Items are shuffled within each class and the classes are interleaved
/// proportionally (each item is keyed by its fractional rank inside its class
/// plus a per-class seeded offset), so every prefix of the order holds the
/// classes in roughly their overall proportions. The first `train` items of
/// that order go to train, the next `val` to validation, the rest to test.
pub fn split<S: AsRef<str>>(
    labels: &[S],
    ratio: SplitRatio,
    seed_value: u64,
) -> Result<Vec<Split>> {
    let sizes = split_sizes(labels.len(), ratio)?;
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l.as_ref()).or_default().push(i);
    }
    let mut keyed: Vec<(f64, usize, usize)> = Vec::with_capacity(labels.len());
    for (ci, (class, members)) in by_class.iter_mut().enumerate() {
        let mut rng = seed::rng(seed::derive(seed_value, class));
        members.shuffle(&mut rng);
        let offset: f64 = rng.random();
        let n = members.len() as f64;
        for (rank, &item) in members.iter().enumerate() {
            keyed.push(((rank as f64 + offset) / n, ci, item));
        }
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out = vec![Split::Test; labels.len()];
    for (pos, &(_, _, item)) in keyed.iter().enumerate() {
        out[item] = if pos < sizes.train {
            Split::Train
        } else if pos < sizes.train + sizes.val {
            Split::Val
        } else {
            Split::Test
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sizes_follow_floor_rule() {
        let r = SplitRatio::default();
        assert_eq!(
            split_sizes(10, r).unwrap(),
            SplitCounts {
                train: 8,
                val: 1,
                test: 1
            }
        );
        assert_eq!(
            split_sizes(3375, r).unwrap(),
            SplitCounts {
                train: 2700,
                val: 337,
                test: 338
            }
        );
        assert_eq!(
            split_sizes(75, r).unwrap(),
            SplitCounts {
                train: 60,
                val: 7,
                test: 8
            }
        );
        assert!(split_sizes(2, r).is_err());
    }

    #[test]
    fn split_is_deterministic_and_sized() {
        let labels: Vec<String> = (0..3375).map(|i| format!("c{}", i % 15)).collect();
        let a = split(&labels, SplitRatio::default(), 5).unwrap();
        assert_eq!(a, split(&labels, SplitRatio::default(), 5).unwrap());
        assert_ne!(a, split(&labels, SplitRatio::default(), 6).unwrap());
        assert_eq!(
            SplitCounts::tally(a),
            SplitCounts {
                train: 2700,
                val: 337,
                test: 338
            }
        );
    }

    #[test]
    fn stratified_over_classes() {
        let labels: Vec<String> = (0..75).map(|i| format!("c{:02}", i / 5)).collect();
        let a = split(&labels, SplitRatio::default(), 1).unwrap();
        for c in 0..15 {
            let train = (0..5).filter(|k| a[c * 5 + k] == Split::Train).count();
            assert_eq!(train, 4, "class {c}");
        }
    }

    proptest! {
        #[test]
        fn counts_always_match_sizes(n in 3usize..400, classes in 1usize..12, s in any::<u64>()) {
            let labels: Vec<usize> = (0..n).map(|i| i % classes).map(|c| c * 7).collect();
            let labels: Vec<String> = labels.iter().map(|c| c.to_string()).collect();
            let a = split(&labels, SplitRatio::default(), s).unwrap();
            prop_assert_eq!(SplitCounts::tally(a), split_sizes(n, SplitRatio::default()).unwrap());
        }
    }
}
