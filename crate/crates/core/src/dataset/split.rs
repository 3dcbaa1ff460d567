use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{invalid, Result};
use crate::rng::{self, tag};

/// Fractions of files assigned to train / validation / test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    /// 80/10/10, which reproduces the file counts of the PIANO (19 → 15/2/2)
    /// and SOLO (48 → 38/5/5) corpora.
    fn default() -> Self {
        Self {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
        }
    }
}

/// File-level partition of a corpus.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
    /// Seconds of audio per split, filled in by [`DatasetSplit::with_durations`].
    pub durations_s: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitPart {
    Train,
    Validation,
    Test,
}

impl SplitPart {
    pub fn name(self) -> &'static str {
        match self {
            Self::Train => "train",
            Self::Validation => "validation",
            Self::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Self::Train),
            "validation" | "val" => Some(Self::Validation),
            "test" => Some(Self::Test),
            _ => None,
        }
    }
}

impl DatasetSplit {
    pub fn part(&self, p: SplitPart) -> &[String] {
        match p {
            SplitPart::Train => &self.train,
            SplitPart::Validation => &self.validation,
            SplitPart::Test => &self.test,
        }
    }

    pub fn part_mut(&mut self, p: SplitPart) -> &mut Vec<String> {
        match p {
            SplitPart::Train => &mut self.train,
            SplitPart::Validation => &mut self.validation,
            SplitPart::Test => &mut self.test,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn with_durations(mut self, duration_s: impl Fn(&str) -> f64) -> Self {
        for (i, p) in [SplitPart::Train, SplitPart::Validation, SplitPart::Test]
            .into_iter()
            .enumerate()
        {
            self.durations_s[i] = self.part(p).iter().map(|f| duration_s(f)).sum();
        }
        self
    }

    /// A split that puts every file in one part.
    pub fn single(part: SplitPart, files: Vec<String>) -> Self {
        let mut s = Self::default();
        *s.part_mut(part) = files;
        s
    }
}

/// Seeded file-granular split. Validation and test sizes are the rounded
/// ratio shares (at least one file each); training takes the rest.
pub fn split_corpus(files: &[String], ratios: SplitRatios, seed: u64) -> Result<DatasetSplit> {
    let SplitRatios {
        train,
        validation,
        test,
    } = ratios;
    if !(train > 0.0 && validation > 0.0 && test > 0.0) {
        return Err(invalid("ratios", "all ratios must be positive"));
    }
    if (train + validation + test - 1.0).abs() > 1e-9 {
        return Err(invalid("ratios", "ratios must sum to 1"));
    }
    let n = files.len();
    if n < 3 {
        return Err(invalid(
            "files",
            alloc::format!("need at least 3 files, got {n}"),
        ));
    }
    let n_val = libm::round(n as f64 * validation).max(1.0) as usize;
    let n_test = libm::round(n as f64 * test).max(1.0) as usize;
    if n_val + n_test >= n {
        return Err(invalid("files", "too few files for the requested ratios"));
    }
    let mut order: Vec<String> = files.to_vec();
    order.shuffle(&mut rng::stream(seed, &[tag::SPLIT]));
    let test_files = order.split_off(n - n_test);
    let val_files = order.split_off(n - n_test - n_val);
    Ok(DatasetSplit {
        train: order,
        validation: val_files,
        test: test_files,
        durations_s: [0.0; 3],
    })
}
