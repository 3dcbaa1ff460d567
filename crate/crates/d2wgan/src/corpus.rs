//! Corpus manifests: one `split<TAB>relative/path.wav` line per file,
//! paths relative to the manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use d2wgan_core::dataset::{DatasetSplit, SplitPart};

use crate::error::{Error, IoContext, Result};

pub const CORPUS_FILE: &str = "corpus.tsv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub part: SplitPart,
    /// As written in the manifest.
    pub rel: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub base: PathBuf,
    pub entries: Vec<CorpusEntry>,
}

impl Corpus {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).at(path)?;
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: &str| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                reason: reason.to_string(),
            };
            let (tag, rel) = line
                .split_once('\t')
                .ok_or_else(|| bad("expected `split<TAB>path`"))?;
            let part = SplitPart::parse(tag.trim())
                .ok_or_else(|| bad("split must be train, validation or test"))?;
            if rel.is_empty() || Path::new(rel).is_absolute() {
                return Err(bad("path must be relative"));
            }
            entries.push(CorpusEntry {
                part,
                rel: rel.to_string(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for e in &entries {
            if !seen.insert(&e.rel) {
                return Err(Error::Config(format!(
                    "{} appears twice in {}",
                    e.rel,
                    path.display()
                )));
            }
        }
        Ok(Self {
            base: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            entries,
        })
    }

    /// Manifest for `split`, whose file ids are paths relative to `base`.
    pub fn from_split(base: impl Into<PathBuf>, split: &DatasetSplit) -> Self {
        let entries = [SplitPart::Train, SplitPart::Validation, SplitPart::Test]
            .into_iter()
            .flat_map(|p| {
                split.part(p).iter().map(move |rel| CorpusEntry {
                    part: p,
                    rel: rel.clone(),
                })
            })
            .collect();
        Self {
            base: base.into(),
            entries,
        }
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("{}\t{}\n", e.part.name(), e.rel))
            .collect()
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::checkpoint_io::write_atomic(path.as_ref(), self.to_text().as_bytes())
    }

    /// Absolute paths of one split, in manifest order.
    pub fn files(&self, part: SplitPart) -> Vec<PathBuf> {
        self.entries
            .iter()
            .filter(|e| e.part == part)
            .map(|e| self.base.join(&e.rel))
            .collect()
    }
}

/// `*.wav` files directly under or below `dir`, as sorted paths relative to
/// it.
pub fn list_wavs(dir: impl AsRef<Path>) -> Result<Vec<String>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
        for entry in fs::read_dir(dir).at(dir)? {
            let p = entry.at(dir)?.path();
            if p.is_dir() {
                walk(root, &p, out)?;
            } else if p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")) {
                let rel = p.strip_prefix(root).expect("walk stays under root");
                out.push(rel.to_string_lossy().replace('\\', "/"));
            }
        }
        Ok(())
    }
    let dir = dir.as_ref();
    let mut out = Vec::new();
    walk(dir, dir, &mut out)?;
    out.sort();
    Ok(out)
}
