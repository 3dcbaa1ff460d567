use alloc::string::String;
use alloc::vec::Vec;

use super::layout::SegmentLayout;
use crate::dsp::decimate;
use crate::error::{Error, Result};

/// One `L`-sample window of a source file. The gap and both border pairs
/// are views into `full`, so they can never disagree with it.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    full: Vec<f64>,
    layout: SegmentLayout,
    source: String,
    offset: usize,
}

impl Segment {
    /// Cut the window starting at `offset` out of `samples`.
    pub fn cut(
        samples: &[f64],
        layout: SegmentLayout,
        source: impl Into<String>,
        offset: usize,
    ) -> Result<Self> {
        let end = offset
            .checked_add(layout.total_len())
            .filter(|&e| e <= samples.len())
            .ok_or(Error::OutOfRange {
                start: offset,
                end: offset.saturating_add(layout.total_len()),
                len: samples.len(),
            })?;
        Ok(Self {
            full: samples[offset..end].to_vec(),
            layout,
            source: source.into(),
            offset,
        })
    }

    /// Wrap an already-extracted window.
    pub fn from_window(
        full: Vec<f64>,
        layout: SegmentLayout,
        source: impl Into<String>,
        offset: usize,
    ) -> Result<Self> {
        if full.len() != layout.total_len() {
            return Err(Error::LengthMismatch {
                what: "segment window",
                expected: layout.total_len(),
                actual: full.len(),
            });
        }
        Ok(Self {
            full,
            layout,
            source: source.into(),
            offset,
        })
    }

    pub fn full(&self) -> &[f64] {
        &self.full
    }

    pub fn layout(&self) -> SegmentLayout {
        self.layout
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn gap(&self) -> &[f64] {
        let s = self.layout.gap_start();
        &self.full[s..s + self.layout.gap_len()]
    }

    fn borders(&self, len: usize) -> (&[f64], &[f64]) {
        let gs = self.layout.gap_start();
        let ge = gs + self.layout.gap_len();
        (&self.full[gs - len..gs], &self.full[ge..ge + len])
    }

    /// Short borders (left, right).
    pub fn borders1(&self) -> (&[f64], &[f64]) {
        self.borders(self.layout.border1_len())
    }

    /// Long borders (left, right) at full rate.
    pub fn borders2(&self) -> (&[f64], &[f64]) {
        self.borders(self.layout.border2_len())
    }

    /// Long borders after decimation for the long branch.
    pub fn borders2_ds(&self) -> (Vec<f64>, Vec<f64>) {
        let (l, r) = self.borders2();
        let f = self.layout.long_branch_downsample();
        (decimate(l, f), decimate(r, f))
    }

    /// `borders1.left ++ gap ++ borders1.right`.
    pub fn real1(&self) -> Vec<f64> {
        let (l, r) = self.borders1();
        concat(l, self.gap(), r)
    }

    /// `borders2.left ++ gap ++ borders2.right` at full rate.
    pub fn real2(&self) -> Vec<f64> {
        let (l, r) = self.borders2();
        concat(l, self.gap(), r)
    }

    /// Identifier used in diagnostics.
    pub fn id(&self) -> String {
        alloc::format!("{}@{}", self.source, self.offset)
    }
}

pub(crate) fn concat(left: &[f64], mid: &[f64], right: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(left.len() + mid.len() + right.len());
    v.extend_from_slice(left);
    v.extend_from_slice(mid);
    v.extend_from_slice(right);
    v
}

/// Segment offsets for a file of `len` samples, stepping by `stride`.
pub fn segment_offsets(
    len: usize,
    layout: &SegmentLayout,
    stride: usize,
) -> impl Iterator<Item = usize> {
    let total = layout.total_len();
    let count = if len < total {
        0
    } else {
        (len - total) / stride.max(1) + 1
    };
    (0..count).map(move |i| i * stride.max(1))
}
