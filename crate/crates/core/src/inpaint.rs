//! Gap generation and splicing.
//!
//! Crossfades run inside the gap: over the first `crossfade_len` samples the
//! output ramps linearly from the source towards the generated fill, and
//! mirrored at the right edge. Everything outside `[gap_start, gap_start +
//! Lg)` is copied unchanged, and a fill equal to the source's own gap
//! reproduces the source exactly.

use alloc::vec::Vec;

use crate::dataset::{Segment, SegmentLayout};
use crate::dsp::Waveform;
use crate::error::{invalid, Error, Result};
use crate::model::{sample_latent, GanModel};
use crate::rng::{self, tag};

pub const DEFAULT_CROSSFADE: usize = 64;

/// Anything that can produce a gap for a segment: a trained model, or a
/// stub in tests.
pub trait GapFiller {
    fn layout(&self) -> SegmentLayout;
    fn latent_dim(&self) -> usize;
    fn fill(&self, segment: &Segment, z: &[f64]) -> Result<Vec<f64>>;
}

impl GapFiller for GanModel {
    fn layout(&self) -> SegmentLayout {
        self.config.layout
    }

    fn latent_dim(&self) -> usize {
        self.config.latent.dim
    }

    fn fill(&self, segment: &Segment, z: &[f64]) -> Result<Vec<f64>> {
        self.inpaint_gap(segment, z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InpaintRequest {
    pub source: Waveform,
    pub gap_start: usize,
    pub layout: SegmentLayout,
    pub seed: u64,
    pub crossfade_len: usize,
}

impl InpaintRequest {
    pub fn new(source: Waveform, gap_start: usize, layout: SegmentLayout, seed: u64) -> Self {
        Self {
            source,
            gap_start,
            layout,
            seed,
            crossfade_len: DEFAULT_CROSSFADE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lc = self.layout.context_len();
        let lg = self.layout.gap_len();
        let len = self.source.len();
        if self.gap_start < lc || self.gap_start + lg + lc > len {
            return Err(Error::OutOfRange {
                start: self.gap_start.saturating_sub(lc),
                end: self.gap_start + lg + lc,
                len,
            });
        }
        check_crossfade(self.crossfade_len, lg)
    }
}

fn check_crossfade(crossfade_len: usize, gap_len: usize) -> Result<()> {
    if 2 * crossfade_len > gap_len {
        return Err(invalid(
            "crossfade_len",
            alloc::format!("{crossfade_len} exceeds half the gap length {gap_len}"),
        ));
    }
    Ok(())
}

/// Insert `gap_fill` at `gap_start` with linear crossfades of
/// `crossfade_len` samples at both gap edges.
pub fn splice(
    context: &Waveform,
    gap_fill: &[f64],
    gap_start: usize,
    crossfade_len: usize,
) -> Result<Waveform> {
    let lg = gap_fill.len();
    if lg == 0 {
        return Err(Error::Empty("gap fill"));
    }
    check_crossfade(crossfade_len, lg)?;
    let end = gap_start + lg;
    if end > context.len() {
        return Err(Error::OutOfRange {
            start: gap_start,
            end,
            len: context.len(),
        });
    }
    let mut out = context.samples().to_vec();
    let cf = crossfade_len as f64;
    for (p, &fill) in gap_fill.iter().enumerate() {
        let from_edge = p.min(lg - 1 - p);
        let x = out[gap_start + p];
        out[gap_start + p] = if from_edge < crossfade_len {
            let a = (from_edge + 1) as f64 / cf;
            x + a * (fill - x)
        } else {
            fill
        };
    }
    Waveform::new(out, context.sample_rate())
}

/// Generate the gap of `req` with `filler` and splice it into the source.
pub fn inpaint(filler: &dyn GapFiller, req: &InpaintRequest) -> Result<Waveform> {
    req.validate()?;
    if filler.layout() != req.layout {
        return Err(invalid(
            "layout",
            alloc::format!(
                "model layout {:?} differs from request layout {:?}",
                filler.layout(),
                req.layout
            ),
        ));
    }
    let offset = req.gap_start - req.layout.context_len();
    let segment = Segment::cut(req.source.samples(), req.layout, "inpaint", offset)?;
    let z = sample_latent(
        filler.latent_dim(),
        &mut rng::stream(req.seed, &[tag::INPAINT]),
    );
    let fill = filler.fill(&segment, &z)?;
    if fill.len() != req.layout.gap_len() {
        return Err(Error::LengthMismatch {
            what: "generated gap",
            expected: req.layout.gap_len(),
            actual: fill.len(),
        });
    }
    splice(&req.source, &fill, req.gap_start, req.crossfade_len)
}
