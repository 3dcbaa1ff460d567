//! Corpus splitting, segment geometry and lazy batch streaming.

mod layout;
mod segment;
mod split;
mod stream;
mod synth;

pub use layout::SegmentLayout;
pub use segment::{segment_offsets, Segment};
pub use split::{split_corpus, DatasetSplit, SplitPart, SplitRatios};
pub use stream::{
    stream_batches, BatchSource, BatchStream, MemoryStore, SampleStore, SegmentRef, StreamConfig,
};
pub use synth::{make_synthetic_corpus, SynthFile, SynthSpec, Tone};

pub(crate) use segment::concat;
