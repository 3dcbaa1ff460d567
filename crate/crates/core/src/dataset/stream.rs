use alloc::collections::VecDeque;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::layout::SegmentLayout;
use super::segment::{segment_offsets, Segment};
use crate::dsp::Waveform;
use crate::error::{invalid, Error, Result};
use crate::rng::{self, tag};

/// Random-access sample storage keyed by file identifier. Implementations
/// decide how much stays resident; the stream only ever asks for one
/// segment window at a time.
pub trait SampleStore {
    fn len_of(&self, file: &str) -> Result<usize>;
    fn read(&self, file: &str, offset: usize, len: usize) -> Result<Vec<f64>>;
}

/// In-memory store, used for synthetic corpora and tests.
#[derive(Debug, Clone, Default)]
pub struct MemoryStore {
    files: Vec<(String, Waveform)>,
}

impl MemoryStore {
    pub fn new(files: Vec<(String, Waveform)>) -> Self {
        Self { files }
    }

    pub fn ids(&self) -> Vec<String> {
        self.files.iter().map(|(id, _)| id.clone()).collect()
    }

    pub fn get(&self, file: &str) -> Option<&Waveform> {
        self.files.iter().find(|(id, _)| id == file).map(|(_, w)| w)
    }
}

impl SampleStore for MemoryStore {
    fn len_of(&self, file: &str) -> Result<usize> {
        self.get(file)
            .map(Waveform::len)
            .ok_or_else(|| Error::Source(alloc::format!("unknown file `{file}`")))
    }

    fn read(&self, file: &str, offset: usize, len: usize) -> Result<Vec<f64>> {
        let w = self
            .get(file)
            .ok_or_else(|| Error::Source(alloc::format!("unknown file `{file}`")))?;
        w.samples()
            .get(offset..offset + len)
            .map(<[f64]>::to_vec)
            .ok_or(Error::OutOfRange {
                start: offset,
                end: offset + len,
                len: w.len(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamConfig {
    pub batch_size: usize,
    /// Maximum number of segments read ahead of the batch being assembled.
    pub window_size: usize,
    /// Distance between consecutive segment starts; `None` means
    /// non-overlapping (stride = L).
    pub stride: Option<usize>,
    /// Stop after this many passes over the files; `None` streams forever.
    pub max_epochs: Option<u64>,
    pub seed: u64,
}

impl StreamConfig {
    pub fn new(batch_size: usize, seed: u64) -> Self {
        Self {
            batch_size,
            window_size: batch_size.max(1) * 2,
            stride: None,
            max_epochs: None,
            seed,
        }
    }
}

/// Position of one segment in the corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentRef {
    pub file: String,
    pub offset: usize,
}

/// Source of training batches for the trainer.
pub trait BatchSource {
    fn next_batch(&mut self) -> Result<Option<Vec<Segment>>>;

    /// Batches handed out so far.
    fn batches_consumed(&self) -> u64;

    /// Skip `n` batches without reading samples.
    fn fast_forward(&mut self, n: u64) -> Result<()>;
}

/// Lazy, windowed iterator over fixed-size batches of segments.
///
/// Each epoch shuffles the file order with a seed derived from the base
/// seed and the epoch index, then walks the segment offsets of every file.
/// Batches run across epoch boundaries so every batch is full; a finite
/// stream drops the trailing partial batch.
pub struct BatchStream<S> {
    store: S,
    files: Vec<(String, usize)>,
    layout: SegmentLayout,
    cfg: StreamConfig,
    stride: usize,
    epoch: u64,
    plan: Vec<SegmentRef>,
    cursor: usize,
    buffer: VecDeque<Segment>,
    batches: u64,
    resident: usize,
    peak_resident: usize,
}

impl<S: SampleStore> BatchStream<S> {
    pub fn new(
        store: S,
        files: &[String],
        layout: SegmentLayout,
        cfg: StreamConfig,
    ) -> Result<Self> {
        if cfg.batch_size == 0 {
            return Err(invalid("batch_size", "must be at least 1"));
        }
        if cfg.window_size == 0 {
            return Err(invalid("window_size", "must be at least 1"));
        }
        let stride = cfg.stride.unwrap_or(layout.total_len());
        if stride == 0 {
            return Err(invalid("stride", "must be at least 1"));
        }
        let files = files
            .iter()
            .map(|f| Ok((f.clone(), store.len_of(f)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut s = Self {
            store,
            files,
            layout,
            cfg,
            stride,
            epoch: 0,
            plan: Vec::new(),
            cursor: 0,
            buffer: VecDeque::new(),
            batches: 0,
            resident: 0,
            peak_resident: 0,
        };
        s.plan = s.epoch_plan(0);
        Ok(s)
    }

    /// Segment order for one epoch.
    pub fn epoch_plan(&self, epoch: u64) -> Vec<SegmentRef> {
        let mut order: Vec<usize> = (0..self.files.len()).collect();
        order.shuffle(&mut rng::stream(self.cfg.seed, &[tag::EPOCH, epoch]));
        order
            .into_iter()
            .flat_map(|i| {
                let (file, len) = &self.files[i];
                segment_offsets(*len, &self.layout, self.stride).map(move |offset| SegmentRef {
                    file: file.clone(),
                    offset,
                })
            })
            .collect()
    }

    pub fn segments_per_epoch(&self) -> usize {
        self.plan.len()
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// Largest number of samples held by the stream at any time.
    pub fn peak_resident_samples(&self) -> usize {
        self.peak_resident
    }

    pub fn store(&self) -> &S {
        &self.store
    }

    /// Take the next segment reference, rolling over to a freshly shuffled
    /// epoch when needed. `None` once the stream is finished.
    fn advance(&mut self) -> Option<SegmentRef> {
        if self.plan.is_empty() {
            return None;
        }
        if self.cursor == self.plan.len() {
            if self.cfg.max_epochs.is_some_and(|m| self.epoch + 1 >= m) {
                return None;
            }
            self.epoch += 1;
            self.plan = self.epoch_plan(self.epoch);
            self.cursor = 0;
        }
        let r = self.plan[self.cursor].clone();
        self.cursor += 1;
        Some(r)
    }

    fn segments_left_in_stream(&self) -> Option<u64> {
        let m = self.cfg.max_epochs?;
        let per = self.plan.len() as u64;
        let later = m.saturating_sub(self.epoch + 1) * per;
        Some(later + (self.plan.len() - self.cursor) as u64 + self.buffer.len() as u64)
    }

    fn load(&mut self, r: &SegmentRef) -> Result<Segment> {
        let window = self
            .store
            .read(&r.file, r.offset, self.layout.total_len())?;
        Segment::from_window(window, self.layout, r.file.clone(), r.offset)
    }

    fn refill(&mut self) -> Result<()> {
        while self.buffer.len() < self.cfg.window_size {
            let Some(r) = self.advance() else { break };
            let seg = self.load(&r)?;
            self.resident += seg.full().len();
            self.peak_resident = self.peak_resident.max(self.resident);
            self.buffer.push_back(seg);
        }
        Ok(())
    }
}

impl<S: SampleStore> BatchSource for BatchStream<S> {
    fn next_batch(&mut self) -> Result<Option<Vec<Segment>>> {
        if let Some(left) = self.segments_left_in_stream() {
            if left < self.cfg.batch_size as u64 {
                return Ok(None);
            }
        }
        let mut batch = Vec::with_capacity(self.cfg.batch_size);
        while batch.len() < self.cfg.batch_size {
            if self.buffer.is_empty() {
                self.refill()?;
            }
            match self.buffer.pop_front() {
                Some(seg) => batch.push(seg),
                None => {
                    self.resident = self.buffer.iter().map(|s| s.full().len()).sum();
                    return Ok(None);
                }
            }
        }
        // the batch now belongs to the caller
        self.resident -= batch.iter().map(|s| s.full().len()).sum::<usize>();
        self.batches += 1;
        Ok(Some(batch))
    }

    fn batches_consumed(&self) -> u64 {
        self.batches
    }

    fn fast_forward(&mut self, n: u64) -> Result<()> {
        let mut skip = n * self.cfg.batch_size as u64;
        while skip > 0 {
            if self.buffer.pop_front().is_some() {
                skip -= 1;
                continue;
            }
            if self.advance().is_none() {
                return Err(Error::Source(
                    "stream ended while fast-forwarding".to_string(),
                ));
            }
            skip -= 1;
        }
        self.resident = self.buffer.iter().map(|s| s.full().len()).sum();
        self.batches += n;
        Ok(())
    }
}

impl<S: SampleStore> Iterator for BatchStream<S> {
    type Item = Result<Vec<Segment>>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_batch().transpose()
    }
}

/// Build a batch stream over an in-memory corpus.
pub fn stream_batches(
    store: MemoryStore,
    files: &[String],
    layout: SegmentLayout,
    cfg: StreamConfig,
) -> Result<BatchStream<MemoryStore>> {
    BatchStream::new(store, files, layout, cfg)
}
