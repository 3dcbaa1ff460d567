//! Disk-backed sample store and a background prefetching batch source.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::mpsc::{sync_channel, Receiver};
use std::thread::JoinHandle;

use d2wgan_core::dataset::{BatchSource, SampleStore, Segment};

use crate::wav::{read_wav_range, wav_info};

/// Reads segment windows straight from WAV files; nothing but the file
/// lengths stays resident.
#[derive(Debug, Clone)]
pub struct WavStore {
    files: HashMap<String, (PathBuf, usize)>,
    rate: u32,
}

impl WavStore {
    /// Index `paths` by their string form. All files must share one sample
    /// rate.
    pub fn open(paths: &[PathBuf]) -> crate::Result<Self> {
        let mut files = HashMap::new();
        let mut rate = None;
        for p in paths {
            let (spec, frames) = wav_info(p)?;
            match rate {
                None => rate = Some(spec.sample_rate),
                Some(r) if r != spec.sample_rate => {
                    return Err(crate::Error::Config(format!(
                        "{} has sample rate {} Hz, expected {r} Hz",
                        p.display(),
                        spec.sample_rate
                    )))
                }
                _ => {}
            }
            files.insert(Self::id(p), (p.clone(), frames));
        }
        Ok(Self {
            files,
            rate: rate.unwrap_or(0),
        })
    }

    pub fn id(path: &Path) -> String {
        path.to_string_lossy().into_owned()
    }

    pub fn sample_rate(&self) -> u32 {
        self.rate
    }
}

fn unknown(file: &str) -> d2wgan_core::Error {
    d2wgan_core::Error::Source(format!("unknown file `{file}`"))
}

impl SampleStore for WavStore {
    fn len_of(&self, file: &str) -> d2wgan_core::Result<usize> {
        self.files
            .get(file)
            .map(|(_, n)| *n)
            .ok_or_else(|| unknown(file))
    }

    fn read(&self, file: &str, offset: usize, len: usize) -> d2wgan_core::Result<Vec<f64>> {
        let (path, _) = self.files.get(file).ok_or_else(|| unknown(file))?;
        read_wav_range(path, offset, len).map_err(|e| match e {
            crate::Error::Core(c) => c,
            other => d2wgan_core::Error::Source(other.to_string()),
        })
    }
}

type Item = d2wgan_core::Result<Option<Vec<Segment>>>;

/// Runs an inner source on a worker thread, keeping at most `depth`
/// batches queued. Batch order is unchanged, so training results match the
/// unwrapped source; only timing differs.
pub struct PrefetchSource {
    rx: Receiver<Item>,
    consumed: u64,
    done: bool,
    worker: Option<JoinHandle<()>>,
}

impl PrefetchSource {
    pub fn new<B: BatchSource + Send + 'static>(mut inner: B, depth: usize) -> Self {
        let (tx, rx) = sync_channel::<Item>(depth.max(1));
        let worker = std::thread::spawn(move || loop {
            let item = inner.next_batch();
            let stop = !matches!(item, Ok(Some(_)));
            if tx.send(item).is_err() || stop {
                break;
            }
        });
        Self {
            rx,
            consumed: 0,
            done: false,
            worker: Some(worker),
        }
    }
}

impl BatchSource for PrefetchSource {
    fn next_batch(&mut self) -> d2wgan_core::Result<Option<Vec<Segment>>> {
        if self.done {
            return Ok(None);
        }
        match self.rx.recv() {
            Ok(Ok(Some(b))) => {
                self.consumed += 1;
                Ok(Some(b))
            }
            Ok(other) => {
                self.done = true;
                other
            }
            Err(_) => {
                self.done = true;
                Ok(None)
            }
        }
    }

    fn batches_consumed(&self) -> u64 {
        self.consumed
    }

    fn fast_forward(&mut self, n: u64) -> d2wgan_core::Result<()> {
        for _ in 0..n {
            if self.next_batch()?.is_none() {
                break;
            }
        }
        Ok(())
    }
}

impl Drop for PrefetchSource {
    fn drop(&mut self) {
        // Closing the channel unblocks the worker's pending send.
        let (_tx, rx) = sync_channel(1);
        drop(std::mem::replace(&mut self.rx, rx));
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}
