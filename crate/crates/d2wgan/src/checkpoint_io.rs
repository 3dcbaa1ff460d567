//! Checkpoint files and a background checkpoint writer.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::mpsc::{channel, Sender};
use std::thread::JoinHandle;

use d2wgan_core::model::Checkpoint;

use crate::error::{Error, IoContext, Result};

/// Write `bytes` to `path` atomically: temp file, fsync, rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).at(dir)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp).at(&tmp)?;
        f.write_all(bytes).at(&tmp)?;
        f.sync_all().at(&tmp)?;
    }
    fs::rename(&tmp, path).at(path)
}

pub fn save_checkpoint(path: impl AsRef<Path>, ckpt: &Checkpoint) -> Result<()> {
    write_atomic(path.as_ref(), &ckpt.to_bytes())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = fs::read(path).at(path)?;
    Checkpoint::from_bytes(&bytes).map_err(|e| match e {
        d2wgan_core::Error::Corrupt(reason) => Error::Audio {
            path: path.to_path_buf(),
            reason: format!("corrupt checkpoint: {reason}"),
        },
        other => Error::Core(other),
    })
}

/// File name for the checkpoint taken after `step` generator steps.
pub fn checkpoint_name(step: u64) -> String {
    format!("step_{step:09}.ckpt")
}

/// Serializes and writes checkpoints on a worker thread so the training
/// loop only pays for cloning the parameters.
pub struct CheckpointWriter {
    tx: Option<Sender<(PathBuf, Checkpoint)>>,
    worker: Option<JoinHandle<Result<()>>>,
}

impl CheckpointWriter {
    pub fn spawn() -> Self {
        let (tx, rx) = channel::<(PathBuf, Checkpoint)>();
        let worker = std::thread::spawn(move || {
            for (path, ck) in rx {
                save_checkpoint(&path, &ck)?;
            }
            Ok(())
        });
        Self {
            tx: Some(tx),
            worker: Some(worker),
        }
    }

    pub fn submit(&self, path: PathBuf, ckpt: Checkpoint) -> Result<()> {
        self.tx
            .as_ref()
            .and_then(|tx| tx.send((path, ckpt)).ok())
            .ok_or_else(|| Error::Other("checkpoint writer stopped".into()))
    }

    /// Wait for every queued checkpoint to reach disk.
    pub fn finish(mut self) -> Result<()> {
        self.join()
    }

    fn join(&mut self) -> Result<()> {
        drop(self.tx.take());
        match self.worker.take() {
            Some(w) => w
                .join()
                .map_err(|_| Error::Other("checkpoint writer panicked".into()))?,
            None => Ok(()),
        }
    }
}

impl Drop for CheckpointWriter {
    fn drop(&mut self) {
        let _ = self.join();
    }
}
