//! Run directories, loss traces and run manifests.
//!
//! Layout of a training run directory:
//!
//! ```text
//! <root>/<YYYYmmdd-HHMMSS>-<arch>/
//!     manifest.json       RunManifest
//!     config.toml         effective configuration
//!     trace.jsonl         one TraceRow per monitored step
//!     checkpoints/step_000001000.ckpt
//!     abort.json          only after a non-finite loss
//! ```

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use d2wgan_core::model::{Checkpoint, GanModel};
use d2wgan_core::training::{TraceRow, TrainObserver};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::checkpoint_io::{checkpoint_name, write_atomic, CheckpointWriter};
use crate::error::{Error, IoContext, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const TRACE_FILE: &str = "trace.jsonl";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const ABORT_FILE: &str = "abort.json";

pub fn unix_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let mut f = File::open(path).at(path)?;
    let mut h = Sha256::new();
    std::io::copy(&mut f, &mut h).at(path)?;
    Ok(format!("{:x}", h.finalize()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

/// Provenance record written by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: serde_json::Value,
    pub inputs: Vec<InputHash>,
    pub outputs: Vec<String>,
    pub seed: u64,
    pub started_unix_ms: u64,
    pub finished_unix_ms: Option<u64>,
    pub status: String,
}

impl RunManifest {
    pub fn start(command: &str, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            config: serde_json::Value::Null,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed,
            started_unix_ms: unix_ms(),
            finished_unix_ms: None,
            status: "running".into(),
        }
    }

    pub fn add_input(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.inputs.push(InputHash {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn add_output(&mut self, path: impl AsRef<Path>) {
        self.outputs.push(path.as_ref().display().to_string());
    }

    pub fn finish(&mut self, status: &str) {
        self.status = status.to_string();
        self.finished_unix_ms = Some(unix_ms());
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Other(e.to_string()))?;
        write_atomic(path.as_ref(), text.as_bytes())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).at(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            reason: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct TraceRecord {
    step: u64,
    d1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d2: Option<f64>,
    d_total: f64,
    g: f64,
    wall_ms: f64,
}

impl From<&TraceRow> for TraceRecord {
    fn from(r: &TraceRow) -> Self {
        Self {
            step: r.step,
            d1: r.d1,
            d2: r.d2,
            d_total: r.d_total,
            g: r.g,
            wall_ms: r.wall_ms,
        }
    }
}

impl From<TraceRecord> for TraceRow {
    fn from(r: TraceRecord) -> Self {
        Self {
            step: r.step,
            d1: r.d1,
            d2: r.d2,
            d_total: r.d_total,
            g: r.g,
            wall_ms: r.wall_ms,
        }
    }
}

pub fn trace_line(row: &TraceRow) -> String {
    serde_json::to_string(&TraceRecord::from(row)).expect("trace rows serialize")
}

/// Append-only JSON-lines trace file.
pub struct TraceWriter {
    path: PathBuf,
    file: File,
}

impl TraceWriter {
    pub fn append(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .at(&path)?;
        Ok(Self { path, file })
    }

    pub fn write(&mut self, row: &TraceRow) -> Result<()> {
        writeln!(self.file, "{}", trace_line(row)).at(&self.path)
    }
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRow>> {
    let path = path.as_ref();
    let f = File::open(path).at(path)?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.at(path)?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TraceRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        rows.push(rec.into());
    }
    Ok(rows)
}

/// A created run directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    /// Create `<parent>/<timestamp>-<label>`, adding a numeric suffix if
    /// that name is taken.
    pub fn create(parent: impl AsRef<Path>, label: &str) -> Result<Self> {
        let parent = parent.as_ref();
        fs::create_dir_all(parent).at(parent)?;
        let stamp = chrono::Utc::now().format("%Y%m%d-%H%M%S");
        let base = format!("{stamp}-{label}");
        for n in 0.. {
            let name = if n == 0 {
                base.clone()
            } else {
                format!("{base}-{n}")
            };
            let root = parent.join(name);
            match fs::create_dir(&root) {
                Ok(()) => {
                    let ck = root.join(CHECKPOINT_DIR);
                    fs::create_dir(&ck).at(&ck)?;
                    return Ok(Self { root });
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(Error::io(&root, e)),
            }
        }
        unreachable!()
    }

    /// Use an existing directory, e.g. when resuming.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        let ck = root.join(CHECKPOINT_DIR);
        fs::create_dir_all(&ck).at(&ck)?;
        Ok(Self { root })
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join(MANIFEST_FILE)
    }

    pub fn config(&self) -> PathBuf {
        self.root.join(CONFIG_FILE)
    }

    pub fn trace(&self) -> PathBuf {
        self.root.join(TRACE_FILE)
    }

    pub fn abort(&self) -> PathBuf {
        self.root.join(ABORT_FILE)
    }

    pub fn checkpoint(&self, step: u64) -> PathBuf {
        self.root.join(CHECKPOINT_DIR).join(checkpoint_name(step))
    }

    /// Checkpoints present on disk, sorted by step.
    pub fn checkpoints(&self) -> Result<Vec<PathBuf>> {
        let dir = self.root.join(CHECKPOINT_DIR);
        let mut out: Vec<PathBuf> = fs::read_dir(&dir)
            .at(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "ckpt"))
            .collect();
        out.sort();
        Ok(out)
    }
}

/// Diagnostic snapshot written when training aborts on a non-finite loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbortSnapshot {
    pub step: u64,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub g: Option<f64>,
    pub batch_ids: Vec<String>,
    pub last_checkpoint: Option<String>,
}

impl AbortSnapshot {
    pub fn from_error(e: &d2wgan_core::Error, last_checkpoint: Option<String>) -> Option<Self> {
        let finite = |v: f64| v.is_finite().then_some(v);
        match e {
            d2wgan_core::Error::NonFiniteLoss {
                step,
                d1,
                d2,
                g,
                batch_ids,
            } => Some(Self {
                step: *step,
                d1: finite(*d1),
                d2: d2.and_then(finite),
                g: finite(*g),
                batch_ids: batch_ids.clone(),
                last_checkpoint,
            }),
            _ => None,
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Other(e.to_string()))?;
        write_atomic(path.as_ref(), text.as_bytes())
    }
}

/// Writes trace rows as they arrive and hands checkpoints to a background
/// writer.
pub struct FileObserver {
    dir: RunDir,
    trace: TraceWriter,
    writer: Option<CheckpointWriter>,
    clock: Instant,
    pub last_checkpoint: Option<String>,
    pub echo: bool,
}

impl FileObserver {
    pub fn new(dir: RunDir) -> Result<Self> {
        let trace = TraceWriter::append(dir.trace())?;
        Ok(Self {
            dir,
            trace,
            writer: Some(CheckpointWriter::spawn()),
            clock: Instant::now(),
            last_checkpoint: None,
            echo: false,
        })
    }

    pub fn dir(&self) -> &RunDir {
        &self.dir
    }

    /// Block until queued checkpoints are on disk.
    pub fn finish(&mut self) -> Result<()> {
        match self.writer.take() {
            Some(w) => w.finish(),
            None => Ok(()),
        }
    }
}

fn to_core(e: Error) -> d2wgan_core::Error {
    match e {
        Error::Core(c) => c,
        other => d2wgan_core::Error::Source(other.to_string()),
    }
}

impl TrainObserver for FileObserver {
    fn now_ms(&mut self) -> f64 {
        self.clock.elapsed().as_secs_f64() * 1e3
    }

    fn on_row(&mut self, row: &TraceRow) -> d2wgan_core::Result<()> {
        if self.echo {
            eprintln!("{}", trace_line(row));
        }
        self.trace.write(row).map_err(to_core)
    }

    fn on_checkpoint(&mut self, ckpt: Checkpoint) -> d2wgan_core::Result<String> {
        let path = self.dir.checkpoint(ckpt.step);
        let writer = self
            .writer
            .as_ref()
            .ok_or_else(|| d2wgan_core::Error::Source("checkpoint writer closed".into()))?;
        writer.submit(path.clone(), ckpt).map_err(to_core)?;
        let s = path.display().to_string();
        self.last_checkpoint = Some(s.clone());
        Ok(s)
    }

    fn after_update(&mut self, _model: &GanModel) {}
}
