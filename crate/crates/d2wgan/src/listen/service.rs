//! Session, grading and results logic with durable storage.
//!
//! Every state change is one line in `events.jsonl`, synced to disk before
//! the caller sees success. `snapshot.json` holds the state as of some
//! line count; startup loads it and replays the log lines after it.

use std::collections::{HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use d2wgan_core::evaluation::{odg_aggregate, GradeRecord, Grouping, LabeledGrade, Odg, OdgTable};
use d2wgan_core::rng::{self, tag};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::checkpoint_io::write_atomic;
use crate::error::{Error, IoContext, Result};
use crate::evalset::{EvalRow, Role};
use crate::rundir::unix_ms;

pub const EVENT_LOG: &str = "events.jsonl";
pub const SNAPSHOT: &str = "snapshot.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// Reconstructed clips only, one grade each.
    Unpaired,
    /// Each graded clip comes with its real counterpart as a reference.
    Paired,
}

/// Failures reported to clients, each with a stable code.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ServiceError {
    #[error("{0}")]
    InvalidRequest(String),
    #[error("grade {0} is outside the scale 0, -1, -2, -3, -4")]
    GradeOutOfScale(i64),
    #[error("presentation `{got}` is not the current item (expected `{expected}`)")]
    StalePresentation { expected: String, got: String },
    #[error("presentation `{0}` has already been graded by this grader")]
    AlreadyGraded(String),
    #[error("no session `{0}`")]
    SessionNotFound(String),
    #[error("session is complete")]
    SessionComplete,
    #[error("references are only served in paired mode")]
    NotPaired,
    #[error("group_by must be model, dataset or model,dataset (got `{0}`)")]
    InvalidGroupBy(String),
    #[error("{0}")]
    Internal(String),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::InvalidRequest(_) => "invalid_request",
            Self::GradeOutOfScale(_) => "grade_out_of_scale",
            Self::StalePresentation { .. } => "stale_presentation",
            Self::AlreadyGraded(_) => "already_graded",
            Self::SessionNotFound(_) => "session_not_found",
            Self::SessionComplete => "session_complete",
            Self::NotPaired => "not_paired",
            Self::InvalidGroupBy(_) => "invalid_group_by",
            Self::Internal(_) => "internal",
        }
    }
}

impl From<Error> for ServiceError {
    fn from(e: Error) -> Self {
        Self::Internal(e.to_string())
    }
}

type SResult<T> = std::result::Result<T, ServiceError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct SessionState {
    session_id: String,
    grader_id: String,
    seed: u64,
    queue: Vec<String>,
    cursor: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct GradeState {
    session_id: String,
    grader_id: String,
    presentation_id: String,
    odg: i8,
    ts: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Event {
    Session {
        session_id: String,
        grader_id: String,
        seed: u64,
        queue: Vec<String>,
        ts: u64,
    },
    Grade(GradeState),
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Snapshot {
    log_lines: u64,
    sessions: Vec<SessionState>,
    grades: Vec<GradeState>,
}

/// What a client may see about a session: no labels, no roles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SessionView {
    pub session_id: String,
    pub grader_id: String,
    pub total: usize,
    pub graded: usize,
    pub complete: bool,
    pub protocol: Protocol,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NextItem {
    Clip {
        presentation_id: String,
        path: PathBuf,
        graded: usize,
        total: usize,
    },
    Complete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GradeAck {
    pub accepted: bool,
    pub graded: usize,
    pub total: usize,
    pub complete: bool,
}

/// Presentations of an eval manifest, resolved against its directory.
#[derive(Debug, Clone)]
pub struct Catalog {
    base: PathBuf,
    rows: HashMap<String, EvalRow>,
    /// Graded items, in manifest order.
    graded: Vec<String>,
    /// Real counterpart of each reconstructed item.
    reference: HashMap<String, String>,
}

impl Catalog {
    pub fn new(rows: Vec<EvalRow>, base: impl Into<PathBuf>) -> Result<Self> {
        let mut real_of_pair = HashMap::new();
        for r in rows.iter().filter(|r| r.role == Role::Real) {
            real_of_pair.insert(r.pair_id.clone(), r.presentation_id.clone());
        }
        let graded: Vec<String> = rows
            .iter()
            .filter(|r| r.role == Role::Reconstructed)
            .map(|r| r.presentation_id.clone())
            .collect();
        if graded.is_empty() {
            return Err(Error::Config(
                "eval manifest has no reconstructed clips".into(),
            ));
        }
        let reference = rows
            .iter()
            .filter(|r| r.role == Role::Reconstructed)
            .filter_map(|r| {
                real_of_pair
                    .get(&r.pair_id)
                    .map(|p| (r.presentation_id.clone(), p.clone()))
            })
            .collect();
        let mut map = HashMap::new();
        for r in rows {
            if map.insert(r.presentation_id.clone(), r).is_some() {
                return Err(Error::Config(
                    "duplicate presentation id in eval manifest".into(),
                ));
            }
        }
        Ok(Self {
            base: base.into(),
            rows: map,
            graded,
            reference,
        })
    }

    pub fn len(&self) -> usize {
        self.graded.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graded.is_empty()
    }

    fn path(&self, id: &str) -> PathBuf {
        self.base.join(&self.rows[id].path)
    }
}

struct Inner {
    sessions: HashMap<String, SessionState>,
    by_grader: HashMap<String, String>,
    graded: HashSet<(String, String)>,
    log: File,
    log_lines: u64,
    since_snapshot: u64,
    counter: u64,
    raw_grades: Vec<GradeState>,
}

pub struct ListenService {
    catalog: Catalog,
    protocol: Protocol,
    state_dir: PathBuf,
    snapshot_every: u64,
    inner: Mutex<Inner>,
    grades: RwLock<Vec<LabeledGrade>>,
}

fn parse_err(path: &Path, line: usize, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: e.to_string(),
    }
}

/// Drop a trailing partial line left by a crash mid-append.
fn repair_log(path: &Path) -> Result<()> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(Error::io(path, e)),
    };
    if bytes.last().is_some_and(|&b| b != b'\n') {
        let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        let f = OpenOptions::new().write(true).open(path).at(path)?;
        f.set_len(keep as u64).at(path)?;
        f.sync_all().at(path)?;
    }
    Ok(())
}

impl ListenService {
    /// Open (or create) the state in `state_dir` and replay it.
    pub fn open(
        catalog: Catalog,
        protocol: Protocol,
        state_dir: impl Into<PathBuf>,
    ) -> Result<Self> {
        let state_dir = state_dir.into();
        fs::create_dir_all(&state_dir).at(&state_dir)?;
        let log_path = state_dir.join(EVENT_LOG);
        let snap_path = state_dir.join(SNAPSHOT);
        repair_log(&log_path)?;

        let snap: Snapshot = match fs::read_to_string(&snap_path) {
            Ok(text) => {
                serde_json::from_str(&text).map_err(|e| parse_err(&snap_path, e.line(), e))?
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Snapshot::default(),
            Err(e) => return Err(Error::io(&snap_path, e)),
        };
        let mut sessions: HashMap<String, SessionState> = snap
            .sessions
            .into_iter()
            .map(|s| (s.session_id.clone(), s))
            .collect();
        let mut raw_grades = snap.grades;
        let mut lines = 0u64;
        if log_path.exists() {
            let f = File::open(&log_path).at(&log_path)?;
            for (i, line) in BufReader::new(f).lines().enumerate() {
                let line = line.at(&log_path)?;
                lines += 1;
                if lines <= snap.log_lines {
                    continue;
                }
                match serde_json::from_str::<Event>(&line)
                    .map_err(|e| parse_err(&log_path, i + 1, e))?
                {
                    Event::Session {
                        session_id,
                        grader_id,
                        seed,
                        queue,
                        ..
                    } => {
                        sessions.insert(
                            session_id.clone(),
                            SessionState {
                                session_id,
                                grader_id,
                                seed,
                                queue,
                                cursor: 0,
                            },
                        );
                    }
                    Event::Grade(g) => {
                        if let Some(s) = sessions.get_mut(&g.session_id) {
                            s.cursor += 1;
                        }
                        raw_grades.push(g);
                    }
                }
            }
        }
        if lines < snap.log_lines {
            return Err(Error::Config(format!(
                "snapshot covers {} events but the log holds {lines}",
                snap.log_lines
            )));
        }
        let mut labeled = Vec::with_capacity(raw_grades.len());
        let mut graded = HashSet::new();
        for g in &raw_grades {
            labeled.push(Self::label(&catalog, g)?);
            graded.insert((g.grader_id.clone(), g.presentation_id.clone()));
        }
        let by_grader = sessions
            .values()
            .map(|s| (s.grader_id.clone(), s.session_id.clone()))
            .collect();
        let log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log_path)
            .at(&log_path)?;
        let counter = sessions.len() as u64;
        let svc = Self {
            catalog,
            protocol,
            state_dir,
            snapshot_every: 64,
            inner: Mutex::new(Inner {
                sessions,
                by_grader,
                graded,
                log,
                log_lines: lines,
                since_snapshot: lines - snap.log_lines,
                counter,
                raw_grades,
            }),
            grades: RwLock::new(labeled),
        };
        svc.snapshot()?;
        Ok(svc)
    }

    pub fn with_snapshot_every(mut self, n: u64) -> Self {
        self.snapshot_every = n.max(1);
        self
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    fn label(catalog: &Catalog, g: &GradeState) -> Result<LabeledGrade> {
        let row = catalog.rows.get(&g.presentation_id).ok_or_else(|| {
            Error::Config(format!(
                "stored grade for unknown presentation `{}`",
                g.presentation_id
            ))
        })?;
        Ok(LabeledGrade {
            record: GradeRecord {
                grader_id: g.grader_id.clone(),
                presentation_id: g.presentation_id.clone(),
                odg: Odg::new(g.odg as i32)?,
                timestamp_ms: g.ts,
            },
            model: row.model.clone(),
            dataset: row.dataset.clone(),
        })
    }

    fn lock(&self) -> SResult<std::sync::MutexGuard<'_, Inner>> {
        self.inner
            .lock()
            .map_err(|_| ServiceError::Internal("state lock poisoned".into()))
    }

    fn append(&self, inner: &mut Inner, event: &Event) -> SResult<()> {
        let path = self.state_dir.join(EVENT_LOG);
        let line =
            serde_json::to_string(event).map_err(|e| ServiceError::Internal(e.to_string()))?;
        writeln!(inner.log, "{line}")
            .and_then(|_| inner.log.sync_data())
            .at(&path)?;
        inner.log_lines += 1;
        inner.since_snapshot += 1;
        Ok(())
    }

    fn maybe_snapshot(&self, inner: &mut Inner) -> SResult<()> {
        if inner.since_snapshot >= self.snapshot_every {
            self.write_snapshot(inner)?;
        }
        Ok(())
    }

    fn write_snapshot(&self, inner: &mut Inner) -> Result<()> {
        let mut sessions: Vec<SessionState> = inner.sessions.values().cloned().collect();
        sessions.sort_by(|a, b| a.session_id.cmp(&b.session_id));
        let snap = Snapshot {
            log_lines: inner.log_lines,
            sessions,
            grades: inner.raw_grades.clone(),
        };
        let text = serde_json::to_string(&snap).map_err(|e| Error::Other(e.to_string()))?;
        write_atomic(&self.state_dir.join(SNAPSHOT), text.as_bytes())?;
        inner.since_snapshot = 0;
        Ok(())
    }

    /// Write a snapshot now.
    pub fn snapshot(&self) -> Result<()> {
        let mut inner = self
            .inner
            .lock()
            .map_err(|_| Error::Other("state lock poisoned".into()))?;
        self.write_snapshot(&mut inner)
    }

    fn view(&self, s: &SessionState) -> SessionView {
        SessionView {
            session_id: s.session_id.clone(),
            grader_id: s.grader_id.clone(),
            total: s.queue.len(),
            graded: s.cursor,
            complete: s.cursor >= s.queue.len(),
            protocol: self.protocol,
        }
    }

    /// Start a session for `grader_id`, or return the grader's existing
    /// one. The flag is true when a new session was created.
    pub fn create_session(
        &self,
        grader_id: &str,
        seed: Option<u64>,
    ) -> SResult<(SessionView, bool)> {
        let grader_id = grader_id.trim();
        if grader_id.is_empty() || grader_id.len() > 128 {
            return Err(ServiceError::InvalidRequest(
                "grader_id must be 1 to 128 characters".into(),
            ));
        }
        let mut inner = self.lock()?;
        if let Some(id) = inner.by_grader.get(grader_id) {
            let s = &inner.sessions[id];
            return Ok((self.view(s), false));
        }
        inner.counter += 1;
        let now = unix_ms();
        let seed = seed.unwrap_or_else(|| rng::derive_seed(now, &[inner.counter]));
        let mut queue = self.catalog.graded.clone();
        queue.shuffle(&mut rng::stream(seed, &[tag::EVAL, 2]));
        let digest =
            Sha256::digest(format!("{grader_id}\0{seed}\0{}\0{now}", inner.counter).as_bytes());
        let session_id = format!("{:x}", digest)[..20].to_string();
        self.append(
            &mut inner,
            &Event::Session {
                session_id: session_id.clone(),
                grader_id: grader_id.to_string(),
                seed,
                queue: queue.clone(),
                ts: now,
            },
        )?;
        let s = SessionState {
            session_id: session_id.clone(),
            grader_id: grader_id.to_string(),
            seed,
            queue,
            cursor: 0,
        };
        let view = self.view(&s);
        inner.sessions.insert(session_id.clone(), s);
        inner.by_grader.insert(grader_id.to_string(), session_id);
        self.maybe_snapshot(&mut inner)?;
        Ok((view, true))
    }

    pub fn session(&self, id: &str) -> SResult<SessionView> {
        let inner = self.lock()?;
        let s = inner
            .sessions
            .get(id)
            .ok_or_else(|| ServiceError::SessionNotFound(id.into()))?;
        Ok(self.view(s))
    }

    /// Current item; repeated calls return the same item until it is graded.
    pub fn next(&self, id: &str) -> SResult<NextItem> {
        let inner = self.lock()?;
        let s = inner
            .sessions
            .get(id)
            .ok_or_else(|| ServiceError::SessionNotFound(id.into()))?;
        Ok(match s.queue.get(s.cursor) {
            Some(p) => NextItem::Clip {
                presentation_id: p.clone(),
                path: self.catalog.path(p),
                graded: s.cursor,
                total: s.queue.len(),
            },
            None => NextItem::Complete,
        })
    }

    /// Real counterpart of the current item (paired protocol).
    pub fn reference(&self, id: &str) -> SResult<(String, PathBuf)> {
        if self.protocol != Protocol::Paired {
            return Err(ServiceError::NotPaired);
        }
        match self.next(id)? {
            NextItem::Complete => Err(ServiceError::SessionComplete),
            NextItem::Clip {
                presentation_id, ..
            } => {
                let r = self
                    .catalog
                    .reference
                    .get(&presentation_id)
                    .ok_or_else(|| {
                        ServiceError::Internal(format!("no reference for `{presentation_id}`"))
                    })?;
                Ok((presentation_id, self.catalog.path(r)))
            }
        }
    }

    /// Record a grade for the current item; durable before returning.
    pub fn submit_grade(&self, id: &str, presentation_id: &str, odg: i64) -> SResult<GradeAck> {
        let mut inner = self.lock()?;
        let s = inner
            .sessions
            .get(id)
            .ok_or_else(|| ServiceError::SessionNotFound(id.into()))?;
        let grade = i32::try_from(odg)
            .ok()
            .and_then(|g| Odg::new(g).ok())
            .ok_or(ServiceError::GradeOutOfScale(odg))?;
        let key = (s.grader_id.clone(), presentation_id.to_string());
        if inner.graded.contains(&key) {
            return Err(ServiceError::AlreadyGraded(presentation_id.into()));
        }
        let Some(current) = s.queue.get(s.cursor) else {
            return Err(ServiceError::SessionComplete);
        };
        if current != presentation_id {
            return Err(ServiceError::StalePresentation {
                expected: current.clone(),
                got: presentation_id.into(),
            });
        }
        let g = GradeState {
            session_id: id.to_string(),
            grader_id: s.grader_id.clone(),
            presentation_id: presentation_id.to_string(),
            odg: grade.value(),
            ts: unix_ms(),
        };
        self.append(&mut inner, &Event::Grade(g.clone()))?;
        let labeled = Self::label(&self.catalog, &g)?;
        self.grades
            .write()
            .map_err(|_| ServiceError::Internal("grade lock poisoned".into()))?
            .push(labeled);
        inner.graded.insert(key);
        inner.raw_grades.push(g);
        let s = inner.sessions.get_mut(id).expect("checked above");
        s.cursor += 1;
        let ack = GradeAck {
            accepted: true,
            graded: s.cursor,
            total: s.queue.len(),
            complete: s.cursor >= s.queue.len(),
        };
        self.maybe_snapshot(&mut inner)?;
        Ok(ack)
    }

    /// Aggregate table, or `None` before the first grade.
    pub fn results(&self, group_by: &str) -> SResult<Option<OdgTable>> {
        let grouping = Grouping::parse(group_by)
            .ok_or_else(|| ServiceError::InvalidGroupBy(group_by.into()))?;
        let grades = self
            .grades
            .read()
            .map_err(|_| ServiceError::Internal("grade lock poisoned".into()))?
            .clone();
        if grades.is_empty() {
            return Ok(None);
        }
        odg_aggregate(&grades, grouping)
            .map(Some)
            .map_err(|e| ServiceError::Internal(e.to_string()))
    }

    /// Presentation ids graded by the grader of session `id`.
    pub fn graded_ids(&self, id: &str) -> SResult<Vec<String>> {
        let inner = self.lock()?;
        let s = inner
            .sessions
            .get(id)
            .ok_or_else(|| ServiceError::SessionNotFound(id.into()))?;
        Ok(s.queue[..s.cursor].to_vec())
    }
}
