//! Per-session tallies, the summary report, and the on-disk history store.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::classify::{ElbowClass, FrameResult, WristClass};
use crate::config::EngineConfig;
use crate::geometry::{BowAngle, BowHeight};
use crate::ingest::FramePacket;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("frame at {got} ms does not follow {previous} ms")]
    NonMonotonicTime { previous: u64, got: u64 },
    #[error("session has no frames")]
    EmptySession,
    #[error("session store unavailable: {0}")]
    StoreUnavailable(String),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("invalid identifier {0:?}: use 1-64 characters from [A-Za-z0-9_.-], not starting with '.'")]
    BadIdentifier(String),
    #[error("corrupt session record {path}: {detail}")]
    CorruptRecord { path: PathBuf, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    BowHeight,
    BowAngle,
    HandPosture,
    ElbowPosture,
}

impl Section {
    /// Report order.
    pub const ALL: [Section; 4] = [Self::BowHeight, Self::BowAngle, Self::HandPosture, Self::ElbowPosture];

    /// Class labels in this section. The last label is the "no verdict" tally.
    pub fn labels(self) -> &'static [&'static str] {
        match self {
            Self::BowHeight => &["ok", "too_high", "too_low", "out_of_zone", "not_applicable"],
            Self::BowAngle => &["correct", "incorrect", "not_applicable"],
            Self::HandPosture => &["normal", "supinated", "over_pronated", "undetected"],
            Self::ElbowPosture => &["normal", "too_low", "too_high", "undetected"],
        }
    }

    /// Index into [`labels`](Self::labels) for a frame.
    pub fn class_of(self, r: &FrameResult) -> usize {
        match self {
            Self::BowHeight if r.bow.out_of_zone() => 3,
            Self::BowHeight => match r.bow.height {
                BowHeight::Ok => 0,
                BowHeight::TooHigh => 1,
                BowHeight::TooLow => 2,
                BowHeight::NotApplicable => 4,
            },
            Self::BowAngle => match r.bow.angle {
                BowAngle::Correct => 0,
                BowAngle::Incorrect => 1,
                BowAngle::NotApplicable => 2,
            },
            Self::HandPosture => match r.wrist.class {
                WristClass::Normal => 0,
                WristClass::Supinated => 1,
                WristClass::OverPronated => 2,
                WristClass::Undetected => 3,
            },
            Self::ElbowPosture => match r.elbow.class {
                ElbowClass::Normal => 0,
                ElbowClass::TooLow => 1,
                ElbowClass::TooHigh => 2,
                ElbowClass::Undetected => 3,
            },
        }
    }

    fn undetected_index(self) -> usize {
        self.labels().len() - 1
    }
}

/// A maximal stretch of consecutive frames with one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub start_ms: u64,
    pub end_ms: u64,
    pub frames: u64,
}

impl Run {
    pub fn midpoint_ms(&self) -> u64 {
        self.start_ms + (self.end_ms - self.start_ms) / 2
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct ClassTally {
    count: u64,
    best: Option<Run>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct SectionTally {
    section: Section,
    classes: Vec<ClassTally>,
    current: Option<(usize, Run)>,
}

impl SectionTally {
    fn new(section: Section) -> Self {
        Self {
            section,
            classes: vec![ClassTally::default(); section.labels().len()],
            current: None,
        }
    }

    fn push(&mut self, class: usize, t_ms: u64) {
        self.classes[class].count += 1;
        let run = match self.current {
            Some((c, run)) if c == class => Run {
                end_ms: t_ms,
                frames: run.frames + 1,
                ..run
            },
            _ => Run {
                start_ms: t_ms,
                end_ms: t_ms,
                frames: 1,
            },
        };
        self.current = Some((class, run));
        let best = &mut self.classes[class].best;
        // strictly longer, so the earliest of equally long runs is kept
        if best.is_none_or(|b| run.frames > b.frames || b.start_ms == run.start_ms) {
            *best = Some(run);
        }
    }
}

/// Running tallies for one session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionAccumulator {
    sections: Vec<SectionTally>,
    total: u64,
    first_t: Option<u64>,
    last_t: Option<u64>,
}

impl Default for SessionAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl SessionAccumulator {
    pub fn new() -> Self {
        Self {
            sections: Section::ALL.into_iter().map(SectionTally::new).collect(),
            total: 0,
            first_t: None,
            last_t: None,
        }
    }

    pub fn total_frames(&self) -> u64 {
        self.total
    }

    pub fn count(&self, section: Section, class: usize) -> u64 {
        self.tally(section).classes[class].count
    }

    pub fn best_run(&self, section: Section, class: usize) -> Option<Run> {
        self.tally(section).classes[class].best
    }

    fn tally(&self, section: Section) -> &SectionTally {
        &self.sections[section as usize]
    }

    /// Adds one frame. Timestamps must strictly increase; on error nothing changes.
    pub fn accumulate(&mut self, r: &FrameResult) -> Result<(), SessionError> {
        if let Some(previous) = self.last_t {
            if r.t_ms <= previous {
                return Err(SessionError::NonMonotonicTime { previous, got: r.t_ms });
            }
        }
        for tally in &mut self.sections {
            tally.push(tally.section.class_of(r), r.t_ms);
        }
        self.total += 1;
        self.first_t.get_or_insert(r.t_ms);
        self.last_t = Some(r.t_ms);
        Ok(())
    }

    pub fn summarize(&self) -> Result<SessionSummary, SessionError> {
        let (Some(first), Some(last)) = (self.first_t, self.last_t) else {
            return Err(SessionError::EmptySession);
        };
        let total = self.total as f64;
        let sections = self
            .sections
            .iter()
            .map(|tally| {
                let undetected = tally.section.undetected_index();
                let detected: u64 = tally
                    .classes
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != undetected)
                    .map(|(_, c)| c.count)
                    .sum();
                let classes = tally
                    .section
                    .labels()
                    .iter()
                    .zip(&tally.classes)
                    .enumerate()
                    .map(|(i, (label, c))| ClassSummary {
                        class: (*label).to_string(),
                        count: c.count,
                        raw_pct: 100.0 * c.count as f64 / total,
                        normalized_pct: (i != undetected && detected > 0)
                            .then(|| 100.0 * c.count as f64 / detected as f64),
                        representative_t_ms: c.best.map(|b| b.midpoint_ms()),
                        longest_run_frames: c.best.map_or(0, |b| b.frames),
                    })
                    .collect();
                SectionSummary {
                    section: tally.section,
                    detected_frames: detected,
                    classes,
                }
            })
            .collect();
        Ok(SessionSummary {
            total_frames: self.total,
            duration_ms: last - first,
            sections,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class: String,
    pub count: u64,
    /// Share of all frames, in percent.
    pub raw_pct: f64,
    /// Share of frames in this section that had a verdict; absent for the
    /// no-verdict tally and for sections with no verdicts at all.
    pub normalized_pct: Option<f64>,
    /// Midpoint of the longest run of this class.
    pub representative_t_ms: Option<u64>,
    pub longest_run_frames: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionSummary {
    pub section: Section,
    pub detected_frames: u64,
    pub classes: Vec<ClassSummary>,
}

impl SectionSummary {
    pub fn class(&self, label: &str) -> Option<&ClassSummary> {
        self.classes.iter().find(|c| c.class == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub total_frames: u64,
    pub duration_ms: u64,
    pub sections: Vec<SectionSummary>,
}

impl SessionSummary {
    pub fn section(&self, s: Section) -> &SectionSummary {
        self.sections.iter().find(|x| x.section == s).expect("all sections present")
    }

    pub fn to_pretty_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summaries always serialize");
        s.push('\n');
        s
    }
}

/// SHA-256 over the canonical serialization of a packet sequence, one
/// line per packet.
#[derive(Debug, Clone, Default)]
pub struct StreamDigest(Sha256);

impl StreamDigest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, packet: &FramePacket) {
        self.0.update(packet.to_line().as_bytes());
        self.0.update(b"\n");
    }

    pub fn hex(&self) -> String {
        hex::encode(self.0.clone().finalize())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDigests {
    pub wrist: String,
    pub elbow: String,
}

pub const RECORD_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionRecord {
    pub version: u32,
    pub session_id: String,
    pub user: String,
    pub started_at: DateTime<Utc>,
    pub summary: SessionSummary,
    pub config: EngineConfig,
    pub model_digests: ModelDigests,
    pub stream_digest: String,
}

/// Accepts short filesystem-safe identifiers for users and sessions.
pub fn validate_identifier(id: &str) -> Result<(), SessionError> {
    let ok = (1..=64).contains(&id.len())
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(SessionError::BadIdentifier(id.to_string()))
    }
}

/// Session history: `<root>/<user>/<session_id>.json`.
#[derive(Debug, Clone)]
pub struct SessionStore {
    root: PathBuf,
}

fn unavailable(path: &Path, e: io::Error) -> SessionError {
    SessionError::StoreUnavailable(format!("{}: {e}", path.display()))
}

impl SessionStore {
    /// Opens the store, creating the root directory if needed.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, SessionError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| unavailable(&root, e))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn persist(&self, record: &SessionRecord) -> Result<PathBuf, SessionError> {
        validate_identifier(&record.user)?;
        validate_identifier(&record.session_id)?;
        let dir = self.root.join(&record.user);
        fs::create_dir_all(&dir).map_err(|e| unavailable(&dir, e))?;
        let path = dir.join(format!("{}.json", record.session_id));
        let tmp = dir.join(format!(".{}.tmp", record.session_id));
        let body = serde_json::to_string_pretty(record).expect("records always serialize");
        let write = || -> io::Result<()> {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(body.as_bytes())?;
            f.write_all(b"\n")?;
            f.sync_all()?;
            fs::rename(&tmp, &path)
        };
        write().map_err(|e| unavailable(&path, e))?;
        Ok(path)
    }

    fn read(path: &Path) -> Result<SessionRecord, SessionError> {
        let text = fs::read_to_string(path).map_err(|e| unavailable(path, e))?;
        serde_json::from_str(&text).map_err(|e| SessionError::CorruptRecord {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })
    }

    /// All sessions of `user`, oldest first.
    pub fn list_history(&self, user: &str) -> Result<Vec<SessionRecord>, SessionError> {
        validate_identifier(user)?;
        let dir = self.root.join(user);
        let entries = match fs::read_dir(&dir) {
            Ok(entries) => entries,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(unavailable(&dir, e)),
        };
        let mut records = Vec::new();
        for entry in entries {
            let path = entry.map_err(|e| unavailable(&dir, e))?.path();
            let is_record = path.extension().is_some_and(|x| x == "json")
                && path.file_name().is_some_and(|n| !n.to_string_lossy().starts_with('.'));
            if is_record {
                records.push(Self::read(&path)?);
            }
        }
        records.sort_by(|a, b| (a.started_at, &a.session_id).cmp(&(b.started_at, &b.session_id)));
        Ok(records)
    }

    /// Looks a session up by id across all users.
    pub fn load(&self, session_id: &str) -> Result<SessionRecord, SessionError> {
        validate_identifier(session_id)?;
        let users = fs::read_dir(&self.root).map_err(|e| unavailable(&self.root, e))?;
        for user in users {
            let path = user.map_err(|e| unavailable(&self.root, e))?.path().join(format!("{session_id}.json"));
            if path.is_file() {
                return Self::read(&path);
            }
        }
        Err(SessionError::UnknownSession(session_id.to_string()))
    }
}
