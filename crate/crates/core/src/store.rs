//! Dataset ingestion and persistence.
//!
//! Two CSV shapes are read: per-leaf aggregate counts (`parent,leaf,pass,fail`) and per-episode
//! records (one column per attribute, then `Outcome`). Sessions persist as a JSONL event log with
//! one [`SessionEvent`] per line; graphs and trees are whole JSON documents.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions, TryLockError};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dtree::{DecisionTree, DtreeError};
use crate::graph::{load_graph, GraphError, KnowledgeGraph, NodeId};
use crate::infotheory::{Episode, EpisodeDataset};
use crate::probability::{AggregateCounts, CountRow, ProbabilityError};
use crate::session::{AssessmentSession, SessionError, SessionEvent, SessionId};
use crate::{ErrorCode, Outcome};

pub const COUNTS_HEADER: [&str; 4] = ["parent", "leaf", "pass", "fail"];
pub const OUTCOME_COLUMN: &str = "Outcome";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("line {line}, column {column}: {reason}")]
    Parse { line: u64, column: usize, reason: String },
    #[error("line {line}: duplicate row for ({parent}, {leaf})")]
    DuplicateRow { line: u64, parent: String, leaf: String },
    #[error("line {line}: unknown label {value:?} (expected Pass or Fail)")]
    UnknownLabel { line: u64, value: String },
    #[error("session {session}: expected seq {expected}, got {got}")]
    SequenceGap { session: SessionId, expected: u64, got: u64 },
    #[error("storage failure: {0}")]
    StorageFailure(String),
    #[error("corrupt log at line {line}: {reason}")]
    CorruptLog { line: usize, reason: String },
    #[error("{path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Tree(#[from] DtreeError),
}

impl ErrorCode for StoreError {
    fn code(&self) -> &'static str {
        match self {
            StoreError::Parse { .. } => "PARSE_ERROR",
            StoreError::DuplicateRow { .. } => "DUPLICATE_ROW",
            StoreError::UnknownLabel { .. } => "UNKNOWN_LABEL",
            StoreError::SequenceGap { .. } => "SEQUENCE_GAP",
            StoreError::StorageFailure(_) => "STORAGE_FAILURE",
            StoreError::CorruptLog { .. } => "CORRUPT_LOG",
            StoreError::Io { .. } => "IO_ERROR",
            StoreError::Session(e) => e.code(),
            StoreError::Graph(e) => e.code(),
            StoreError::Tree(e) => e.code(),
        }
    }
}

fn parse_err(line: u64, column: usize, reason: impl Into<String>) -> StoreError {
    StoreError::Parse { line, column, reason: reason.into() }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> StoreError {
    StoreError::Io { path: path.to_path_buf(), reason: e.to_string() }
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes())
}

/// Reads every record with its 1-based line number, mapping csv errors to `Parse`.
fn csv_records(text: &str) -> Result<Vec<(u64, csv::StringRecord)>, StoreError> {
    let mut out = Vec::new();
    for rec in csv_reader(text).records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, 0, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        // Blank lines come through as a single empty field.
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        out.push((line, rec));
    }
    Ok(out)
}

fn check_width(line: u64, rec: &csv::StringRecord, width: usize) -> Result<(), StoreError> {
    if rec.len() != width {
        return Err(parse_err(line, rec.len().min(width) + 1, format!("expected {width} fields, found {}", rec.len())));
    }
    Ok(())
}

fn node_field(line: u64, column: usize, value: &str) -> Result<NodeId, StoreError> {
    NodeId::new(value).map_err(|e| parse_err(line, column, e.to_string()))
}

fn count_field(line: u64, column: usize, value: &str) -> Result<u64, StoreError> {
    value
        .parse::<u64>()
        .map_err(|_| parse_err(line, column, format!("{value:?} is not a non-negative integer count")))
}

/// Parses an aggregate counts file.
pub fn parse_counts_csv(text: &str) -> Result<AggregateCounts, StoreError> {
    let records = csv_records(text)?;
    let Some(((line, header), rows)) = records.split_first() else {
        return Err(parse_err(1, 1, "missing header"));
    };
    if header.iter().ne(COUNTS_HEADER) {
        return Err(parse_err(*line, 1, format!("header must be exactly {}", COUNTS_HEADER.join(","))));
    }
    let mut parsed = Vec::with_capacity(rows.len());
    let mut lines = Vec::with_capacity(rows.len());
    for (line, rec) in rows {
        let line = *line;
        check_width(line, rec, 4)?;
        parsed.push(CountRow {
            parent: node_field(line, 1, &rec[0])?,
            leaf: node_field(line, 2, &rec[1])?,
            pass: count_field(line, 3, &rec[2])?,
            fail: count_field(line, 4, &rec[3])?,
        });
        lines.push(line);
    }
    AggregateCounts::new(parsed).map_err(|e| match e {
        ProbabilityError::DuplicateRow { parent, leaf } => {
            let line = rows
                .iter()
                .filter(|(_, r)| r[0] == parent && r[1] == leaf)
                .nth(1)
                .map_or(0, |(l, _)| *l);
            StoreError::DuplicateRow { line, parent, leaf }
        }
        other => parse_err(0, 0, other.to_string()),
    })
}

pub fn serialize_counts_csv(counts: &AggregateCounts) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COUNTS_HEADER).expect("in-memory write");
    for r in counts.rows() {
        w.write_record([r.parent.as_str(), r.leaf.as_str(), &r.pass.to_string(), &r.fail.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// Parses a per-episode file. Attributes are every column before `Outcome`, in file order.
pub fn parse_episodes_csv(text: &str) -> Result<EpisodeDataset, StoreError> {
    let records = csv_records(text)?;
    let Some(((hline, header), rows)) = records.split_first() else {
        return Err(parse_err(1, 1, "missing header"));
    };
    let width = header.len();
    if header.get(width - 1) != Some(OUTCOME_COLUMN) {
        return Err(parse_err(*hline, width, format!("last column must be {OUTCOME_COLUMN}")));
    }
    if width < 2 {
        return Err(parse_err(*hline, 1, "no attribute columns"));
    }
    let attributes: Vec<String> = header.iter().take(width - 1).map(str::to_string).collect();
    for (i, a) in attributes.iter().enumerate() {
        if a.is_empty() {
            return Err(parse_err(*hline, i + 1, "empty attribute name"));
        }
        if attributes[..i].contains(a) {
            return Err(parse_err(*hline, i + 1, format!("duplicate attribute {a}")));
        }
    }
    if rows.is_empty() {
        return Err(parse_err(*hline + 1, 1, "no records"));
    }
    let mut episodes = Vec::with_capacity(rows.len());
    for (line, rec) in rows {
        let line = *line;
        check_width(line, rec, width)?;
        let label = match &rec[width - 1] {
            "Pass" => Outcome::Pass,
            "Fail" => Outcome::Fail,
            other => return Err(StoreError::UnknownLabel { line, value: other.to_string() }),
        };
        let mut features = Vec::with_capacity(width - 1);
        for (i, f) in rec.iter().take(width - 1).enumerate() {
            if f.is_empty() {
                return Err(parse_err(line, i + 1, "empty feature value"));
            }
            features.push(f.to_string());
        }
        episodes.push(Episode { features, label });
    }
    EpisodeDataset::new(attributes, episodes).map_err(|e| parse_err(0, 0, e.to_string()))
}

pub fn serialize_episodes_csv(dataset: &EpisodeDataset) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = dataset.attributes().iter().map(String::as_str).chain([OUTCOME_COLUMN]).collect();
    w.write_record(&header).expect("in-memory write");
    for r in dataset.records() {
        let row: Vec<&str> = r.features.iter().map(String::as_str).chain([r.label.as_str()]).collect();
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// A parsed counts file and where it came from.
#[derive(Debug, Clone)]
pub struct CountsFile {
    pub path: PathBuf,
    pub rows: usize,
    pub counts: AggregateCounts,
}

/// A parsed episodes file and where it came from.
#[derive(Debug, Clone)]
pub struct EpisodesFile {
    pub path: PathBuf,
    pub rows: usize,
    pub dataset: EpisodeDataset,
}

pub fn read_text(path: &Path) -> Result<String, StoreError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

pub fn read_counts_file(path: &Path) -> Result<CountsFile, StoreError> {
    let counts = parse_counts_csv(&read_text(path)?)?;
    Ok(CountsFile { path: path.to_path_buf(), rows: counts.rows().len(), counts })
}

pub fn read_episodes_file(path: &Path) -> Result<EpisodesFile, StoreError> {
    let dataset = parse_episodes_csv(&read_text(path)?)?;
    Ok(EpisodesFile { path: path.to_path_buf(), rows: dataset.len(), dataset })
}

pub fn read_graph_file(path: &Path) -> Result<KnowledgeGraph, StoreError> {
    Ok(load_graph(&read_text(path)?)?)
}

pub fn read_tree_file(path: &Path) -> Result<DecisionTree, StoreError> {
    Ok(DecisionTree::from_json(&read_text(path)?)?)
}

/// Writes a whole document via a sibling temp file and rename, so readers never see half of it.
pub fn write_document(path: &Path, contents: &str) -> Result<(), StoreError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let write = || -> std::io::Result<()> {
        let mut f = File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| StoreError::StorageFailure(format!("{}: {e}", path.display())))
}

pub fn write_graph_file(path: &Path, g: &KnowledgeGraph) -> Result<(), StoreError> {
    write_document(path, &g.to_json())
}

pub fn write_tree_file(path: &Path, tree: &DecisionTree) -> Result<(), StoreError> {
    write_document(path, &tree.to_json())
}

/// Result of appending an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ack {
    Appended,
    /// The identical event was already in the log.
    Duplicate,
}

/// Sessions rebuilt from log text.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Replay {
    pub sessions: BTreeMap<SessionId, AssessmentSession>,
    pub events: BTreeMap<SessionId, Vec<SessionEvent>>,
    /// Byte length of the well-formed prefix.
    pub valid_len: usize,
    /// Whether an unterminated trailing line was dropped.
    pub dropped_partial: bool,
}

/// Replays log text. An unterminated final line is a write cut short by a crash and is
/// dropped; any other malformed line is `CorruptLog`. Repeated identical `(session_id, seq)`
/// events are skipped.
pub fn replay_log(text: &str) -> Result<Replay, StoreError> {
    let mut replay = Replay::default();
    let mut offset = 0;
    for (i, chunk) in text.split_inclusive('\n').enumerate() {
        let line_no = i + 1;
        if !chunk.ends_with('\n') {
            log::warn!("dropping partial trailing line {line_no} of session log");
            replay.dropped_partial = true;
            break;
        }
        offset += chunk.len();
        let line = chunk.trim_end_matches(['\n', '\r']);
        if line.trim().is_empty() {
            continue;
        }
        let corrupt = |reason: String| StoreError::CorruptLog { line: line_no, reason };
        let event: SessionEvent = serde_json::from_str(line).map_err(|e| corrupt(e.to_string()))?;
        let history = replay.events.entry(event.session_id).or_default();
        if let Some(prev) = history.get((event.seq as usize).wrapping_sub(1)) {
            if *prev == event {
                continue;
            }
            return Err(corrupt(format!("conflicting event for seq {}", event.seq)));
        }
        match replay.sessions.get_mut(&event.session_id) {
            Some(s) => s.apply(&event).map_err(|e| corrupt(e.to_string()))?,
            None => {
                let s = AssessmentSession::from_events([&event]).map_err(|e| corrupt(e.to_string()))?;
                replay.sessions.insert(event.session_id, s);
            }
        }
        history.push(event);
        replay.valid_len = offset;
    }
    replay.valid_len = offset;
    Ok(replay)
}

/// Reads a log without taking the writer lock and rebuilds every session.
pub fn load_sessions(path: &Path) -> Result<BTreeMap<SessionId, AssessmentSession>, StoreError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
        Err(e) => return Err(io_err(path, e)),
    };
    Ok(replay_log(&text)?.sessions)
}

/// The single writer of a session log, holding every session in memory.
///
/// A file-backed log holds an exclusive advisory lock for its lifetime. Each append is written
/// and synced before it is acknowledged.
#[derive(Debug, Default)]
pub struct SessionLog {
    file: Option<File>,
    path: Option<PathBuf>,
    sessions: BTreeMap<SessionId, AssessmentSession>,
    events: BTreeMap<SessionId, Vec<SessionEvent>>,
}

impl SessionLog {
    /// A log that keeps events only in memory.
    pub fn in_memory() -> Self {
        SessionLog::default()
    }

    /// Opens (creating if needed) and replays a log file, truncating a partial trailing line.
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let storage = |e: std::io::Error| StoreError::StorageFailure(format!("{}: {e}", path.display()));
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(path).map_err(storage)?;
        match file.try_lock() {
            Ok(()) => {}
            Err(TryLockError::WouldBlock) => {
                return Err(StoreError::StorageFailure(format!("{} is locked by another writer", path.display())))
            }
            Err(TryLockError::Error(e)) => return Err(storage(e)),
        }
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(storage)?;
        let text = String::from_utf8(bytes).map_err(|e| StoreError::CorruptLog { line: 0, reason: e.to_string() })?;
        let replay = replay_log(&text)?;
        if replay.valid_len < text.len() {
            file.set_len(replay.valid_len as u64).map_err(storage)?;
            file.sync_data().map_err(storage)?;
        }
        Ok(SessionLog { file: Some(file), path: Some(path.to_path_buf()), sessions: replay.sessions, events: replay.events })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn session(&self, id: &SessionId) -> Option<&AssessmentSession> {
        self.sessions.get(id)
    }

    pub fn sessions(&self) -> &BTreeMap<SessionId, AssessmentSession> {
        &self.sessions
    }

    pub fn events(&self, id: &SessionId) -> &[SessionEvent] {
        self.events.get(id).map_or(&[], Vec::as_slice)
    }

    /// Appends one event. It must continue its session's sequence and be a legal transition.
    pub fn append(&mut self, event: SessionEvent) -> Result<Ack, StoreError> {
        let history = self.events.get(&event.session_id).map_or(&[][..], Vec::as_slice);
        let expected = history.len() as u64 + 1;
        if event.seq != expected {
            let dup = event.seq >= 1 && history.get(event.seq as usize - 1) == Some(&event);
            if dup {
                return Ok(Ack::Duplicate);
            }
            return Err(StoreError::SequenceGap { session: event.session_id, expected, got: event.seq });
        }
        let next = match self.sessions.get(&event.session_id) {
            Some(s) => {
                let mut s = s.clone();
                s.apply(&event)?;
                s
            }
            None => AssessmentSession::from_events([&event])?,
        };
        if let Some(file) = &mut self.file {
            let mut line = serde_json::to_string(&event).expect("event serializes");
            line.push('\n');
            file.write_all(line.as_bytes())
                .and_then(|()| file.sync_data())
                .map_err(|e| StoreError::StorageFailure(e.to_string()))?;
        }
        self.sessions.insert(event.session_id, next);
        self.events.entry(event.session_id).or_default().push(event);
        Ok(Ack::Appended)
    }

    /// Appends events in order, stopping at the first error.
    pub fn append_all(&mut self, events: impl IntoIterator<Item = SessionEvent>) -> Result<(), StoreError> {
        for e in events {
            self.append(e)?;
        }
        Ok(())
    }
}
