use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock, RwLock};

use chrono::Utc;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::session::{CreateSession, SessionResults, StimulusDescriptor, StudySession, TimedResponse};
use super::store::StimulusStore;
use super::SessionError;

/// One line of a session log: a header, then one line per response.
#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum LogLine {
    Session(StudySession),
    Response(TimedResponse),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Next {
    Stimulus(StimulusDescriptor),
    Done { session_id: String, total: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub session_id: String,
    pub stimulus_id: String,
    pub position: usize,
    pub remaining: usize,
    pub complete: bool,
}

#[derive(Debug)]
struct Slot {
    log: PathBuf,
    session: Mutex<StudySession>,
    finished: OnceLock<SessionResults>,
}

/// Owns every session of one store. Operations on a session are serialized
/// by its own lock; results of finished sessions are cached and read
/// without locking.
#[derive(Debug)]
pub struct SessionManager {
    store: StimulusStore,
    dir: PathBuf,
    sessions: RwLock<HashMap<String, Arc<Slot>>>,
}

impl SessionManager {
    /// Opens `dir` (created if needed) and replays every `*.jsonl` log in it.
    pub fn open(store: StimulusStore, dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut sessions = HashMap::new();
        let mut logs: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        logs.sort();
        for log in logs {
            let session = replay(&log)?;
            let slot = Slot {
                log,
                session: Mutex::new(session.clone()),
                finished: OnceLock::new(),
            };
            if session.is_complete() {
                let _ = slot.finished.set(session.results(&store)?);
            }
            sessions.insert(session.session_id.clone(), Arc::new(slot));
        }
        Ok(Self {
            store,
            dir: dir.to_path_buf(),
            sessions: RwLock::new(sessions),
        })
    }

    pub fn store(&self) -> &StimulusStore {
        &self.store
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<_> = self.sessions.read().expect("session table poisoned").keys().cloned().collect();
        ids.sort();
        ids
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>> {
        self.sessions
            .read()
            .expect("session table poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownSession(id.to_string()).into())
    }

    /// Creates and persists a session; the stimulus order is fixed here.
    pub fn create(&self, request: &CreateSession) -> Result<StudySession> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let session = StudySession::create(&self.store, id.clone(), request, Utc::now())?;
        let log = self.dir.join(format!("{id}.jsonl"));
        let mut f = File::create_new(&log).map_err(|e| Error::io(&log, e))?;
        append(&mut f, &log, &LogLine::Session(session.clone()))?;
        let slot = Slot {
            log,
            session: Mutex::new(session.clone()),
            finished: OnceLock::new(),
        };
        self.sessions.write().expect("session table poisoned").insert(id, Arc::new(slot));
        Ok(session)
    }

    pub fn session(&self, id: &str) -> Result<StudySession> {
        Ok(self.slot(id)?.session.lock().expect("session poisoned").clone())
    }

    pub fn next(&self, id: &str) -> Result<Next> {
        let slot = self.slot(id)?;
        let session = slot.session.lock().expect("session poisoned");
        Ok(match session.next_stimulus() {
            Some(d) => Next::Stimulus(d),
            None => Next::Done {
                session_id: id.to_string(),
                total: session.total(),
            },
        })
    }

    /// Validates, appends to the log, then advances the cursor.
    pub fn respond(&self, id: &str, stimulus_id: &str, label: &str) -> Result<Ack> {
        let slot = self.slot(id)?;
        let mut session = slot.session.lock().expect("session poisoned");
        session.check_response(stimulus_id, label)?;
        let response = TimedResponse {
            stimulus_id: stimulus_id.to_string(),
            label: label.to_string(),
            timestamp: Utc::now(),
        };
        let mut f = OpenOptions::new()
            .append(true)
            .open(&slot.log)
            .map_err(|e| Error::io(&slot.log, e))?;
        append(&mut f, &slot.log, &LogLine::Response(response.clone()))?;
        session.record(response)?;
        if session.is_complete() {
            let _ = slot.finished.set(session.results(&self.store)?);
        }
        Ok(Ack {
            session_id: id.to_string(),
            stimulus_id: stimulus_id.to_string(),
            position: session.cursor() - 1,
            remaining: session.total() - session.cursor(),
            complete: session.is_complete(),
        })
    }

    /// Results so far; `partial` is set until every stimulus is answered.
    pub fn results(&self, id: &str) -> Result<SessionResults> {
        let slot = self.slot(id)?;
        if let Some(done) = slot.finished.get() {
            return Ok(done.clone());
        }
        let session = slot.session.lock().expect("session poisoned");
        Ok(session.results(&self.store)?)
    }

    /// Results of a finished session only.
    pub fn final_results(&self, id: &str) -> Result<SessionResults> {
        let slot = self.slot(id)?;
        slot.finished.get().cloned().ok_or_else(|| SessionError::Incomplete.into())
    }

    /// File of a stored stimulus, addressed by its opaque id.
    pub fn stimulus_path(&self, stimulus_id: &str) -> Option<&Path> {
        self.store.stimulus(stimulus_id).map(|s| s.path.as_path())
    }
}

fn append(f: &mut File, path: &Path, line: &LogLine) -> Result<()> {
    let mut text = serde_json::to_string(line)?;
    text.push('\n');
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    f.sync_data().map_err(|e| Error::io(path, e))
}

fn replay(path: &Path) -> Result<StudySession> {
    let corrupt = |reason: String| -> Error {
        SessionError::CorruptLog {
            path: path.display().to_string(),
            reason,
        }
        .into()
    };
    let reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let mut session: Option<StudySession> = None;
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: LogLine = serde_json::from_str(&line).map_err(|e| corrupt(format!("line {}: {e}", n + 1)))?;
        match (parsed, session.as_mut()) {
            (LogLine::Session(s), None) if s.responses.is_empty() => session = Some(s),
            (LogLine::Response(r), Some(s)) => s.record(r).map_err(|e| corrupt(format!("line {}: {e}", n + 1)))?,
            _ => return Err(corrupt(format!("unexpected record on line {}", n + 1))),
        }
    }
    session.ok_or_else(|| corrupt("missing session header".into()))
}
