//! Session registry with one JSONL event log per session.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use thiserror::Error;
use tokio::sync::{Mutex, RwLock};

use techstop::lists::{resolve_list, ListError, StopwordList};
use techstop::review::{create_session, Event, ReviewError, ReviewItem, ReviewSession};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no session {0:?}")]
    NotFound(String),
    #[error(transparent)]
    Review(#[from] ReviewError),
    #[error(transparent)]
    List(#[from] ListError),
    #[error("event log {path}: {source}")]
    Log {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("event log {path}, line {line}: {reason}")]
    Corrupt { path: String, line: usize, reason: String },
}

pub struct SessionEntry {
    pub session: ReviewSession,
    /// Prior lists named when the session was finalized.
    pub priors: Vec<String>,
    log: Option<File>,
}

impl SessionEntry {
    /// Applies `event` to a copy first, so a rejected event or a failed log
    /// write leaves the session untouched.
    pub fn commit(&mut self, event: Event) -> Result<(), StoreError> {
        let mut next = self.session.clone();
        next.apply(&event)?;
        self.append(&event)?;
        if let Event::Finalize { priors } = event {
            self.priors = priors;
        }
        self.session = next;
        Ok(())
    }

    fn append(&mut self, event: &Event) -> Result<(), StoreError> {
        let Some(log) = self.log.as_mut() else {
            return Ok(());
        };
        let mut line = serde_json::to_vec(event).expect("events serialize");
        line.push(b'\n');
        log.write_all(&line)
            .and_then(|_| log.sync_data())
            .map_err(|source| StoreError::Log {
                path: self.session.id().to_string(),
                source,
            })
    }

    pub fn final_list(&self) -> Result<StopwordList, StoreError> {
        let priors = resolve_priors(&self.priors)?;
        Ok(self.session.clone().finalize_stoplist(&priors)?)
    }
}

pub fn resolve_priors(names: &[String]) -> Result<Vec<StopwordList>, StoreError> {
    Ok(names.iter().map(|n| resolve_list(n)).collect::<Result<Vec<_>, _>>()?)
}

/// All sessions, each behind its own lock so that writes to one session are
/// serialized while different sessions proceed independently.
pub struct Store {
    dir: Option<PathBuf>,
    sessions: RwLock<HashMap<String, Arc<Mutex<SessionEntry>>>>,
    next_id: AtomicU64,
}

impl Store {
    pub fn in_memory() -> Self {
        Store {
            dir: None,
            sessions: RwLock::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        }
    }

    /// Opens `dir`, replaying every `*.jsonl` event log found there.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        let log_err = |source| StoreError::Log {
            path: dir.display().to_string(),
            source,
        };
        fs::create_dir_all(&dir).map_err(log_err)?;
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(log_err)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();

        let mut sessions = HashMap::new();
        let mut max_id = 0;
        for path in paths {
            let entry = replay_log(&path)?;
            let id = entry.session.id().to_string();
            if let Some(n) = id.strip_prefix('s').and_then(|n| n.parse::<u64>().ok()) {
                max_id = max_id.max(n);
            }
            sessions.insert(id, Arc::new(Mutex::new(entry)));
        }
        Ok(Store {
            dir: Some(dir),
            sessions: RwLock::new(sessions),
            next_id: AtomicU64::new(max_id + 1),
        })
    }

    pub async fn create(&self, candidates: Vec<ReviewItem>, raters: Vec<String>) -> Result<String, StoreError> {
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::SeqCst));
        let session = create_session(id.clone(), candidates.clone(), raters.clone())?;
        let event = Event::Create {
            session_id: id.clone(),
            raters,
            candidates,
        };
        let log = match &self.dir {
            Some(dir) => {
                let path = dir.join(format!("{id}.jsonl"));
                Some(
                    OpenOptions::new()
                        .create_new(true)
                        .append(true)
                        .open(&path)
                        .map_err(|source| StoreError::Log {
                            path: path.display().to_string(),
                            source,
                        })?,
                )
            }
            None => None,
        };
        let mut entry = SessionEntry {
            session,
            priors: Vec::new(),
            log,
        };
        entry.append(&event)?;
        self.sessions.write().await.insert(id.clone(), Arc::new(Mutex::new(entry)));
        Ok(id)
    }

    pub async fn get(&self, id: &str) -> Result<Arc<Mutex<SessionEntry>>, StoreError> {
        self.sessions
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::NotFound(id.to_string()))
    }

    pub async fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().await.keys().cloned().collect();
        ids.sort_by_key(|id| (id.len(), id.clone()));
        ids
    }
}

fn replay_log(path: &Path) -> Result<SessionEntry, StoreError> {
    let shown = path.display().to_string();
    let io_err = |source| StoreError::Log {
        path: shown.clone(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let event: Event = serde_json::from_str(&line).map_err(|e| StoreError::Corrupt {
            path: shown.clone(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        events.push(event);
    }
    let session = ReviewSession::replay(&events).map_err(|e| StoreError::Corrupt {
        path: shown.clone(),
        line: 0,
        reason: e.to_string(),
    })?;
    let priors = events
        .iter()
        .rev()
        .find_map(|e| match e {
            Event::Finalize { priors } => Some(priors.clone()),
            _ => None,
        })
        .unwrap_or_default();
    let log = OpenOptions::new().append(true).open(path).map_err(io_err)?;
    Ok(SessionEntry {
        session,
        priors,
        log: Some(log),
    })
}
