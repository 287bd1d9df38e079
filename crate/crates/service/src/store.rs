//! Motion and session storage with a response cache.
//!
//! Motions are immutable and addressed by content id, so cached bodies stay
//! valid until a motion is deleted. With a data directory, motions and
//! sessions are mirrored to `motions/{id}.json` and `sessions/{id}.json`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use mocomp_core::io::{content_id, load_motion, load_session, save_motion, save_session, LoadOptions, LoadedMotion, MotionFormat, Session};

use crate::error::ApiError;

const CACHE_CAPACITY: usize = 512;

#[derive(Debug, Default)]
pub struct Store {
    motions: RwLock<BTreeMap<String, Arc<LoadedMotion>>>,
    sessions: RwLock<BTreeMap<String, Arc<Vec<u8>>>>,
    cache: Mutex<HashMap<String, Arc<Vec<u8>>>>,
    generation: AtomicU64,
    data_dir: Option<PathBuf>,
}

fn valid_session_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

fn read_dir_files(dir: &Path) -> io::Result<Vec<PathBuf>> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut out: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<io::Result<_>>()?;
    out.retain(|p| p.extension().is_some_and(|e| e == "json"));
    out.sort();
    Ok(out)
}

fn invalid_data(path: &Path, e: impl std::fmt::Display) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", path.display()))
}

impl Store {
    pub fn in_memory() -> Self {
        Store::default()
    }

    /// Opens (creating if needed) a store mirrored to `dir`, loading what is there.
    pub fn open(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir.join("motions"))?;
        fs::create_dir_all(dir.join("sessions"))?;
        let store = Store {
            data_dir: Some(dir.to_path_buf()),
            ..Store::default()
        };
        {
            let mut motions = store.motions.write().expect("lock");
            for path in read_dir_files(&dir.join("motions"))? {
                let m = load_motion(&fs::read(&path)?, MotionFormat::Json, &LoadOptions::default())
                    .map_err(|e| invalid_data(&path, e))?;
                motions.insert(m.motion.id.clone(), Arc::new(m));
            }
            let mut sessions = store.sessions.write().expect("lock");
            for path in read_dir_files(&dir.join("sessions"))? {
                let bytes = fs::read(&path)?;
                load_session(&bytes).map_err(|e| invalid_data(&path, e))?;
                let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_owned();
                sessions.insert(id, Arc::new(bytes));
            }
        }
        Ok(store)
    }

    fn write_file(&self, kind: &str, id: &str, bytes: &[u8]) -> Result<(), ApiError> {
        if let Some(dir) = &self.data_dir {
            let path = dir.join(kind).join(format!("{id}.json"));
            let tmp = path.with_extension("json.tmp");
            fs::write(&tmp, bytes)
                .and_then(|_| fs::rename(&tmp, &path))
                .map_err(|e| ApiError::new(crate::error::ErrorCode::Internal, format!("cannot persist {kind}: {e}")))?;
        }
        Ok(())
    }

    /// Stores a motion; returns its id and whether it was new.
    pub fn insert_motion(&self, motion: LoadedMotion) -> Result<(String, bool), ApiError> {
        let id = motion.motion.id.clone();
        let mut motions = self.motions.write().expect("lock");
        if motions.contains_key(&id) {
            return Ok((id, false));
        }
        self.write_file("motions", &id, &save_motion(&motion))?;
        motions.insert(id.clone(), Arc::new(motion));
        Ok((id, true))
    }

    pub fn motion(&self, id: &str) -> Result<Arc<LoadedMotion>, ApiError> {
        self.motions
            .read()
            .expect("lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_motion(id))
    }

    pub fn motions(&self) -> Vec<Arc<LoadedMotion>> {
        self.motions.read().expect("lock").values().cloned().collect()
    }

    pub fn delete_motion(&self, id: &str) -> Result<(), ApiError> {
        let mut motions = self.motions.write().expect("lock");
        if motions.remove(id).is_none() {
            return Err(ApiError::unknown_motion(id));
        }
        if let Some(dir) = &self.data_dir {
            let _ = fs::remove_file(dir.join("motions").join(format!("{id}.json")));
        }
        self.generation.fetch_add(1, Ordering::SeqCst);
        self.cache.lock().expect("lock").clear();
        Ok(())
    }

    fn missing_motions(&self, session: &Session) -> Vec<String> {
        let motions = self.motions.read().expect("lock");
        session
            .referenced_motions()
            .into_iter()
            .filter(|id| !motions.contains_key(id))
            .collect()
    }

    /// Stores a session under a content-derived id.
    pub fn create_session(&self, mut session: Session) -> Result<String, ApiError> {
        session.session_id = None;
        let id = content_id(&save_session(&session)?);
        self.put_session(&id, session)?;
        Ok(id)
    }

    /// Stores (or replaces) a session and returns its canonical document.
    pub fn put_session(&self, id: &str, mut session: Session) -> Result<Arc<Vec<u8>>, ApiError> {
        if !valid_session_id(id) {
            return Err(ApiError::invalid("session ids are 1-64 characters of [A-Za-z0-9_-]").at("id"));
        }
        let missing = self.missing_motions(&session);
        if !missing.is_empty() {
            return Err(ApiError::stale_refs(missing));
        }
        session.session_id = Some(id.to_owned());
        let bytes = Arc::new(save_session(&session)?);
        self.write_file("sessions", id, &bytes)?;
        self.sessions.write().expect("lock").insert(id.to_owned(), bytes.clone());
        Ok(bytes)
    }

    pub fn session(&self, id: &str) -> Result<Arc<Vec<u8>>, ApiError> {
        self.sessions
            .read()
            .expect("lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))
    }

    /// Returns the cached body for `key`, computing and caching it on a miss.
    pub fn cached(&self, key: &str, compute: impl FnOnce() -> Result<Vec<u8>, ApiError>) -> Result<Arc<Vec<u8>>, ApiError> {
        if let Some(hit) = self.cache.lock().expect("lock").get(key) {
            return Ok(hit.clone());
        }
        let generation = self.generation.load(Ordering::SeqCst);
        let body = Arc::new(compute()?);
        let mut cache = self.cache.lock().expect("lock");
        // a delete during the computation may have invalidated its inputs
        if self.generation.load(Ordering::SeqCst) == generation {
            if cache.len() >= CACHE_CAPACITY {
                cache.clear();
            }
            cache.insert(key.to_owned(), body.clone());
        }
        Ok(body)
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().expect("lock").len()
    }
}
