//! Persistent score cache: append-only JSON lines of
//! `{digest, entailment, neutral, contradiction}`.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, RwLock};

use log::warn;

use super::{BackendError, CacheKey, ScorePair, ScoreRecord, Scorer};
use crate::types::ScoreTriple;

/// Many readers, one writer. Appends are serialised through a mutex.
pub struct ScoreCache {
    path: Option<PathBuf>,
    entries: RwLock<HashMap<CacheKey, ScoreTriple>>,
    writer: Mutex<Option<BufWriter<File>>>,
}

impl ScoreCache {
    pub fn in_memory() -> Self {
        Self {
            path: None,
            entries: RwLock::new(HashMap::new()),
            writer: Mutex::new(None),
        }
    }

    /// Opens (creating if needed) a cache file. Corrupt lines are skipped with a warning.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let path = path.as_ref().to_path_buf();
        let io_err = |source| BackendError::Io {
            path: path.display().to_string(),
            source,
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io_err)?;
        }
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path).map_err(io_err)?);
            for (lineno, line) in reader.lines().enumerate() {
                let line = line.map_err(io_err)?;
                if line.trim().is_empty() {
                    continue;
                }
                match parse_record(&line) {
                    Some((key, triple)) => {
                        entries.entry(key).or_insert(triple);
                    }
                    None => warn!("{}:{}: skipping corrupt cache line", path.display(), lineno + 1),
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(io_err)?;
        Ok(Self {
            path: Some(path),
            entries: RwLock::new(entries),
            writer: Mutex::new(Some(BufWriter::new(file))),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &CacheKey) -> Option<ScoreTriple> {
        self.entries.read().expect("cache lock poisoned").get(key).copied()
    }

    /// Records a score. Keys already present are left untouched.
    pub fn put(&self, key: &CacheKey, triple: ScoreTriple) -> Result<(), BackendError> {
        let mut writer = self.writer.lock().expect("cache writer poisoned");
        {
            let mut entries = self.entries.write().expect("cache lock poisoned");
            if entries.contains_key(key) {
                return Ok(());
            }
            entries.insert(key.clone(), triple);
        }
        if let Some(w) = writer.as_mut() {
            let line = serde_json::to_string(&ScoreRecord::new(key, triple))
                .map_err(|e| BackendError::Protocol(e.to_string()))?;
            let io_err = |source| BackendError::Io {
                path: self.path.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
                source,
            };
            writeln!(w, "{line}").map_err(io_err)?;
            w.flush().map_err(io_err)?;
        }
        Ok(())
    }

    /// Returns the cached score, or computes it with `inner` and persists it.
    pub fn cached_score<F>(&self, key: &CacheKey, inner: F) -> Result<ScoreTriple, BackendError>
    where
        F: FnOnce() -> Result<ScoreTriple, BackendError>,
    {
        if let Some(hit) = self.get(key) {
            return Ok(hit);
        }
        let triple = inner()?;
        self.put(key, triple)?;
        Ok(triple)
    }
}

fn parse_record(line: &str) -> Option<(CacheKey, ScoreTriple)> {
    let record: ScoreRecord = serde_json::from_str(line).ok()?;
    let key = CacheKey::from_digest(&record.digest)?;
    let triple = record.triple();
    triple.validate().ok()?;
    Some((key, triple))
}

/// A scorer that consults a [`ScoreCache`] before its inner backend.
pub struct CachedScorer<S> {
    inner: S,
    cache: ScoreCache,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl<S: Scorer> CachedScorer<S> {
    pub fn new(inner: S, cache: ScoreCache) -> Self {
        Self {
            inner,
            cache,
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn cache(&self) -> &ScoreCache {
        &self.cache
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }
}

impl<S: Scorer> Scorer for CachedScorer<S> {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }

    fn score_batch(&self, pairs: &[ScorePair<'_>]) -> Result<Vec<ScoreTriple>, BackendError> {
        let model_id = self.inner.model_id();
        let keys: Vec<CacheKey> = pairs.iter().map(|p| p.key(model_id)).collect();
        let mut out: Vec<Option<ScoreTriple>> = keys.iter().map(|k| self.cache.get(k)).collect();

        // Distinct missing keys, first occurrence order.
        let mut pending: Vec<usize> = Vec::new();
        let mut seen: HashMap<&CacheKey, ()> = HashMap::new();
        for (i, slot) in out.iter().enumerate() {
            if slot.is_none() && seen.insert(&keys[i], ()).is_none() {
                pending.push(i);
            }
        }
        let hit_count = out.iter().filter(|s| s.is_some()).count() as u64;
        self.hits.fetch_add(hit_count, Ordering::Relaxed);

        if !pending.is_empty() {
            self.misses.fetch_add(pending.len() as u64, Ordering::Relaxed);
            let batch: Vec<ScorePair<'_>> = pending.iter().map(|&i| pairs[i]).collect();
            let scored = self.inner.score_batch(&batch)?;
            if scored.len() != batch.len() {
                return Err(BackendError::Protocol(format!(
                    "inner backend returned {} scores for {} pairs",
                    scored.len(),
                    batch.len()
                )));
            }
            for (&i, triple) in pending.iter().zip(scored) {
                self.cache.put(&keys[i], triple)?;
            }
            for (slot, key) in out.iter_mut().zip(&keys) {
                if slot.is_none() {
                    *slot = self.cache.get(key);
                }
            }
        }
        out.into_iter()
            .map(|s| s.ok_or_else(|| BackendError::Protocol("cache lost a freshly scored pair".into())))
            .collect()
    }
}
