//! Replay of recorded scores. Uses the cache line format, so a warm cache
//! file is also a valid fixture.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::{BackendError, CacheKey, ScorePair, ScoreRecord, Scorer};
use crate::types::ScoreTriple;

pub struct FixtureBackend {
    model_id: String,
    scores: HashMap<CacheKey, ScoreTriple>,
}

impl FixtureBackend {
    pub fn from_records(model_id: impl Into<String>, records: impl IntoIterator<Item = ScoreRecord>) -> Result<Self, BackendError> {
        let mut scores = HashMap::new();
        for (i, record) in records.into_iter().enumerate() {
            let key = CacheKey::from_digest(&record.digest)
                .ok_or_else(|| BackendError::Config(format!("fixture record {i}: bad digest {:?}", record.digest)))?;
            let triple = record.triple();
            triple
                .validate()
                .map_err(|e| BackendError::Config(format!("fixture record {i}: {e}")))?;
            scores.insert(key, triple);
        }
        Ok(Self {
            model_id: model_id.into(),
            scores,
        })
    }

    /// Loads a JSON-lines fixture. Unlike the cache, a malformed line is fatal.
    pub fn open(path: impl AsRef<Path>, model_id: impl Into<String>) -> Result<Self, BackendError> {
        let path = path.as_ref();
        let io_err = |source| BackendError::Io {
            path: path.display().to_string(),
            source,
        };
        let reader = BufReader::new(File::open(path).map_err(io_err)?);
        let mut records = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(io_err)?;
            if line.trim().is_empty() {
                continue;
            }
            let record: ScoreRecord = serde_json::from_str(&line)
                .map_err(|e| BackendError::Config(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
            records.push(record);
        }
        Self::from_records(model_id, records)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

impl Scorer for FixtureBackend {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn score_batch(&self, pairs: &[ScorePair<'_>]) -> Result<Vec<ScoreTriple>, BackendError> {
        pairs
            .iter()
            .map(|p| {
                let key = p.key(&self.model_id);
                self.scores.get(&key).copied().ok_or_else(|| BackendError::FixtureMiss {
                    premise: p.premise.text().to_owned(),
                    hypothesis: p.hypothesis.text().to_owned(),
                    digest: key.digest().to_owned(),
                })
            })
            .collect()
    }
}
