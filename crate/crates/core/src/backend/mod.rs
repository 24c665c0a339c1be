//! Pluggable NLI scoring.
//!
//! A [`Scorer`] turns (premise, hypothesis) pairs into [`ScoreTriple`]s.
//! Implementations: [`HttpBackend`] speaks the JSON scoring protocol to a
//! model server, [`FixtureBackend`] replays recorded scores keyed by
//! [`CacheKey`], and [`MockRuleTable`] is a deterministic lookup table for
//! tests. [`CachedScorer`] wraps any of them with a persistent JSON-lines
//! score cache.

mod cache;
mod fixture;
mod http;
mod mock;

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cache::{CachedScorer, ScoreCache};
pub use fixture::FixtureBackend;
pub use http::{HttpBackend, HttpConfig, DEFAULT_BATCH_SIZE, MAX_RETRIES};
pub use mock::{HypothesisMatch, MockEntry, MockRuleTable, PremiseMatch};

use crate::types::{Hypothesis, Premise, ScoreTriple};

/// The MNLI checkpoint used unless a policy or flag says otherwise.
pub const DEFAULT_MODEL_ID: &str = "facebook/bart-large-mnli";

const UNIT_SEPARATOR: u8 = 0x1F;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },

    #[error("server returned HTTP {status}: {body}")]
    Status { status: u16, body: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("no recorded score for premise {premise:?} / hypothesis {hypothesis:?} (key {digest})")]
    FixtureMiss {
        premise: String,
        hypothesis: String,
        digest: String,
    },

    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("backend configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl BackendError {
    /// Transient failures worth retrying.
    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Transport { .. } => true,
            BackendError::Status { status, .. } => *status >= 500,
            _ => false,
        }
    }
}

/// SHA-256 over `model_id 0x1F premise 0x1F hypothesis`, hex encoded.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CacheKey(String);

impl CacheKey {
    pub fn new(model_id: &str, premise: &str, hypothesis: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(model_id.as_bytes());
        hasher.update([UNIT_SEPARATOR]);
        hasher.update(premise.as_bytes());
        hasher.update([UNIT_SEPARATOR]);
        hasher.update(hypothesis.as_bytes());
        Self(hex::encode(hasher.finalize()))
    }

    /// Accepts an existing 64-char lowercase hex digest.
    pub fn from_digest(digest: &str) -> Option<Self> {
        let ok = digest.len() == 64 && digest.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b));
        ok.then(|| Self(digest.to_owned()))
    }

    pub fn digest(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CacheKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A borrowed pair handed to a scorer.
#[derive(Debug, Clone, Copy)]
pub struct ScorePair<'a> {
    pub premise: &'a Premise,
    pub hypothesis: &'a Hypothesis,
}

impl<'a> ScorePair<'a> {
    pub fn new(premise: &'a Premise, hypothesis: &'a Hypothesis) -> Self {
        Self { premise, hypothesis }
    }

    pub fn key(&self, model_id: &str) -> CacheKey {
        CacheKey::new(model_id, self.premise.text(), self.hypothesis.text())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WirePair {
    pub premise: String,
    pub hypothesis: String,
}

/// Request body of `POST /v1/score`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub model_id: String,
    pub pairs: Vec<WirePair>,
}

impl ScoreRequest {
    pub fn new(model_id: impl Into<String>, pairs: &[ScorePair<'_>]) -> Result<Self, BackendError> {
        let pairs: Vec<WirePair> = pairs
            .iter()
            .map(|p| WirePair {
                premise: p.premise.text().to_owned(),
                hypothesis: p.hypothesis.text().to_owned(),
            })
            .collect();
        let req = Self {
            model_id: model_id.into(),
            pairs,
        };
        req.validate()?;
        Ok(req)
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.pairs.is_empty() {
            return Err(BackendError::InvalidRequest("request has no pairs".into()));
        }
        if let Some(i) = self
            .pairs
            .iter()
            .position(|p| p.premise.is_empty() || p.hypothesis.is_empty())
        {
            return Err(BackendError::InvalidRequest(format!("pair {i} has an empty premise or hypothesis")));
        }
        Ok(())
    }
}

/// Response body of `POST /v1/score`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub scores: Vec<ScoreTriple>,
}

/// Response body of `GET /v1/health`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub model_id: String,
}

/// One line of a cache or fixture file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub digest: String,
    pub entailment: f64,
    pub neutral: f64,
    pub contradiction: f64,
}

impl ScoreRecord {
    pub fn new(key: &CacheKey, triple: ScoreTriple) -> Self {
        Self {
            digest: key.digest().to_owned(),
            entailment: triple.entailment,
            neutral: triple.neutral,
            contradiction: triple.contradiction,
        }
    }

    pub fn triple(&self) -> ScoreTriple {
        ScoreTriple {
            entailment: self.entailment,
            neutral: self.neutral,
            contradiction: self.contradiction,
        }
    }
}

/// An NLI scoring backend.
///
/// Implementations must be deterministic: identical pairs yield identical
/// triples within one configuration, and a batch scores each pair
/// independently of its neighbours.
pub trait Scorer: Send + Sync {
    fn model_id(&self) -> &str;

    /// Scores every pair, in order. A failure fails the whole batch.
    fn score_batch(&self, pairs: &[ScorePair<'_>]) -> Result<Vec<ScoreTriple>, BackendError>;

    fn score_pair(&self, premise: &Premise, hypothesis: &Hypothesis) -> Result<ScoreTriple, BackendError> {
        let mut out = self.score_batch(&[ScorePair::new(premise, hypothesis)])?;
        out.pop()
            .ok_or_else(|| BackendError::Protocol("backend returned no score for a single pair".into()))
    }
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }

    fn score_batch(&self, pairs: &[ScorePair<'_>]) -> Result<Vec<ScoreTriple>, BackendError> {
        (**self).score_batch(pairs)
    }
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }

    fn score_batch(&self, pairs: &[ScorePair<'_>]) -> Result<Vec<ScoreTriple>, BackendError> {
        (**self).score_batch(pairs)
    }
}
