//! Blocking client for the JSON scoring protocol.

use std::time::Duration;

use log::{debug, warn};

use super::{BackendError, HealthResponse, ScorePair, ScoreRequest, ScoreResponse, Scorer};
use crate::types::ScoreTriple;

pub const DEFAULT_BATCH_SIZE: usize = 16;
/// Retries after the first attempt.
pub const MAX_RETRIES: u32 = 3;
const DEFAULT_BACKOFF: Duration = Duration::from_millis(250);

#[derive(Debug, Clone)]
pub struct HttpConfig {
    /// Base URL, e.g. `http://127.0.0.1:8000`.
    pub endpoint: String,
    pub model_id: String,
    pub batch_size: usize,
    pub max_retries: u32,
    pub initial_backoff: Duration,
    pub timeout: Duration,
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>, model_id: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model_id: model_id.into(),
            batch_size: DEFAULT_BATCH_SIZE,
            max_retries: MAX_RETRIES,
            initial_backoff: DEFAULT_BACKOFF,
            timeout: Duration::from_secs(120),
        }
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, BackendError> {
        if config.batch_size == 0 {
            return Err(BackendError::Config("batch size must be positive".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(Self { config, client })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.config.endpoint.trim_end_matches('/'), path)
    }

    pub fn health(&self) -> Result<HealthResponse, BackendError> {
        let resp = self.client.get(self.url("/v1/health")).send().map_err(|e| BackendError::Transport {
            attempts: 1,
            message: e.to_string(),
        })?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| BackendError::Protocol(e.to_string()))?;
        if status != 200 {
            return Err(BackendError::Status { status, body });
        }
        serde_json::from_str(&body).map_err(|e| BackendError::Protocol(format!("bad health body: {e}")))
    }

    fn post_once(&self, request: &ScoreRequest) -> Result<Vec<ScoreTriple>, BackendError> {
        let resp = self
            .client
            .post(self.url("/v1/score"))
            .json(request)
            .send()
            .map_err(|e| BackendError::Transport {
                attempts: 1,
                message: e.to_string(),
            })?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| BackendError::Transport {
            attempts: 1,
            message: e.to_string(),
        })?;
        if status != 200 {
            return Err(BackendError::Status { status, body });
        }
        let parsed: ScoreResponse =
            serde_json::from_str(&body).map_err(|e| BackendError::Protocol(format!("bad score body: {e}")))?;
        if parsed.scores.len() != request.pairs.len() {
            return Err(BackendError::Protocol(format!(
                "sent {} pairs, received {} scores",
                request.pairs.len(),
                parsed.scores.len()
            )));
        }
        for (i, s) in parsed.scores.iter().enumerate() {
            s.validate()
                .map_err(|e| BackendError::Protocol(format!("score {i}: {e}")))?;
        }
        Ok(parsed.scores)
    }

    /// Posts one request, retrying transient failures with exponential backoff.
    fn post_with_retries(&self, request: &ScoreRequest) -> Result<Vec<ScoreTriple>, BackendError> {
        let mut delay = self.config.initial_backoff;
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self.post_once(request) {
                Ok(scores) => return Ok(scores),
                Err(err) if err.is_retryable() && attempt <= self.config.max_retries => {
                    warn!("scoring attempt {attempt} failed ({err}); retrying in {delay:?}");
                    std::thread::sleep(delay);
                    delay *= 2;
                }
                Err(BackendError::Transport { message, .. }) => {
                    return Err(BackendError::Transport {
                        attempts: attempt,
                        message,
                    })
                }
                Err(err) => return Err(err),
            }
        }
    }
}

impl Scorer for HttpBackend {
    fn model_id(&self) -> &str {
        &self.config.model_id
    }

    fn score_batch(&self, pairs: &[ScorePair<'_>]) -> Result<Vec<ScoreTriple>, BackendError> {
        let mut out = Vec::with_capacity(pairs.len());
        for chunk in pairs.chunks(self.config.batch_size) {
            let request = ScoreRequest::new(self.config.model_id.clone(), chunk)?;
            debug!("POST /v1/score with {} pairs", chunk.len());
            out.extend(self.post_with_retries(&request)?);
        }
        Ok(out)
    }
}
