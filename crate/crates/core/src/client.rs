//! Obtaining predictions: from a JSONL file, or from a model endpoint.
//!
//! Wire contract: `POST {base_url}/predict` with body
//! `{"sample_id", "task", "history_text", "prompt", "image_ref"}`, answered by
//! `{"text": "<completion>"}`. Images travel by reference only. A bearer
//! token, when needed, comes from the [`AUTH_TOKEN_ENV`] environment variable.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Duration;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{PredictionError, PredictionRecord};
use crate::grammar::ActionRegistry;
use crate::planning::{render_planning_prompt, PlanningSample};

pub const AUTH_TOKEN_ENV: &str = "GUIPIPE_AUTH_TOKEN";
const MAX_BACKOFF: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, PartialEq, Eq, Hash, Error, Serialize, Deserialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum ClientError {
    #[error("request timed out")]
    Timeout,
    #[error("endpoint returned HTTP {code}")]
    Status { code: u16 },
    #[error("malformed response: {message}")]
    MalformedResponse { message: String },
    #[error("transport failure: {message}")]
    Transport { message: String },
}

impl ClientError {
    fn is_transient(&self) -> bool {
        match self {
            Self::Timeout | Self::Transport { .. } => true,
            Self::Status { code } => *code == 429 || *code >= 500,
            Self::MalformedResponse { .. } => false,
        }
    }
}

#[derive(Debug, Error)]
#[error("sample `{sample_id}`: {error}")]
pub struct SampleError {
    pub sample_id: String,
    pub error: ClientError,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("timeout must be positive")]
    ZeroTimeout,
    #[error("max_in_flight must be at least 1")]
    ZeroInFlight,
    #[error("building HTTP client: {0}")]
    Http(String),
}

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: String,
    pub timeout: Duration,
    pub max_retries: u32,
    pub max_in_flight: usize,
    /// First retry delay; doubles on each further attempt.
    pub backoff_base: Duration,
    #[serde(skip)]
    pub auth_token: Option<String>,
}

impl std::fmt::Debug for EndpointConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EndpointConfig")
            .field("base_url", &self.base_url)
            .field("timeout", &self.timeout)
            .field("max_retries", &self.max_retries)
            .field("max_in_flight", &self.max_in_flight)
            .field("backoff_base", &self.backoff_base)
            .field("auth_token", &self.auth_token.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            timeout: Duration::from_secs(60),
            max_retries: 3,
            max_in_flight: 4,
            backoff_base: Duration::from_millis(250),
            auth_token: None,
        }
    }

    /// Picks up the bearer token from the environment, if set.
    pub fn with_env_token(mut self) -> Self {
        self.auth_token = std::env::var(AUTH_TOKEN_ENV).ok().filter(|t| !t.is_empty());
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.timeout.is_zero() {
            return Err(ConfigError::ZeroTimeout);
        }
        if self.max_in_flight == 0 {
            return Err(ConfigError::ZeroInFlight);
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PredictRequest {
    pub sample_id: String,
    pub task: String,
    pub history_text: String,
    pub prompt: String,
    pub image_ref: String,
}

impl PredictRequest {
    pub fn for_sample(s: &PlanningSample) -> Self {
        Self {
            sample_id: s.sample_id.clone(),
            task: s.task.clone(),
            history_text: s.history_text.clone(),
            prompt: render_planning_prompt(s),
            image_ref: s.current_screenshot_ref.clone(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PredictResponse {
    pub text: String,
}

pub struct ModelClient {
    http: reqwest::Client,
    cfg: EndpointConfig,
    url: String,
}

impl ModelClient {
    pub fn new(cfg: EndpointConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let http = reqwest::Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| ConfigError::Http(e.to_string()))?;
        let url = format!("{}/predict", cfg.base_url.trim_end_matches('/'));
        Ok(Self { http, cfg, url })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.cfg
    }

    async fn attempt(&self, body: &PredictRequest) -> Result<String, ClientError> {
        let mut req = self.http.post(&self.url).json(body);
        if let Some(token) = &self.cfg.auth_token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().await.map_err(classify)?;
        let status = resp.status();
        if !status.is_success() {
            return Err(ClientError::Status { code: status.as_u16() });
        }
        let bytes = resp.bytes().await.map_err(classify)?;
        let parsed: PredictResponse = serde_json::from_slice(&bytes).map_err(|e| ClientError::MalformedResponse {
            message: e.to_string(),
        })?;
        Ok(parsed.text)
    }

    /// Sends one sample, retrying transient failures with exponential
    /// backoff. Returns the completion text verbatim.
    pub async fn request_prediction(&self, sample: &PlanningSample) -> Result<String, SampleError> {
        let body = PredictRequest::for_sample(sample);
        let mut delay = self.cfg.backoff_base;
        let mut attempt = 0;
        loop {
            match self.attempt(&body).await {
                Ok(text) => return Ok(text),
                Err(e) if e.is_transient() && attempt < self.cfg.max_retries => {
                    attempt += 1;
                    tokio::time::sleep(delay).await;
                    delay = (delay * 2).min(MAX_BACKOFF);
                }
                Err(error) => {
                    return Err(SampleError {
                        sample_id: sample.sample_id.clone(),
                        error,
                    })
                }
            }
        }
    }

    /// Runs every sample with at most `max_in_flight` requests outstanding.
    /// Output has one record per sample, in sample order; failures become
    /// records carrying a transport error.
    pub async fn batch_infer(
        &self,
        samples: &[PlanningSample],
        extract: bool,
        registry: &ActionRegistry,
    ) -> Vec<PredictionRecord> {
        stream::iter(samples)
            .map(|s| async move {
                match self.request_prediction(s).await {
                    Ok(text) => PredictionRecord::from_raw(s.sample_id.clone(), text, extract, registry),
                    Err(e) => PredictionRecord {
                        sample_id: s.sample_id.clone(),
                        raw_text: String::new(),
                        parsed: Err(PredictionError::Transport(e.error)),
                    },
                }
            })
            .buffered(self.cfg.max_in_flight)
            .collect()
            .await
    }
}

fn classify(e: reqwest::Error) -> ClientError {
    if e.is_timeout() {
        ClientError::Timeout
    } else if e.is_decode() {
        ClientError::MalformedResponse { message: e.to_string() }
    } else {
        ClientError::Transport { message: e.to_string() }
    }
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionLine {
    pub sample_id: String,
    pub raw_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ClientError>,
}

impl From<&PredictionRecord> for PredictionLine {
    fn from(r: &PredictionRecord) -> Self {
        Self {
            sample_id: r.sample_id.clone(),
            raw_text: r.raw_text.clone(),
            error: match &r.parsed {
                Err(PredictionError::Transport(e)) => Some(e.clone()),
                _ => None,
            },
        }
    }
}

#[derive(Debug, Error)]
pub enum PredictionsError {
    #[error(transparent)]
    Jsonl(#[from] crate::jsonl::JsonlError),
    #[error("{path}: duplicate prediction for sample_id `{sample_id}`")]
    Duplicate { path: PathBuf, sample_id: String },
}

/// Reads a predictions file. Parse failures stay attached to their record.
pub fn read_predictions(
    path: &Path,
    extract: bool,
    registry: &ActionRegistry,
) -> Result<Vec<PredictionRecord>, PredictionsError> {
    let lines: Vec<PredictionLine> = crate::jsonl::read(path)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(lines.len());
    for line in lines {
        if !seen.insert(line.sample_id.clone()) {
            return Err(PredictionsError::Duplicate {
                path: path.to_path_buf(),
                sample_id: line.sample_id,
            });
        }
        out.push(match line.error {
            Some(e) => PredictionRecord {
                sample_id: line.sample_id,
                raw_text: line.raw_text,
                parsed: Err(PredictionError::Transport(e)),
            },
            None => PredictionRecord::from_raw(line.sample_id, line.raw_text, extract, registry),
        });
    }
    Ok(out)
}
