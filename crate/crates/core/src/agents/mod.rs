//! The 13 disease-specialized agents and the per-study fan-out over them.
//!
//! Wire protocol: `POST {endpoint}/generate` with
//! `{"study_id", "images", "category"}`, answered by `{"sentence"}`.
//! Timeouts, connection errors and 5xx replies are retried; 4xx replies and
//! malformed bodies are not.

pub mod mock;

use std::time::Duration;

use futures::future::join_all;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::time::Instant;
use url::Url;

use crate::corpus::{split_sentences, Study};
use crate::labeler::DiseaseCategory;
use crate::retry::{RetryPolicy, DEFAULT_BACKOFF_BASE, DEFAULT_MAX_RETRIES};

pub use mock::{serve_mock_agent, serve_mock_agent_on, MockAgentHandle, MockBehavior};

pub const DEFAULT_TIMEOUT_MS: u64 = 30_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AgentError {
    #[error("duplicate agent for category {0}")]
    DuplicateCategory(DiseaseCategory),
    #[error("category {0} cannot have an agent")]
    NotAgentBearing(DiseaseCategory),
    #[error("agent registry is empty")]
    EmptyRegistry,
    #[error("agent for {0} has a zero timeout")]
    ZeroTimeout(DiseaseCategory),
    #[error("study {0:?} has no images")]
    NoImages(String),
    #[error("cannot start mock agent: {0}")]
    Startup(String),
}

fn default_timeout_ms() -> u64 {
    DEFAULT_TIMEOUT_MS
}

fn default_max_retries() -> u32 {
    DEFAULT_MAX_RETRIES
}

fn default_backoff_ms() -> u64 {
    DEFAULT_BACKOFF_BASE.as_millis() as u64
}

/// Identity and client policy of one agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub category: DiseaseCategory,
    pub endpoint: Url,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_base_ms: u64,
}

impl AgentSpec {
    pub fn new(category: DiseaseCategory, endpoint: Url) -> Self {
        Self {
            category,
            endpoint,
            timeout_ms: DEFAULT_TIMEOUT_MS,
            max_retries: DEFAULT_MAX_RETRIES,
            backoff_base_ms: default_backoff_ms(),
        }
    }

    pub fn with_timeout_ms(mut self, timeout_ms: u64) -> Self {
        self.timeout_ms = timeout_ms;
        self
    }

    pub fn with_max_retries(mut self, max_retries: u32) -> Self {
        self.max_retries = max_retries;
        self
    }

    fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_retries: self.max_retries,
            backoff_base: Duration::from_millis(self.backoff_base_ms),
        }
    }

    fn generate_url(&self) -> String {
        format!("{}/generate", self.endpoint.as_str().trim_end_matches('/'))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub study_id: String,
    pub images: Vec<String>,
    pub category: DiseaseCategory,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub sentence: String,
}

/// Immutable set of agents, at most one per agent-bearing category, kept in
/// canonical category order.
#[derive(Debug, Clone)]
pub struct AgentRegistry {
    agents: Vec<AgentSpec>,
    client: reqwest::Client,
}

pub fn register_agents(specs: Vec<AgentSpec>) -> Result<AgentRegistry, AgentError> {
    AgentRegistry::new(specs)
}

impl AgentRegistry {
    pub fn new(mut specs: Vec<AgentSpec>) -> Result<Self, AgentError> {
        if specs.is_empty() {
            return Err(AgentError::EmptyRegistry);
        }
        let mut seen = [false; DiseaseCategory::COUNT];
        for spec in &specs {
            if !spec.category.is_agent_bearing() {
                return Err(AgentError::NotAgentBearing(spec.category));
            }
            if std::mem::replace(&mut seen[spec.category.index()], true) {
                return Err(AgentError::DuplicateCategory(spec.category));
            }
            if spec.timeout_ms == 0 {
                return Err(AgentError::ZeroTimeout(spec.category));
            }
        }
        specs.sort_by_key(|s| s.category);
        Ok(Self {
            agents: specs,
            client: reqwest::Client::new(),
        })
    }

    pub fn agents(&self) -> &[AgentSpec] {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    /// Queries every agent concurrently for `study` and joins the results.
    ///
    /// Per-agent failures are collected, never propagated; the only error is
    /// a study without images.
    pub async fn generate_candidates(&self, study: &Study) -> Result<FanoutResult, AgentError> {
        if study.image_refs.is_empty() {
            return Err(AgentError::NoImages(study.id.clone()));
        }
        let outcomes = join_all(self.agents.iter().map(|spec| self.query(spec, study))).await;
        let mut candidates = Vec::new();
        let mut failures = Vec::new();
        for (spec, outcome) in self.agents.iter().zip(outcomes) {
            match outcome {
                Ok(candidate) => candidates.push(candidate),
                Err(error) => failures.push(AgentFailure {
                    category: spec.category,
                    error,
                }),
            }
        }
        Ok(FanoutResult {
            study_id: study.id.clone(),
            candidates,
            failures,
        })
    }

    async fn query(&self, spec: &AgentSpec, study: &Study) -> Result<CandidateSentence, String> {
        let request = GenerateRequest {
            study_id: study.id.clone(),
            images: study.image_refs.clone(),
            category: spec.category,
        };
        let url = spec.generate_url();
        let policy = spec.retry_policy();
        let timeout = Duration::from_millis(spec.timeout_ms);
        let began = Instant::now();
        let mut last = String::new();
        for attempt in 1..=policy.max_attempts() {
            let started = Instant::now();
            match self.attempt(&url, &request, timeout).await {
                Ok(reply) => {
                    let text = first_sentence(&reply.sentence)
                        .ok_or_else(|| format!("attempt {attempt}: empty sentence"))?;
                    return Ok(CandidateSentence {
                        category: spec.category,
                        text,
                        latency_ms: began.elapsed().as_millis() as u64,
                        attempt,
                    });
                }
                Err(AttemptError::Fatal(message)) => return Err(format!("attempt {attempt}: {message}")),
                Err(AttemptError::Retryable(message)) => {
                    tracing::debug!(category = %spec.category, attempt, %message, "agent attempt failed");
                    last = format!("attempt {attempt}: {message}");
                    if attempt < policy.max_attempts() {
                        policy.wait_before(attempt, started).await;
                    }
                }
            }
        }
        Err(format!("retries exhausted; {last}"))
    }

    async fn attempt(
        &self,
        url: &str,
        request: &GenerateRequest,
        timeout: Duration,
    ) -> Result<GenerateResponse, AttemptError> {
        let response = self
            .client
            .post(url)
            .timeout(timeout)
            .json(request)
            .send()
            .await
            .map_err(|e| AttemptError::Retryable(describe(&e)))?;
        let status = response.status();
        if status.is_server_error() {
            return Err(AttemptError::Retryable(format!("HTTP {}", status.as_u16())));
        }
        if !status.is_success() {
            return Err(AttemptError::Fatal(format!("HTTP {}", status.as_u16())));
        }
        let body = response
            .bytes()
            .await
            .map_err(|e| AttemptError::Retryable(describe(&e)))?;
        validate_generate_response(&body).map_err(AttemptError::Fatal)
    }
}

enum AttemptError {
    Retryable(String),
    Fatal(String),
}

fn describe(error: &reqwest::Error) -> String {
    if error.is_timeout() {
        "timeout".to_string()
    } else if error.is_connect() {
        format!("connection failed: {error}")
    } else {
        error.to_string()
    }
}

/// Parses and checks a `/generate` response body.
pub fn validate_generate_response(body: &[u8]) -> Result<GenerateResponse, String> {
    let reply: GenerateResponse =
        serde_json::from_slice(body).map_err(|e| format!("malformed response: {e}"))?;
    if reply.sentence.trim().is_empty() {
        return Err("field \"sentence\" is empty".into());
    }
    Ok(reply)
}

fn first_sentence(text: &str) -> Option<String> {
    split_sentences(text).into_iter().next()
}

/// The sentence one agent produced for a study.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSentence {
    pub category: DiseaseCategory,
    pub text: String,
    pub latency_ms: u64,
    pub attempt: u32,
}

impl CandidateSentence {
    pub fn new(category: DiseaseCategory, text: impl Into<String>) -> Self {
        Self {
            category,
            text: text.into(),
            latency_ms: 0,
            attempt: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentFailure {
    pub category: DiseaseCategory,
    pub error: String,
}

/// Successes and failures of one fan-out; every registered category is in
/// exactly one of the two lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FanoutResult {
    pub study_id: String,
    pub candidates: Vec<CandidateSentence>,
    pub failures: Vec<AgentFailure>,
}

impl FanoutResult {
    pub fn failed_categories(&self) -> Vec<DiseaseCategory> {
        self.failures.iter().map(|f| f.category).collect()
    }
}
