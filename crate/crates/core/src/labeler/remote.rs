//! Client for a CheXbert-compatible labeling service.
//!
//! Wire protocol: `POST {endpoint}/label` with `{"sentences": [...]}`,
//! answered by `{"labels": [{category: state, ...}, ...]}` in input order.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use tokio::time::Instant;
use url::Url;

use super::{CategoryMap, DiseaseCategory, LabeledSentence, LabelerError, ObservationState};
use crate::corpus::Sentence;
use crate::retry::RetryPolicy;

/// Sentences sent per request.
pub const REMOTE_BATCH_SIZE: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRequest {
    pub sentences: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelResponse {
    pub labels: Vec<CategoryMap<ObservationState>>,
}

/// Validates a raw `/label` response body against the request size.
///
/// Errors name the offending field: a missing or unknown category, or the
/// category holding an unknown state string.
pub fn validate_label_response(
    body: &Value,
    expected: usize,
) -> Result<Vec<CategoryMap<ObservationState>>, LabelerError> {
    let protocol = |field: &str, message: String| LabelerError::Protocol {
        field: field.to_string(),
        message,
    };
    let labels = body
        .get("labels")
        .and_then(Value::as_array)
        .ok_or_else(|| protocol("labels", "expected an array".into()))?;
    if labels.len() != expected {
        return Err(protocol(
            "labels",
            format!("expected {expected} entries, got {}", labels.len()),
        ));
    }
    labels
        .iter()
        .enumerate()
        .map(|(i, entry)| {
            let object = entry
                .as_object()
                .ok_or_else(|| protocol("labels", format!("entry {i} is not an object")))?;
            parse_state_map(object, i)
        })
        .collect()
}

fn parse_state_map(object: &Map<String, Value>, entry: usize) -> Result<CategoryMap<ObservationState>, LabelerError> {
    for key in object.keys() {
        if !DiseaseCategory::ALL.iter().any(|c| c.name() == key) {
            return Err(LabelerError::Protocol {
                field: key.clone(),
                message: format!("entry {entry}: unknown category"),
            });
        }
    }
    let mut states = CategoryMap::filled(ObservationState::Unmentioned);
    for category in DiseaseCategory::ALL {
        let value = object.get(category.name()).ok_or_else(|| LabelerError::Protocol {
            field: category.name().to_string(),
            message: format!("entry {entry}: missing category"),
        })?;
        states[category] = value
            .as_str()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| LabelerError::Protocol {
                field: category.name().to_string(),
                message: format!("entry {entry}: unknown state {value}"),
            })?;
    }
    Ok(states)
}

#[derive(Debug, Clone)]
pub struct RemoteLabeler {
    client: reqwest::Client,
    endpoint: Url,
    timeout: Duration,
    retry: RetryPolicy,
}

enum Attempt {
    Retry(String),
    Fatal(LabelerError),
}

impl RemoteLabeler {
    pub fn new(endpoint: Url, timeout: Duration) -> Self {
        Self {
            client: reqwest::Client::new(),
            endpoint,
            timeout,
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn endpoint(&self) -> &Url {
        &self.endpoint
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    fn label_url(&self) -> String {
        format!("{}/label", self.endpoint.as_str().trim_end_matches('/'))
    }

    pub async fn label_batch(&self, sentences: &[Sentence]) -> Result<Vec<LabeledSentence>, LabelerError> {
        let mut out = Vec::with_capacity(sentences.len());
        for chunk in sentences.chunks(REMOTE_BATCH_SIZE) {
            let request = LabelRequest {
                sentences: chunk.iter().map(|s| s.text.clone()).collect(),
            };
            let states = self.send(&request).await?;
            for (sentence, states) in chunk.iter().zip(states) {
                let labeled = LabeledSentence::new(sentence.clone(), states).map_err(|e| LabelerError::Protocol {
                    field: DiseaseCategory::NoFinding.name().into(),
                    message: e.to_string(),
                })?;
                out.push(labeled);
            }
        }
        Ok(out)
    }

    async fn send(&self, request: &LabelRequest) -> Result<Vec<CategoryMap<ObservationState>>, LabelerError> {
        let url = self.label_url();
        let mut last = String::new();
        for attempt in 0..self.retry.max_attempts() {
            let started = Instant::now();
            match self.attempt(&url, request).await {
                Ok(states) => return Ok(states),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(message)) => {
                    tracing::debug!(attempt = attempt + 1, %message, "labeler attempt failed");
                    last = message;
                    if attempt + 1 < self.retry.max_attempts() {
                        self.retry.wait_before(attempt + 1, started).await;
                    }
                }
            }
        }
        Err(LabelerError::Retryable {
            attempts: self.retry.max_attempts(),
            message: last,
        })
    }

    async fn attempt(&self, url: &str, request: &LabelRequest) -> Result<Vec<CategoryMap<ObservationState>>, Attempt> {
        let response = self
            .client
            .post(url)
            .timeout(self.timeout)
            .json(request)
            .send()
            .await
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = response.status();
        if status.is_server_error() {
            return Err(Attempt::Retry(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(Attempt::Fatal(LabelerError::Rejected { status: status.as_u16() }));
        }
        let body = response.bytes().await.map_err(|e| Attempt::Retry(e.to_string()))?;
        let value: Value = serde_json::from_slice(&body).map_err(|e| {
            Attempt::Fatal(LabelerError::Protocol {
                field: "body".into(),
                message: e.to_string(),
            })
        })?;
        validate_label_response(&value, request.sentences.len()).map_err(Attempt::Fatal)
    }
}
