//! Sentence labeling over the 14 observation categories.
//!
//! Two backends share one output contract: the rule-based labeler in
//! [`rules`] and a remote CheXbert-compatible service reached through
//! [`remote`].

mod category;
pub mod remote;
pub mod rules;

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

pub use category::{CategoryMap, DiseaseCategory, ObservationState};
pub use remote::{LabelRequest, LabelResponse, RemoteLabeler};
pub use rules::{label_sentence_rule_based, Lexicon, LexiconError};

use crate::corpus::Sentence;

#[derive(Debug, Error)]
pub enum LabelerError {
    #[error("labeler service unavailable after {attempts} attempts: {message}")]
    Retryable { attempts: u32, message: String },
    #[error("labeler protocol error in field {field:?}: {message}")]
    Protocol { field: String, message: String },
    #[error("labeler request rejected with HTTP {status}")]
    Rejected { status: u16 },
    #[error("contract violation: {0}")]
    Contract(String),
}

/// A sentence and its state for every category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSentence {
    pub sentence: Sentence,
    states: CategoryMap<ObservationState>,
}

impl LabeledSentence {
    /// Fails when `NoFinding` is positive alongside a positive or uncertain
    /// finding.
    pub fn new(sentence: Sentence, states: CategoryMap<ObservationState>) -> Result<Self, LabelerError> {
        if states[DiseaseCategory::NoFinding] == ObservationState::Positive {
            if let Some(conflict) = DiseaseCategory::AGENT_BEARING.iter().find(|&&c| {
                matches!(states[c], ObservationState::Positive | ObservationState::Uncertain)
            }) {
                return Err(LabelerError::Contract(format!(
                    "\"No Finding\" is positive together with {conflict}"
                )));
            }
        }
        Ok(Self { sentence, states })
    }

    pub fn states(&self) -> &CategoryMap<ObservationState> {
        &self.states
    }

    pub fn state(&self, category: DiseaseCategory) -> ObservationState {
        self.states[category]
    }
}

/// How uncertain mentions count when reducing to a binary label vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertainPolicy {
    #[default]
    AsPositive,
    AsNegative,
}

/// Reduces one study's labeled sentences to a report-level binary vector.
///
/// A category is present if any sentence marks it positive (or uncertain
/// under [`UncertainPolicy::AsPositive`]). `NoFinding` is present exactly
/// when nothing else is.
pub fn report_label_vector(
    labeled: &[LabeledSentence],
    policy: UncertainPolicy,
) -> Result<CategoryMap<bool>, LabelerError> {
    if let Some(first) = labeled.first() {
        let id = &first.sentence.study_id;
        if let Some(other) = labeled.iter().find(|l| &l.sentence.study_id != id) {
            return Err(LabelerError::Contract(format!(
                "sentences from studies {id:?} and {:?} mixed in one label vector",
                other.sentence.study_id
            )));
        }
    }
    Ok(label_vector_unchecked(labeled.iter(), policy))
}

pub(crate) fn label_vector_unchecked<'a>(
    labeled: impl Iterator<Item = &'a LabeledSentence> + Clone,
    policy: UncertainPolicy,
) -> CategoryMap<bool> {
    let mut vector = CategoryMap::filled(false);
    for category in DiseaseCategory::AGENT_BEARING {
        vector[category] = labeled.clone().any(|l| match l.state(category) {
            ObservationState::Positive => true,
            ObservationState::Uncertain => policy == UncertainPolicy::AsPositive,
            _ => false,
        });
    }
    vector[DiseaseCategory::NoFinding] = DiseaseCategory::AGENT_BEARING.iter().all(|&c| !vector[c]);
    vector
}

/// Where sentence labels come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LabelerBackend {
    RuleBased,
    Remote { endpoint: Url, timeout_ms: u64 },
}

/// A configured labeler. Cheap to clone and safe to share between tasks.
#[derive(Debug, Clone)]
pub enum Labeler {
    RuleBased(Arc<Lexicon>),
    Remote(RemoteLabeler),
}

impl Labeler {
    pub fn rule_based() -> Self {
        Labeler::RuleBased(Arc::new(Lexicon::default()))
    }

    pub fn with_lexicon(lexicon: Lexicon) -> Self {
        Labeler::RuleBased(Arc::new(lexicon))
    }

    /// Builds a labeler for `backend`, using the built-in lexicon for the
    /// rule-based kind.
    pub fn from_backend(backend: &LabelerBackend) -> Result<Self, LabelerError> {
        match backend {
            LabelerBackend::RuleBased => Ok(Self::rule_based()),
            LabelerBackend::Remote { endpoint, timeout_ms } => {
                if *timeout_ms == 0 {
                    return Err(LabelerError::Contract("remote labeler timeout must be positive".into()));
                }
                Ok(Labeler::Remote(RemoteLabeler::new(
                    endpoint.clone(),
                    Duration::from_millis(*timeout_ms),
                )))
            }
        }
    }

    pub fn backend(&self) -> LabelerBackend {
        match self {
            Labeler::RuleBased(_) => LabelerBackend::RuleBased,
            Labeler::Remote(remote) => LabelerBackend::Remote {
                endpoint: remote.endpoint().clone(),
                timeout_ms: remote.timeout().as_millis() as u64,
            },
        }
    }

    /// Labels every sentence, preserving input order.
    pub async fn label_batch(&self, sentences: &[Sentence]) -> Result<Vec<LabeledSentence>, LabelerError> {
        match self {
            Labeler::RuleBased(lexicon) => Ok(sentences
                .iter()
                .map(|s| lexicon.label_sentence(s))
                .collect()),
            Labeler::Remote(remote) => remote.label_batch(sentences).await,
        }
    }
}
