//! Report-level evaluation: CIDEr-D, ROUGE-L, METEOR and clinical efficacy.

pub mod cider;
pub mod clinical;
pub mod meteor;
pub mod ngram;
pub mod rouge;

use serde::{Deserialize, Serialize};

pub use cider::{cider, CiderD};
pub use clinical::{
    ce_from_vectors, ce_metrics, label_pairs, per_disease_eval, per_disease_from_vectors, CeScores, ClinicalCounts,
    DiseaseOutcome, LabelPair, PerDisease,
};
pub use meteor::{meteor, Meteor};
pub use ngram::{DocumentFrequency, NgramCounts};
pub use rouge::{lcs_length, rouge_l};

/// A generated report and its reference report(s).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationPair {
    pub study_id: String,
    pub hypothesis: String,
    pub references: Vec<String>,
}

impl EvaluationPair {
    pub fn new(study_id: impl Into<String>, hypothesis: impl Into<String>, reference: impl Into<String>) -> Self {
        Self {
            study_id: study_id.into(),
            hypothesis: hypothesis.into(),
            references: vec![reference.into()],
        }
    }
}

pub(crate) fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}
