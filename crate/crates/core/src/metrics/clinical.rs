//! Clinical-efficacy scores: labeler-derived label vectors of generated and
//! reference reports compared per category.
//!
//! `NoFinding` is derived from the other 13 categories and is not counted.

use serde::{Serialize, Serializer};

use super::EvaluationPair;
use crate::corpus::{split_sentences, Sentence};
use crate::labeler::{report_label_vector, CategoryMap, DiseaseCategory, Labeler, LabelerError, UncertainPolicy};

/// Predicted and reference label vectors of one study.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelPair {
    pub predicted: CategoryMap<bool>,
    pub truth: CategoryMap<bool>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ClinicalCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ClinicalCounts {
    pub fn record(&mut self, predicted: bool, truth: bool) {
        match (predicted, truth) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
            tn: self.tn + other.tn,
        }
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CeScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl CeScores {
    pub fn from_counts(counts: &ClinicalCounts) -> Self {
        let precision = counts.precision();
        let recall = counts.recall();
        let f1 = if precision > 0.0 && recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self { precision, recall, f1 }
    }
}

/// Micro-averaged counts pooled over every pair and the 13 agent-bearing
/// categories.
pub fn pooled_counts(pairs: &[LabelPair]) -> ClinicalCounts {
    let mut counts = ClinicalCounts::default();
    for pair in pairs {
        for c in DiseaseCategory::AGENT_BEARING {
            counts.record(pair.predicted[c], pair.truth[c]);
        }
    }
    counts
}

pub fn ce_from_vectors(pairs: &[LabelPair]) -> CeScores {
    CeScores::from_counts(&pooled_counts(pairs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiseaseOutcome {
    pub accuracy: f64,
    /// `None` when the category has no positive reference.
    pub recall: Option<f64>,
}

/// Per-category outcomes for the 13 agent-bearing categories.
#[derive(Debug, Clone, PartialEq)]
pub struct PerDisease(pub Vec<(DiseaseCategory, DiseaseOutcome)>);

impl PerDisease {
    pub fn get(&self, category: DiseaseCategory) -> Option<&DiseaseOutcome> {
        self.0.iter().find(|(c, _)| *c == category).map(|(_, o)| o)
    }
}

impl Serialize for PerDisease {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_map(self.0.iter().map(|(c, o)| (c.name(), o)))
    }
}

pub fn per_disease_from_vectors(pairs: &[LabelPair]) -> PerDisease {
    PerDisease(
        DiseaseCategory::AGENT_BEARING
            .into_iter()
            .map(|c| {
                let mut counts = ClinicalCounts::default();
                for pair in pairs {
                    counts.record(pair.predicted[c], pair.truth[c]);
                }
                let accuracy = ratio(counts.tp + counts.tn, counts.total());
                let recall = (counts.tp + counts.fn_ > 0).then(|| counts.recall());
                (c, DiseaseOutcome { accuracy, recall })
            })
            .collect(),
    )
}

fn sentences_of(study_id: &str, texts: impl IntoIterator<Item = String>) -> Vec<Sentence> {
    texts
        .into_iter()
        .enumerate()
        .map(|(i, t)| Sentence::new(study_id, i, t))
        .collect()
}

/// Labels hypotheses and references (all references of a pair pooled) in one
/// labeler batch and reduces each side to a label vector.
pub async fn label_pairs(
    pairs: &[EvaluationPair],
    labeler: &Labeler,
    policy: UncertainPolicy,
) -> Result<Vec<LabelPair>, LabelerError> {
    let mut batch = Vec::new();
    let mut spans = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let hyp = sentences_of(&pair.study_id, split_sentences(&pair.hypothesis));
        let refs = sentences_of(
            &pair.study_id,
            pair.references.iter().flat_map(|r| split_sentences(r)),
        );
        let start = batch.len();
        spans.push((start, start + hyp.len(), start + hyp.len() + refs.len()));
        batch.extend(hyp);
        batch.extend(refs);
    }
    let labeled = labeler.label_batch(&batch).await?;
    spans
        .into_iter()
        .map(|(start, mid, end)| {
            Ok(LabelPair {
                predicted: report_label_vector(&labeled[start..mid], policy)?,
                truth: report_label_vector(&labeled[mid..end], policy)?,
            })
        })
        .collect()
}

pub async fn ce_metrics(
    pairs: &[EvaluationPair],
    labeler: &Labeler,
    policy: UncertainPolicy,
) -> Result<CeScores, LabelerError> {
    Ok(ce_from_vectors(&label_pairs(pairs, labeler, policy).await?))
}

pub async fn per_disease_eval(
    pairs: &[EvaluationPair],
    labeler: &Labeler,
    policy: UncertainPolicy,
) -> Result<PerDisease, LabelerError> {
    Ok(per_disease_from_vectors(&label_pairs(pairs, labeler, policy).await?))
}
