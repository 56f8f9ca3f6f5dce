//! Joins generated reports with references and computes every metric.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Study;
use crate::labeler::{Labeler, LabelerBackend, LabelerError, UncertainPolicy};
use crate::metrics::clinical::{label_pairs, per_disease_from_vectors, LabelPair, PerDisease};
use crate::metrics::{ce_from_vectors, meteor, rouge, CeScores, CiderD, EvaluationPair, Meteor};
use crate::selection::GeneratedRecord;

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("generated studies missing from the references: {}", .0.join(", "))]
    UnmatchedIds(Vec<String>),
    #[error("nothing to evaluate")]
    Empty,
    #[error(transparent)]
    Labeler(#[from] LabelerError),
}

/// Which candidates make up the evaluated report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// The report exactly as generated.
    #[default]
    EndToEnd,
    /// Only candidates whose category is present in the reference labels,
    /// drawn from the full candidate pool.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricParams {
    pub cider_ngram_max: usize,
    pub cider_sigma: f64,
    pub rouge_beta: f64,
    pub meteor_alpha: f64,
    pub meteor_beta: f64,
    pub meteor_gamma: f64,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            cider_ngram_max: crate::metrics::cider::DEFAULT_NGRAM_MAX,
            cider_sigma: crate::metrics::cider::DEFAULT_SIGMA,
            rouge_beta: rouge::DEFAULT_BETA,
            meteor_alpha: meteor::DEFAULT_ALPHA,
            meteor_beta: meteor::DEFAULT_BETA,
            meteor_gamma: meteor::DEFAULT_GAMMA,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvaluationConfig {
    pub metrics: MetricParams,
    pub uncertain_policy: UncertainPolicy,
    pub mode: SelectionMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NlgScores {
    pub cider: f64,
    pub rouge_l: f64,
    pub meteor: f64,
}

/// Effective settings echoed into the evaluation output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationMetadata {
    #[serde(flatten)]
    pub metrics: MetricParams,
    pub meteor_variant: &'static str,
    pub ce_averaging: &'static str,
    pub labeler: LabelerBackend,
    pub uncertain_policy: UncertainPolicy,
    pub selection_mode: SelectionMode,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub nlg: NlgScores,
    pub ce: CeScores,
    pub per_disease: PerDisease,
    pub config: EvaluationMetadata,
}

pub fn nlg_scores(pairs: &[EvaluationPair], params: &MetricParams) -> NlgScores {
    NlgScores {
        cider: CiderD::new(params.cider_ngram_max, params.cider_sigma).corpus_score(pairs),
        rouge_l: rouge::rouge_l(pairs, params.rouge_beta),
        meteor: Meteor {
            alpha: params.meteor_alpha,
            beta: params.meteor_beta,
            gamma: params.meteor_gamma,
        }
        .score(pairs),
    }
}

fn metadata(labeler: &Labeler, config: &EvaluationConfig, pairs: usize) -> EvaluationMetadata {
    EvaluationMetadata {
        metrics: config.metrics,
        meteor_variant: "exact+stem (no synonym or paraphrase stages)",
        ce_averaging: "micro, 13 categories, No Finding excluded",
        labeler: labeler.backend(),
        uncertain_policy: config.uncertain_policy,
        selection_mode: config.mode,
        pairs,
    }
}

/// Scores ready-made pairs; `config.mode` is only recorded.
pub async fn evaluate_pairs(
    pairs: &[EvaluationPair],
    labeler: &Labeler,
    config: &EvaluationConfig,
) -> Result<EvaluationReport, EvaluationError> {
    if pairs.is_empty() {
        return Err(EvaluationError::Empty);
    }
    let labels: Vec<LabelPair> = label_pairs(pairs, labeler, config.uncertain_policy).await?;
    Ok(EvaluationReport {
        nlg: nlg_scores(pairs, &config.metrics),
        ce: ce_from_vectors(&labels),
        per_disease: per_disease_from_vectors(&labels),
        config: metadata(labeler, config, pairs.len()),
    })
}

/// Builds evaluation pairs from generated records, honoring the selection
/// mode. Every record id must exist in `references`.
pub async fn build_pairs(
    records: &[GeneratedRecord],
    references: &[Study],
    labeler: &Labeler,
    config: &EvaluationConfig,
) -> Result<Vec<EvaluationPair>, EvaluationError> {
    let by_id: HashMap<&str, &Study> = references.iter().map(|s| (s.id.as_str(), s)).collect();
    let missing: Vec<String> = records
        .iter()
        .filter(|r| !by_id.contains_key(r.id.as_str()))
        .map(|r| r.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(EvaluationError::UnmatchedIds(missing));
    }
    let mut pairs: Vec<EvaluationPair> = records
        .iter()
        .map(|r| EvaluationPair::new(r.id.clone(), r.report.clone(), by_id[r.id.as_str()].report_text.clone()))
        .collect();
    if config.mode == SelectionMode::Oracle {
        let truth = label_pairs(&pairs, labeler, config.uncertain_policy).await?;
        for ((pair, record), labels) in pairs.iter_mut().zip(records).zip(&truth) {
            pair.hypothesis = record
                .all_candidates()
                .into_iter()
                .filter(|s| labels.truth[s.category])
                .map(|s| s.text.as_str())
                .collect::<Vec<_>>()
                .join(" ");
        }
    }
    Ok(pairs)
}

pub async fn evaluate_generated(
    records: &[GeneratedRecord],
    references: &[Study],
    labeler: &Labeler,
    config: &EvaluationConfig,
) -> Result<EvaluationReport, EvaluationError> {
    let pairs = build_pairs(records, references, labeler, config).await?;
    evaluate_pairs(&pairs, labeler, config).await
}
