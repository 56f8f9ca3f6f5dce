//! Redundancy filtering of agent candidates and report assembly.
//!
//! Each candidate is scored by its mean CIDEr-D against every other
//! candidate, with document frequencies taken over the candidate set itself.
//! The `k` lowest-scoring (most unique) candidates make the report.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{CandidateSentence, FanoutResult};
use crate::labeler::DiseaseCategory;
use crate::metrics::{CiderD, DocumentFrequency, NgramCounts};

pub const DEFAULT_K: usize = 6;

/// Means closer than this are ties, broken by category order.
const TIE_RESOLUTION: f64 = 1e9;

#[derive(Debug, Error, PartialEq)]
pub enum SelectionError {
    #[error("need at least {needed} candidates, got {got}")]
    TooFewCandidates { needed: usize, got: usize },
    #[error("more than one candidate for {0}")]
    DuplicateCategory(DiseaseCategory),
    #[error("invalid selection config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    pub k: usize,
    pub ngram_max: usize,
    pub sigma: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            ngram_max: crate::metrics::cider::DEFAULT_NGRAM_MAX,
            sigma: crate::metrics::cider::DEFAULT_SIGMA,
        }
    }
}

impl SelectionConfig {
    pub fn with_k(k: usize) -> Self {
        Self { k, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SelectionError> {
        if self.k == 0 {
            return Err(SelectionError::InvalidConfig("k must be at least 1".into()));
        }
        if !(1..=4).contains(&self.ngram_max) {
            return Err(SelectionError::InvalidConfig("ngram_max must be in 1..=4".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(SelectionError::InvalidConfig("sigma must be positive".into()));
        }
        Ok(())
    }

    fn scorer(&self) -> CiderD {
        CiderD::new(self.ngram_max, self.sigma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniquenessScore {
    pub category: DiseaseCategory,
    pub mean_cider: f64,
}

/// Entry `(i, j)` is the CIDEr-D of candidate `i` against candidate `j` as
/// the sole reference; the diagonal is zero.
pub fn pairwise_cider_matrix(
    candidates: &[CandidateSentence],
    config: &SelectionConfig,
) -> Result<Vec<Vec<f64>>, SelectionError> {
    config.validate()?;
    if candidates.len() < 2 {
        return Err(SelectionError::TooFewCandidates {
            needed: 2,
            got: candidates.len(),
        });
    }
    let scorer = config.scorer();
    let counts: Vec<NgramCounts> = candidates.iter().map(|c| scorer.counts(&c.text)).collect();
    let df = DocumentFrequency::from_documents(counts.iter().map(std::iter::once));
    Ok(scorer.cross_scores(&df, &counts))
}

/// Off-diagonal row means of a pairwise matrix.
pub fn row_means(matrix: &[Vec<f64>]) -> Vec<f64> {
    let n = matrix.len();
    matrix
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let sum: f64 = row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).sum();
            sum / (n - 1) as f64
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Chosen candidates in canonical category order.
    pub selected: Vec<CandidateSentence>,
    /// Scores of every candidate; empty when no scoring was needed.
    pub scores: Vec<UniquenessScore>,
    /// Rejected candidates with their mean CIDEr-D, most unique first.
    pub discarded: Vec<(CandidateSentence, f64)>,
}

impl Selection {
    pub fn score_of(&self, category: DiseaseCategory) -> Option<f64> {
        self.scores.iter().find(|s| s.category == category).map(|s| s.mean_cider)
    }
}

/// Keeps the `k` candidates with the lowest mean CIDEr-D against the rest.
/// With `k` or fewer candidates everything is kept and nothing is scored.
pub fn select_unique(candidates: &[CandidateSentence], config: &SelectionConfig) -> Result<Selection, SelectionError> {
    config.validate()?;
    if candidates.is_empty() {
        return Err(SelectionError::TooFewCandidates { needed: 1, got: 0 });
    }
    let mut seen = [false; DiseaseCategory::COUNT];
    for c in candidates {
        if std::mem::replace(&mut seen[c.category.index()], true) {
            return Err(SelectionError::DuplicateCategory(c.category));
        }
    }
    if candidates.len() <= config.k {
        let mut selected = candidates.to_vec();
        selected.sort_by_key(|c| c.category);
        return Ok(Selection {
            selected,
            scores: Vec::new(),
            discarded: Vec::new(),
        });
    }

    let means = row_means(&pairwise_cider_matrix(candidates, config)?);
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by_key(|&i| ((means[i] * TIE_RESOLUTION).round() as i64, candidates[i].category));

    let mut selected: Vec<CandidateSentence> = order[..config.k].iter().map(|&i| candidates[i].clone()).collect();
    selected.sort_by_key(|c| c.category);
    let discarded = order[config.k..]
        .iter()
        .map(|&i| (candidates[i].clone(), means[i]))
        .collect();
    let mut scores: Vec<UniquenessScore> = candidates
        .iter()
        .zip(&means)
        .map(|(c, &mean_cider)| UniquenessScore {
            category: c.category,
            mean_cider,
        })
        .collect();
    scores.sort_by_key(|s| s.category);
    Ok(Selection {
        selected,
        scores,
        discarded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSentence {
    pub category: DiseaseCategory,
    pub text: String,
    pub mean_cider: Option<f64>,
}

/// The assembled report for one study, with per-sentence provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedReport {
    pub study_id: String,
    pub selected: Vec<ReportSentence>,
    pub discarded: Vec<ReportSentence>,
    pub failures: Vec<DiseaseCategory>,
    pub text: String,
}

/// Orders sentences canonically and joins them with single spaces.
pub fn assemble_report(study_id: &str, selected: &[(DiseaseCategory, String)]) -> Result<GeneratedReport, SelectionError> {
    if selected.is_empty() {
        return Err(SelectionError::TooFewCandidates { needed: 1, got: 0 });
    }
    let mut sentences: Vec<ReportSentence> = selected
        .iter()
        .map(|(category, text)| ReportSentence {
            category: *category,
            text: text.clone(),
            mean_cider: None,
        })
        .collect();
    sentences.sort_by_key(|s| s.category);
    let text = join_sentences(&sentences);
    Ok(GeneratedReport {
        study_id: study_id.to_string(),
        selected: sentences,
        discarded: Vec::new(),
        failures: Vec::new(),
        text,
    })
}

fn join_sentences(sentences: &[ReportSentence]) -> String {
    sentences
        .iter()
        .map(|s| s.text.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Selection and assembly for one fan-out. Returns `Ok(None)` when every
/// agent failed.
pub fn build_report(fanout: &FanoutResult, config: &SelectionConfig) -> Result<Option<GeneratedReport>, SelectionError> {
    if fanout.candidates.is_empty() {
        return Ok(None);
    }
    let selection = select_unique(&fanout.candidates, config)?;
    let pairs: Vec<(DiseaseCategory, String)> = selection
        .selected
        .iter()
        .map(|c| (c.category, c.text.clone()))
        .collect();
    let mut report = assemble_report(&fanout.study_id, &pairs)?;
    for sentence in &mut report.selected {
        sentence.mean_cider = selection.score_of(sentence.category);
    }
    report.discarded = selection
        .discarded
        .iter()
        .map(|(c, mean)| ReportSentence {
            category: c.category,
            text: c.text.clone(),
            mean_cider: Some(*mean),
        })
        .collect();
    report.failures = fanout.failed_categories();
    Ok(Some(report))
}

/// One line of the generated-reports JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedRecord {
    pub id: String,
    pub report: String,
    pub sentences: Vec<ReportSentence>,
    pub failures: Vec<DiseaseCategory>,
    /// Candidates removed by selection; kept so evaluation can rebuild
    /// reports from the full candidate pool.
    #[serde(default)]
    pub discarded: Vec<ReportSentence>,
}

impl From<&GeneratedReport> for GeneratedRecord {
    fn from(report: &GeneratedReport) -> Self {
        Self {
            id: report.study_id.clone(),
            report: report.text.clone(),
            sentences: report.selected.clone(),
            failures: report.failures.clone(),
            discarded: report.discarded.clone(),
        }
    }
}

impl GeneratedRecord {
    /// A record for a study where no candidate survived.
    pub fn empty(study_id: &str, failures: Vec<DiseaseCategory>) -> Self {
        Self {
            id: study_id.to_string(),
            report: String::new(),
            sentences: Vec::new(),
            failures,
            discarded: Vec::new(),
        }
    }

    /// Every candidate sentence, selected or not, in canonical order.
    pub fn all_candidates(&self) -> Vec<&ReportSentence> {
        let mut all: Vec<&ReportSentence> = self.sentences.iter().chain(&self.discarded).collect();
        all.sort_by_key(|s| s.category);
        all
    }
}
