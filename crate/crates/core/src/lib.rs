//! Multi-agent radiology report generation pipeline.
//!
//! Reports are split into sentences and labeled over 14 observation
//! categories ([`corpus`], [`labeler`]); labeled sentences become per-disease
//! training subsets ([`curation`]). At inference, 13 category agents are
//! queried concurrently for each study ([`agents`]), the most mutually
//! distinct candidates are kept ([`selection`]) and the assembled reports
//! are scored with NLG and clinical-efficacy metrics ([`metrics`],
//! [`evaluation`]).

pub mod agents;
pub mod corpus;
pub mod curation;
pub mod evaluation;
pub mod labeler;
pub mod metrics;
pub mod retry;
pub mod selection;

pub use agents::{register_agents, AgentRegistry, AgentSpec, CandidateSentence, FanoutResult, MockBehavior};
pub use corpus::{load_corpus, split_sentences, tokenize, CorpusFormat, Sentence, Split, Study, TokenSequence};
pub use curation::{build_subsets, distribution_stats, DistributionTable, SubsetEntry, Subsets};
pub use evaluation::{EvaluationConfig, EvaluationReport, MetricParams, SelectionMode};
pub use labeler::{
    report_label_vector, CategoryMap, DiseaseCategory, LabeledSentence, Labeler, LabelerBackend, ObservationState,
    UncertainPolicy,
};
pub use metrics::EvaluationPair;
pub use selection::{assemble_report, select_unique, GeneratedRecord, GeneratedReport, SelectionConfig};
