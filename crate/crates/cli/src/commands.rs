use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use futures::stream::{self, StreamExt};
use mrgagents::agents::{serve_mock_agent_on, MockAgentHandle};
use mrgagents::curation::CurationError;
use mrgagents::evaluation::evaluate_generated;
use mrgagents::selection::build_report;
use mrgagents::{
    build_subsets, distribution_stats, load_corpus, register_agents, DiseaseCategory, DistributionTable,
    EvaluationReport, GeneratedRecord, Split, Study,
};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::CliError;

pub const SUBSET_DIR: &str = "subsets";
pub const DISTRIBUTION_FILE: &str = "distribution.json";
pub const GENERATED_FILE: &str = "generated.jsonl";
pub const GENERATE_META_FILE: &str = "generate.meta.json";
pub const EVALUATION_FILE: &str = "evaluation.json";

/// Loads and concatenates every corpus file; ids must be unique across files.
pub fn load_studies(paths: &[PathBuf], config: &PipelineConfig) -> Result<Vec<Study>, CliError> {
    let mut studies = Vec::new();
    let mut seen = HashSet::new();
    for path in paths {
        let loaded = load_corpus(path, config.corpus.format)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        for study in loaded {
            if !seen.insert(study.id.clone()) {
                return Err(CliError::Input(format!(
                    "{}: study id {:?} already loaded",
                    path.display(),
                    study.id
                )));
            }
            studies.push(study);
        }
    }
    Ok(studies)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("outputs serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub struct CurateOutcome {
    pub table: DistributionTable,
    pub subset_files: Vec<PathBuf>,
    pub sentences: usize,
}

pub async fn curate(config: &PipelineConfig, stats_only: bool) -> Result<CurateOutcome, CliError> {
    let studies = load_studies(&config.corpus.paths, config)?;
    let labeler = config.labeler()?;
    let sentences: Vec<_> = studies.iter().flat_map(Study::sentences).collect();
    let labeled = labeler.label_batch(&sentences).await?;
    let curation_err = |e: CurationError| CliError::Contract(e.to_string());
    let table = distribution_stats(&labeled, &studies).map_err(curation_err)?;
    create_dir(&config.output_dir)?;
    write_json(&config.output_dir.join(DISTRIBUTION_FILE), &table)?;
    let subset_files = if stats_only {
        Vec::new()
    } else {
        let subsets = build_subsets(&studies, &labeled).map_err(curation_err)?;
        subsets
            .write_jsonl(&config.output_dir.join(SUBSET_DIR))
            .map_err(|e| CliError::Io(e.to_string()))?
    };
    Ok(CurateOutcome {
        table,
        subset_files,
        sentences: sentences.len(),
    })
}

#[derive(Debug, Serialize)]
struct AgentSummary {
    category: DiseaseCategory,
    timeout_ms: u64,
    max_retries: u32,
    backoff_base_ms: u64,
}

/// Effective settings of a generate run. Endpoints are left out so runs
/// against relocated agents produce identical files.
#[derive(Debug, Serialize)]
struct GenerateMeta<'a> {
    selection: &'a mrgagents::SelectionConfig,
    parallel: usize,
    agents: Vec<AgentSummary>,
    studies: usize,
    studies_without_candidates: usize,
    skipped: Vec<String>,
}

pub struct GenerateOutcome {
    pub path: PathBuf,
    pub reports: usize,
    pub without_candidates: usize,
}

pub async fn generate(config: &PipelineConfig) -> Result<GenerateOutcome, CliError> {
    let studies = load_studies(&config.corpus.paths, config)?;
    let test: Vec<&Study> = studies.iter().filter(|s| s.split == Split::Test).collect();
    if test.is_empty() {
        return Err(CliError::Input("corpus has no test-split studies".into()));
    }
    let registry = register_agents(config.agents.clone()).map_err(|e| CliError::Input(format!("agents: {e}")))?;
    create_dir(&config.output_dir)?;
    let path = config.output_dir.join(GENERATED_FILE);
    let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    let mut out = BufWriter::new(file);

    let mut results = stream::iter(test.iter().copied())
        .map(|study| {
            let registry = &registry;
            async move { (study, registry.generate_candidates(study).await) }
        })
        .buffered(config.parallel);
    let mut written = 0;
    let mut without_candidates = 0;
    let mut skipped = Vec::new();
    while let Some((study, result)) = results.next().await {
        let fanout = match result {
            Ok(fanout) => fanout,
            Err(e) => {
                tracing::warn!(study = %study.id, error = %e, "study skipped");
                skipped.push(study.id.clone());
                continue;
            }
        };
        for failure in &fanout.failures {
            tracing::warn!(study = %study.id, category = %failure.category, error = %failure.error, "agent failed");
        }
        let record = match build_report(&fanout, &config.selection).map_err(|e| CliError::Contract(e.to_string()))? {
            Some(report) => GeneratedRecord::from(&report),
            None => {
                without_candidates += 1;
                GeneratedRecord::empty(&study.id, fanout.failed_categories())
            }
        };
        let line = serde_json::to_string(&record).expect("records serialize");
        writeln!(out, "{line}").map_err(|e| CliError::io(&path, e))?;
        written += 1;
    }
    out.flush().map_err(|e| CliError::io(&path, e))?;

    let meta = GenerateMeta {
        selection: &config.selection,
        parallel: config.parallel,
        agents: registry
            .agents()
            .iter()
            .map(|a| AgentSummary {
                category: a.category,
                timeout_ms: a.timeout_ms,
                max_retries: a.max_retries,
                backoff_base_ms: a.backoff_base_ms,
            })
            .collect(),
        studies: test.len(),
        studies_without_candidates: without_candidates,
        skipped,
    };
    write_json(&config.output_dir.join(GENERATE_META_FILE), &meta)?;
    if written > 0 && without_candidates == written {
        return Err(CliError::Remote(format!(
            "every agent failed for all {written} studies"
        )));
    }
    Ok(GenerateOutcome {
        path,
        reports: written,
        without_candidates,
    })
}

pub fn read_generated(path: &Path) -> Result<Vec<GeneratedRecord>, CliError> {
    let raw = fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    raw.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line)
                .map_err(|e| CliError::Input(format!("{}:{}: malformed generated record: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub async fn evaluate(
    config: &PipelineConfig,
    generated: &Path,
    references: &[PathBuf],
) -> Result<EvaluationReport, CliError> {
    let records = read_generated(generated)?;
    let references = load_studies(references, config)?;
    let labeler = config.labeler()?;
    let report = evaluate_generated(&records, &references, &labeler, &config.evaluation()).await?;
    create_dir(&config.output_dir)?;
    write_json(&config.output_dir.join(EVALUATION_FILE), &report)?;
    Ok(report)
}

/// Starts one mock per agent-bearing category as configured.
pub async fn start_mock_agents(config: &PipelineConfig) -> Result<Vec<MockAgentHandle>, CliError> {
    let mocks = &config.mock_agents;
    let mut handles = Vec::new();
    for (i, category) in DiseaseCategory::AGENT_BEARING.into_iter().enumerate() {
        let port = if mocks.base_port == 0 {
            0
        } else {
            mocks
                .base_port
                .checked_add(i as u16)
                .ok_or_else(|| CliError::Input("mock_agents.base_port too high".into()))?
        };
        let handle = serve_mock_agent_on(SocketAddr::new(mocks.host, port), category, mocks.behavior(category))
            .await
            .map_err(|e| CliError::Input(e.to_string()))?;
        handles.push(handle);
    }
    Ok(handles)
}

/// `[[agents]]` entries pointing at running mocks.
pub fn agents_toml(handles: &[MockAgentHandle]) -> String {
    handles
        .iter()
        .map(|h| format!("[[agents]]\ncategory = \"{}\"\nendpoint = \"{}\"\n", h.category(), h.url()))
        .collect::<Vec<_>>()
        .join("\n")
}
