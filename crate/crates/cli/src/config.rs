//! The single TOML file describing a pipeline run.

use std::collections::BTreeMap;
use std::fs;
use std::net::IpAddr;
use std::path::{Path, PathBuf};

use mrgagents::evaluation::EvaluationConfig;
use mrgagents::labeler::Lexicon;
use mrgagents::{
    AgentSpec, CorpusFormat, DiseaseCategory, Labeler, LabelerBackend, MetricParams, MockBehavior, SelectionConfig,
    SelectionMode, UncertainPolicy,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_PARALLEL: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub labeler: LabelerConfig,
    #[serde(default)]
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub selection: SelectionConfig,
    #[serde(default)]
    pub metrics: MetricParams,
    #[serde(default)]
    pub uncertain_policy: UncertainPolicy,
    #[serde(default)]
    pub mode: SelectionMode,
    /// Studies generated concurrently.
    #[serde(default = "default_parallel")]
    pub parallel: usize,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub mock_agents: MockAgentsConfig,
}

fn default_parallel() -> usize {
    DEFAULT_PARALLEL
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub paths: Vec<PathBuf>,
    #[serde(default)]
    pub format: CorpusFormat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelerConfig {
    #[serde(flatten)]
    pub backend: LabelerBackend,
    /// Keyword lexicon replacing the built-in one (rule-based only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<PathBuf>,
}

impl Default for LabelerConfig {
    fn default() -> Self {
        Self {
            backend: LabelerBackend::RuleBased,
            lexicon: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockAgentsConfig {
    #[serde(default = "default_host")]
    pub host: IpAddr,
    /// Port of the first category; the others follow in category order.
    /// 0 picks ephemeral ports.
    #[serde(default)]
    pub base_port: u16,
    #[serde(default = "default_behavior")]
    pub default: MockBehavior,
    /// Per-category overrides keyed by category name.
    #[serde(default)]
    pub behaviors: BTreeMap<DiseaseCategory, MockBehavior>,
}

fn default_host() -> IpAddr {
    IpAddr::from([127, 0, 0, 1])
}

fn default_behavior() -> MockBehavior {
    MockBehavior::DelayMs { ms: 0 }
}

impl Default for MockAgentsConfig {
    fn default() -> Self {
        Self {
            host: default_host(),
            base_port: 0,
            default: default_behavior(),
            behaviors: BTreeMap::new(),
        }
    }
}

impl MockAgentsConfig {
    pub fn behavior(&self, category: DiseaseCategory) -> MockBehavior {
        self.behaviors.get(&category).unwrap_or(&self.default).clone()
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub k: Option<usize>,
    pub mode: Option<SelectionMode>,
    pub parallel: Option<usize>,
}

impl PipelineConfig {
    /// Reads `path`; relative paths inside resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        let mut config = Self::parse(&raw).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn parse(raw: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(raw)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.corpus.paths.iter_mut().for_each(resolve);
        resolve(&mut self.output_dir);
        if let Some(lexicon) = self.labeler.lexicon.as_mut() {
            resolve(lexicon);
        }
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(k) = overrides.k {
            self.selection.k = k;
        }
        if let Some(mode) = overrides.mode {
            self.mode = mode;
        }
        if let Some(parallel) = overrides.parallel {
            self.parallel = parallel;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.corpus.paths.is_empty() {
            return Err(CliError::Input("corpus.paths is empty".into()));
        }
        for path in &self.corpus.paths {
            if !path.is_file() {
                return Err(CliError::Input(format!("corpus file not found: {}", path.display())));
            }
        }
        if let Some(lexicon) = &self.labeler.lexicon {
            if !lexicon.is_file() {
                return Err(CliError::Input(format!("lexicon file not found: {}", lexicon.display())));
            }
        }
        if self.parallel == 0 {
            return Err(CliError::Input("parallel must be at least 1".into()));
        }
        self.selection.validate().map_err(|e| CliError::Input(e.to_string()))?;
        if !(1..=4).contains(&self.metrics.cider_ngram_max) || !(self.metrics.cider_sigma > 0.0) {
            return Err(CliError::Input("metrics: cider_ngram_max must be in 1..=4 and cider_sigma positive".into()));
        }
        Ok(())
    }

    pub fn labeler(&self) -> Result<Labeler, CliError> {
        match (&self.labeler.backend, &self.labeler.lexicon) {
            (LabelerBackend::RuleBased, Some(path)) => Lexicon::from_path(path)
                .map(Labeler::with_lexicon)
                .map_err(|e| CliError::Input(e.to_string())),
            (backend, _) => Labeler::from_backend(backend).map_err(|e| CliError::Input(e.to_string())),
        }
    }

    pub fn evaluation(&self) -> EvaluationConfig {
        EvaluationConfig {
            metrics: self.metrics,
            uncertain_policy: self.uncertain_policy,
            mode: self.mode,
        }
    }
}
