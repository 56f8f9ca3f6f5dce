//! Per-disease training subsets and sentence distribution statistics.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Split, Study};
use crate::labeler::{CategoryMap, DiseaseCategory, LabeledSentence, ObservationState};

#[derive(Debug, Error)]
pub enum CurationError {
    #[error("labeled sentence refers to unknown study {0:?}")]
    OrphanStudy(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CurationOptions {
    /// Also keep uncertain mentions. Off by default: subsets hold only
    /// positive and negative findings.
    pub include_uncertain: bool,
}

impl CurationOptions {
    fn keeps(&self, state: ObservationState) -> bool {
        state.is_definite() || (self.include_uncertain && state == ObservationState::Uncertain)
    }
}

/// One training example for a category's agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubsetEntry {
    #[serde(rename = "id")]
    pub study_id: String,
    #[serde(rename = "images")]
    pub image_refs: Vec<String>,
    #[serde(skip)]
    pub category: DiseaseCategory,
    #[serde(rename = "target")]
    pub sentence_text: String,
    pub state: ObservationState,
}

/// Subsets for the 13 agent-bearing categories. `NoFinding` never has one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subsets(CategoryMap<Vec<SubsetEntry>>);

impl Subsets {
    pub fn get(&self, category: DiseaseCategory) -> &[SubsetEntry] {
        &self.0[category]
    }

    pub fn iter(&self) -> impl Iterator<Item = (DiseaseCategory, &[SubsetEntry])> {
        DiseaseCategory::AGENT_BEARING
            .into_iter()
            .map(|c| (c, self.0[c].as_slice()))
    }

    pub fn total_entries(&self) -> usize {
        self.iter().map(|(_, e)| e.len()).sum()
    }

    /// Writes `subset_<slug>.jsonl` for every agent-bearing category,
    /// including empty ones. Returns the written paths.
    pub fn write_jsonl(&self, dir: &Path) -> Result<Vec<PathBuf>, CurationError> {
        fs::create_dir_all(dir).map_err(|source| CurationError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut paths = Vec::new();
        for (category, entries) in self.iter() {
            let path = dir.join(subset_file_name(category));
            let io_err = |source| CurationError::Io {
                path: path.clone(),
                source,
            };
            let mut out = BufWriter::new(fs::File::create(&path).map_err(io_err)?);
            for entry in entries {
                let line = serde_json::to_string(entry).expect("subset entries serialize");
                writeln!(out, "{line}").map_err(io_err)?;
            }
            out.flush().map_err(io_err)?;
            paths.push(path);
        }
        Ok(paths)
    }
}

pub fn subset_file_name(category: DiseaseCategory) -> String {
    format!("subset_{}.jsonl", category.slug())
}

fn index_studies(studies: &[Study]) -> HashMap<&str, &Study> {
    studies.iter().map(|s| (s.id.as_str(), s)).collect()
}

/// Builds one subset per agent-bearing category.
///
/// A sentence lands in every subset whose category it marks positive or
/// negative, in input order.
pub fn build_subsets(studies: &[Study], labeled: &[LabeledSentence]) -> Result<Subsets, CurationError> {
    build_subsets_with(studies, labeled, CurationOptions::default())
}

pub fn build_subsets_with(
    studies: &[Study],
    labeled: &[LabeledSentence],
    options: CurationOptions,
) -> Result<Subsets, CurationError> {
    let by_id = index_studies(studies);
    let mut subsets = CategoryMap::filled(Vec::new());
    for item in labeled {
        let study = by_id
            .get(item.sentence.study_id.as_str())
            .ok_or_else(|| CurationError::OrphanStudy(item.sentence.study_id.clone()))?;
        for category in DiseaseCategory::AGENT_BEARING {
            let state = item.state(category);
            if options.keeps(state) {
                subsets[category].push(SubsetEntry {
                    study_id: study.id.clone(),
                    image_refs: study.image_refs.clone(),
                    category,
                    sentence_text: item.sentence.text.clone(),
                    state,
                });
            }
        }
    }
    Ok(Subsets(subsets))
}

/// Sentence counts per (category, split).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionTable {
    counts: CategoryMap<[u64; 3]>,
}

impl DistributionTable {
    pub fn count(&self, category: DiseaseCategory, split: Split) -> u64 {
        self.counts[category][split.index()]
    }

    pub fn category_total(&self, category: DiseaseCategory) -> u64 {
        self.counts[category].iter().sum()
    }

    pub fn split_total(&self, split: Split) -> u64 {
        DiseaseCategory::ALL.iter().map(|&c| self.count(c, split)).sum()
    }
}

#[derive(Serialize)]
struct SplitCounts {
    train: u64,
    validation: u64,
    test: u64,
}

impl Serialize for DistributionTable {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_map(self.counts.iter().map(|(c, counts)| {
            (
                c.name(),
                SplitCounts {
                    train: counts[0],
                    validation: counts[1],
                    test: counts[2],
                },
            )
        }))
    }
}

impl fmt::Display for DistributionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<28}{:>12}{:>12}{:>12}", "category", "train", "validation", "test")?;
        for category in DiseaseCategory::ALL {
            writeln!(
                f,
                "{:<28}{:>12}{:>12}{:>12}",
                category.name(),
                self.count(category, Split::Train),
                self.count(category, Split::Validation),
                self.count(category, Split::Test)
            )?;
        }
        Ok(())
    }
}

/// Counts positive and negative mentions per category and split, including
/// `NoFinding`.
pub fn distribution_stats(labeled: &[LabeledSentence], studies: &[Study]) -> Result<DistributionTable, CurationError> {
    distribution_stats_with(labeled, studies, CurationOptions::default())
}

pub fn distribution_stats_with(
    labeled: &[LabeledSentence],
    studies: &[Study],
    options: CurationOptions,
) -> Result<DistributionTable, CurationError> {
    let by_id = index_studies(studies);
    let mut counts = CategoryMap::filled([0u64; 3]);
    for item in labeled {
        let study = by_id
            .get(item.sentence.study_id.as_str())
            .ok_or_else(|| CurationError::OrphanStudy(item.sentence.study_id.clone()))?;
        for category in DiseaseCategory::ALL {
            if options.keeps(item.state(category)) {
                counts[category][study.split.index()] += 1;
            }
        }
    }
    Ok(DistributionTable { counts })
}
