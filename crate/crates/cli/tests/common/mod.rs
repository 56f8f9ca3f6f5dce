//! Synthetic corpora, template mocks and config files shared by the CLI
//! tests and the acceptance suite.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mrgagents::agents::{serve_mock_agent, MockAgentHandle};
use mrgagents::corpus::to_jsonl_line;
use mrgagents::{DiseaseCategory, MockBehavior, ObservationState, Split, Study};

/// (positive, negative) phrasing per agent-bearing category.
pub const PHRASES: [(&str, &str); 13] = [
    ("Mediastinal widening is noted.", "No mediastinal widening."),
    ("The heart is enlarged.", "No cardiomegaly."),
    ("Patchy opacity in the left lower lung.", "No focal opacity."),
    ("A small nodule projects over the right apex.", "No pulmonary nodule."),
    ("Mild interstitial edema.", "No pulmonary edema."),
    ("Focal consolidation at the right base.", "No focal consolidation."),
    ("Right lower lobe pneumonia.", "No pneumonia."),
    ("Bibasilar atelectasis.", "No atelectasis."),
    ("Small apical pneumothorax.", "No pneumothorax."),
    ("Small left pleural effusion.", "No pleural effusion."),
    ("Biapical pleural thickening.", "No pleural thickening."),
    ("Healed rib fracture.", "No acute rib fracture."),
    ("A pacemaker is in place.", "No support devices."),
];

/// Whether study `i` is positive for category index `j`.
pub fn is_positive(i: usize, j: usize) -> bool {
    (i * 7 + j * 3) % 5 == 0
}

/// Whether the reference report of study `i` mentions category index `j`.
pub fn mentioned(i: usize, j: usize) -> bool {
    (i + j) % 2 == 0
}

pub fn sentence(i: usize, j: usize) -> &'static str {
    let (positive, negative) = PHRASES[j];
    if is_positive(i, j) {
        positive
    } else {
        negative
    }
}

pub fn study_id(i: usize) -> String {
    format!("study-{i:03}")
}

pub fn synthetic_studies(n: usize, split: impl Fn(usize) -> Split) -> Vec<Study> {
    (0..n)
        .map(|i| Study {
            id: study_id(i),
            split: split(i),
            report_text: (0..13)
                .filter(|&j| mentioned(i, j))
                .map(|j| sentence(i, j))
                .collect::<Vec<_>>()
                .join(" "),
            image_refs: vec![format!("{}/frontal.png", study_id(i)), format!("{}/lateral.png", study_id(i))],
        })
        .collect()
}

/// Intended label of every reference sentence: (study split, category, state).
pub fn expected_labels(studies: &[Study]) -> Vec<(Split, DiseaseCategory, ObservationState)> {
    let mut out = Vec::new();
    for (i, study) in studies.iter().enumerate() {
        for j in (0..13).filter(|&j| mentioned(i, j)) {
            let state = if is_positive(i, j) {
                ObservationState::Positive
            } else {
                ObservationState::Negative
            };
            out.push((study.split, DiseaseCategory::AGENT_BEARING[j], state));
        }
    }
    out
}

pub fn write_corpus(dir: &Path, name: &str, studies: &[Study]) -> PathBuf {
    let path = dir.join(name);
    let body: String = studies.iter().map(|s| to_jsonl_line(s) + "\n").collect();
    std::fs::write(&path, body).unwrap();
    path
}

/// Template behavior for category index `j` answering every study.
pub fn template_for(studies: &[Study], j: usize) -> MockBehavior {
    let sentences: BTreeMap<String, String> = studies
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.clone(), sentence(i, j).to_string()))
        .collect();
    MockBehavior::Template { sentences }
}

/// 13 deterministic mocks; `overrides` replaces selected behaviors.
pub async fn start_mocks(
    studies: &[Study],
    overrides: &[(DiseaseCategory, MockBehavior)],
) -> Vec<MockAgentHandle> {
    let mut handles = Vec::new();
    for (j, category) in DiseaseCategory::AGENT_BEARING.into_iter().enumerate() {
        let behavior = overrides
            .iter()
            .find(|(c, _)| *c == category)
            .map(|(_, b)| b.clone())
            .unwrap_or_else(|| template_for(studies, j));
        handles.push(serve_mock_agent(category, behavior).await.unwrap());
    }
    handles
}

pub fn agents_section(handles: &[MockAgentHandle], timeout_ms: u64) -> String {
    handles
        .iter()
        .map(|h| {
            format!(
                "[[agents]]\ncategory = \"{}\"\nendpoint = \"{}\"\ntimeout_ms = {timeout_ms}\nbackoff_base_ms = 20\n",
                h.category(),
                h.url()
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn write_config(dir: &Path, corpus: &Path, output_dir: &str, extra: &str) -> PathBuf {
    let path = dir.join(format!("{output_dir}.toml"));
    let body = format!(
        "output_dir = \"{output_dir}\"\n\n[corpus]\npaths = [\"{}\"]\n\n{extra}",
        corpus.file_name().unwrap().to_str().unwrap()
    );
    std::fs::write(&path, body).unwrap();
    path
}

pub fn mrgagents(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrgagents"))
        .args(args)
        .env("MRGAGENTS_LOG", "error")
        .output()
        .expect("binary runs")
}

/// Runs the binary without blocking the test's async runtime.
pub async fn mrgagents_async(args: Vec<String>) -> Output {
    tokio::task::spawn_blocking(move || {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        mrgagents(&args)
    })
    .await
    .unwrap()
}

pub fn args(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}
