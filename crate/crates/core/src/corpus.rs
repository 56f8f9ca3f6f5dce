//! Report corpora: JSONL ingestion, sentence splitting and tokenization.
//!
//! Everything downstream (labeling, curation, the n-gram metrics) sees text
//! only through [`split_sentences`] and [`tokenize`], so both are pure and
//! deterministic.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::ops::Deref;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dataset split a study belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// One image/report pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Study {
    pub id: String,
    pub split: Split,
    #[serde(rename = "report")]
    pub report_text: String,
    #[serde(rename = "images")]
    pub image_refs: Vec<String>,
}

impl Study {
    /// Splits the report into indexed sentences.
    pub fn sentences(&self) -> Vec<Sentence> {
        split_sentences(&self.report_text)
            .into_iter()
            .enumerate()
            .map(|(index, text)| Sentence {
                study_id: self.id.clone(),
                index,
                text,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sentence {
    pub study_id: String,
    pub index: usize,
    pub text: String,
}

impl Sentence {
    pub fn new(study_id: impl Into<String>, index: usize, text: impl Into<String>) -> Self {
        Self {
            study_id: study_id.into(),
            index,
            text: text.into(),
        }
    }
}

/// Lowercase tokens produced by [`tokenize`]. Never contains an empty token.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

impl Deref for TokenSequence {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

/// Supported corpus encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    #[default]
    Jsonl,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed study record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate study id {id:?}")]
    DuplicateId { id: String, line: usize },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StudyRecord {
    id: String,
    split: Split,
    report: String,
    images: Vec<String>,
}

/// Loads every study in `path`, preserving file order.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<Study>, CorpusError> {
    let raw = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    match format {
        CorpusFormat::Jsonl => parse_jsonl(&raw),
    }
}

/// Parses JSONL corpus text. Whitespace-only lines are skipped.
pub fn parse_jsonl(raw: &str) -> Result<Vec<Study>, CorpusError> {
    let mut seen = HashSet::new();
    let mut studies = Vec::new();
    for (offset, line) in raw.lines().enumerate() {
        let line_no = offset + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: StudyRecord =
            serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        if record.id.is_empty() {
            return Err(CorpusError::Malformed {
                line: line_no,
                message: "empty study id".into(),
            });
        }
        if record.report.trim().is_empty() {
            return Err(CorpusError::Malformed {
                line: line_no,
                message: format!("study {:?} has an empty report", record.id),
            });
        }
        if !seen.insert(record.id.clone()) {
            return Err(CorpusError::DuplicateId {
                id: record.id,
                line: line_no,
            });
        }
        studies.push(Study {
            id: record.id,
            split: record.split,
            report_text: record.report,
            image_refs: record.images,
        });
    }
    Ok(studies)
}

/// Serializes one study as a corpus line (no trailing newline).
pub fn to_jsonl_line(study: &Study) -> String {
    serde_json::to_string(study).expect("study serialization is infallible")
}

const ABBREVIATIONS: &[&str] = &["dr.", "mr.", "mrs.", "ms.", "st.", "e.g.", "i.e.", "vs.", "fig."];

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Returns true when the terminator run ending at byte `end` (exclusive)
/// closes an abbreviation and must not end the sentence.
fn ends_with_abbreviation(text: &str, end: usize) -> bool {
    let head = &text[..end];
    let word_start = head
        .rfind(char::is_whitespace)
        .map(|i| i + head[i..].chars().next().map_or(1, char::len_utf8))
        .unwrap_or(0);
    let word = head[word_start..]
        .trim_start_matches(|c: char| matches!(c, '(' | '[' | '"' | '\''))
        .to_lowercase();
    if ABBREVIATIONS.contains(&word.as_str()) {
        return true;
    }
    if word == "no." {
        let next = text[end..].trim_start().chars().next();
        return next.is_some_and(|c| c.is_ascii_digit());
    }
    false
}

/// Splits a report into trimmed sentences, keeping each terminator.
///
/// A run of `.`, `!` or `?` ends a sentence when followed by whitespace or
/// end of text, unless the run closes one of a small closed set of
/// abbreviations (`Dr.`, `e.g.`, `No.` before a digit, ...).
pub fn split_sentences(report_text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut chars = report_text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if !is_terminator(c) {
            continue;
        }
        let end = i + c.len_utf8();
        let boundary = match chars.peek() {
            None => true,
            Some(&(_, next)) => next.is_whitespace(),
        };
        if boundary && !ends_with_abbreviation(report_text, end) {
            push_fragment(&mut sentences, &report_text[start..end]);
            start = end;
        }
    }
    push_fragment(&mut sentences, &report_text[start..]);
    sentences
}

fn push_fragment(out: &mut Vec<String>, fragment: &str) {
    let trimmed = fragment.trim();
    if !trimmed.is_empty() {
        out.push(trimmed.to_string());
    }
}

fn is_stripped_punctuation(c: char) -> bool {
    matches!(c, '.' | ',' | ';' | ':' | '!' | '?' | '(' | ')' | '"' | '\'')
}

/// Lowercases, maps `. , ; : ! ? ( ) " '` to spaces and splits on whitespace.
/// Hyphens stay inside tokens.
pub fn tokenize(text: &str) -> TokenSequence {
    let cleaned: String = text
        .to_lowercase()
        .chars()
        .map(|c| if is_stripped_punctuation(c) { ' ' } else { c })
        .collect();
    TokenSequence(cleaned.split_whitespace().map(str::to_owned).collect())
}
