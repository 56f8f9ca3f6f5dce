//! Deterministic keyword labeler with a CheXbert-shaped output.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{CategoryMap, DiseaseCategory, LabeledSentence, ObservationState};
use crate::corpus::{tokenize, Sentence};

/// Built-in keyword lexicon, shipped as `data/lexicon.json`.
pub const DEFAULT_LEXICON_JSON: &str = include_str!("../../data/lexicon.json");

pub const NEGATION_CUES: &[&str] = &["no", "without", "free of", "negative for", "clear of", "resolved"];
pub const UNCERTAINTY_CUES: &[&str] = &[
    "possible",
    "possibly",
    "may",
    "might",
    "cannot exclude",
    "suspected",
    "concerning for",
];
pub const NORMALITY_CUES: &[&str] = &["normal", "unremarkable", "clear", "no acute"];

/// Tokens before a keyword searched for a negation cue.
pub const NEGATION_WINDOW: usize = 4;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read lexicon {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid lexicon: {0}")]
    Invalid(String),
}

type Phrase = Vec<String>;

/// Keyword phrases per category, pre-tokenized.
///
/// A `"No Finding"` entry, when present, replaces the default normality cues.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    keywords: CategoryMap<Vec<Phrase>>,
}

fn phrases(list: &[&str]) -> Vec<Phrase> {
    list.iter().map(|p| tokenize(p).into_inner()).collect()
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon::from_json(DEFAULT_LEXICON_JSON).expect("built-in lexicon is valid")
    }
}

impl Lexicon {
    pub fn from_json(raw: &str) -> Result<Self, LexiconError> {
        let parsed: BTreeMap<String, Vec<String>> =
            serde_json::from_str(raw).map_err(|e| LexiconError::Invalid(e.to_string()))?;
        let mut keywords = CategoryMap::filled(Vec::new());
        keywords[DiseaseCategory::NoFinding] = phrases(NORMALITY_CUES);
        for (name, entries) in parsed {
            let category: DiseaseCategory = name.parse().map_err(LexiconError::Invalid)?;
            let mut tokenized = Vec::with_capacity(entries.len());
            for entry in &entries {
                let tokens = tokenize(entry).into_inner();
                if tokens.is_empty() {
                    return Err(LexiconError::Invalid(format!("empty keyword for {category}")));
                }
                tokenized.push(tokens);
            }
            keywords[category] = tokenized;
        }
        Ok(Self { keywords })
    }

    pub fn from_path(path: &Path) -> Result<Self, LexiconError> {
        let raw = fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&raw)
    }

    pub fn keywords(&self, category: DiseaseCategory) -> &[Vec<String>] {
        &self.keywords[category]
    }

    /// Labels raw text.
    pub fn label_text(&self, text: &str) -> CategoryMap<ObservationState> {
        let tokens = tokenize(text);
        let negations = phrases(NEGATION_CUES);
        let uncertain = phrases(UNCERTAINTY_CUES).iter().any(|cue| !occurrences(&tokens, cue).is_empty());

        let mut states = CategoryMap::filled(ObservationState::Unmentioned);
        for category in DiseaseCategory::AGENT_BEARING {
            let mut state = ObservationState::Unmentioned;
            for keyword in &self.keywords[category] {
                for start in occurrences(&tokens, keyword) {
                    let found = if negated_before(&tokens, start, &negations) {
                        ObservationState::Negative
                    } else if uncertain {
                        ObservationState::Uncertain
                    } else {
                        ObservationState::Positive
                    };
                    state = stronger(state, found);
                }
            }
            states[category] = state;
        }

        let nothing_mentioned = DiseaseCategory::AGENT_BEARING
            .iter()
            .all(|&c| states[c] == ObservationState::Unmentioned);
        if nothing_mentioned
            && self.keywords[DiseaseCategory::NoFinding]
                .iter()
                .any(|cue| !occurrences(&tokens, cue).is_empty())
        {
            states[DiseaseCategory::NoFinding] = ObservationState::Positive;
        }
        states
    }

    pub fn label_sentence(&self, sentence: &Sentence) -> LabeledSentence {
        LabeledSentence::new(sentence.clone(), self.label_text(&sentence.text))
            .expect("rule-based labels satisfy exclusivity")
    }
}

/// Rule-based labeling with the built-in lexicon.
pub fn label_sentence_rule_based(text: &str) -> CategoryMap<ObservationState> {
    thread_local! {
        static LEXICON: Lexicon = Lexicon::default();
    }
    LEXICON.with(|lexicon| lexicon.label_text(text))
}

/// Negative beats uncertain beats positive.
fn stronger(a: ObservationState, b: ObservationState) -> ObservationState {
    fn rank(s: ObservationState) -> u8 {
        match s {
            ObservationState::Unmentioned => 0,
            ObservationState::Positive => 1,
            ObservationState::Uncertain => 2,
            ObservationState::Negative => 3,
        }
    }
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

fn occurrences(tokens: &[String], phrase: &[String]) -> Vec<usize> {
    if phrase.is_empty() || phrase.len() > tokens.len() {
        return Vec::new();
    }
    tokens
        .windows(phrase.len())
        .enumerate()
        .filter(|(_, w)| *w == phrase)
        .map(|(i, _)| i)
        .collect()
}

/// True when a negation cue lies entirely within the window preceding `start`.
fn negated_before(tokens: &[String], start: usize, negations: &[Phrase]) -> bool {
    let window = &tokens[start.saturating_sub(NEGATION_WINDOW)..start];
    negations.iter().any(|cue| !occurrences(window, cue).is_empty())
}
