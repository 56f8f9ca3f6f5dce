//! METEOR with exact and stem matching stages.
//!
//! Synonym and paraphrase stages are not implemented. Alignment follows the
//! usual staged scheme: each stage maximizes matches among still-unmatched
//! tokens, then minimizes the number of chunks of the combined alignment.

use std::collections::HashMap;

use rust_stemmers::{Algorithm, Stemmer};

use super::EvaluationPair;
use crate::corpus::tokenize;

pub const DEFAULT_ALPHA: f64 = 0.9;
pub const DEFAULT_BETA: f64 = 3.0;
pub const DEFAULT_GAMMA: f64 = 0.5;

/// States kept per hypothesis position while searching for the alignment
/// with the fewest chunks.
const BEAM_WIDTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Meteor {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for Meteor {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            gamma: DEFAULT_GAMMA,
        }
    }
}

/// Result of aligning one hypothesis with one reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    /// For each hypothesis token, the matched reference position.
    pub links: Vec<Option<usize>>,
    pub matches: usize,
    pub chunks: usize,
}

thread_local! {
    static STEMMER: Stemmer = Stemmer::create(Algorithm::English);
}

fn stem(word: &str) -> String {
    STEMMER.with(|s| s.stem(word).into_owned())
}

#[derive(Clone)]
struct State {
    links: Vec<Option<usize>>,
    used: Vec<bool>,
    chunks: usize,
}

fn chunk_step(links: &[Option<usize>], next: Option<usize>) -> usize {
    match next {
        None => 0,
        Some(j) => match links.last() {
            Some(&Some(prev)) if j > 0 && prev == j - 1 => 0,
            _ => 1,
        },
    }
}

/// One matching stage. `hyp_keys[i]` is `None` for tokens matched by an
/// earlier stage (their link comes from `fixed`); likewise `ref_keys`.
fn align_stage(hyp_keys: &[Option<String>], ref_keys: &[Option<String>], fixed: &[Option<usize>]) -> Vec<Option<usize>> {
    // hypothesis tokens of each key at or after position i
    let mut remaining: Vec<HashMap<&str, usize>> = vec![HashMap::new(); hyp_keys.len() + 1];
    for i in (0..hyp_keys.len()).rev() {
        remaining[i] = remaining[i + 1].clone();
        if let Some(k) = &hyp_keys[i] {
            *remaining[i].entry(k.as_str()).or_insert(0) += 1;
        }
    }
    let mut positions: HashMap<&str, Vec<usize>> = HashMap::new();
    for (j, k) in ref_keys.iter().enumerate() {
        if let Some(k) = k {
            positions.entry(k.as_str()).or_default().push(j);
        }
    }
    let mut used = vec![false; ref_keys.len()];
    for j in fixed.iter().flatten() {
        used[*j] = true;
    }

    let mut beam = vec![State {
        links: Vec::with_capacity(hyp_keys.len()),
        used,
        chunks: 0,
    }];
    for (i, key) in hyp_keys.iter().enumerate() {
        let mut next: HashMap<(Vec<bool>, Option<usize>), State> = HashMap::new();
        let mut push = |state: &State, link: Option<usize>| {
            let mut s = state.clone();
            s.chunks += chunk_step(&s.links, link);
            s.links.push(link);
            if let (Some(j), None) = (link, fixed[i]) {
                s.used[j] = true;
            }
            let signature = (s.used.clone(), link);
            match next.get(&signature) {
                Some(existing) if (existing.chunks, &existing.links) <= (s.chunks, &s.links) => {}
                _ => {
                    next.insert(signature, s);
                }
            }
        };
        for state in &beam {
            match key {
                None => push(state, fixed[i]),
                Some(k) => {
                    let free: Vec<usize> = positions
                        .get(k.as_str())
                        .map(|p| p.iter().copied().filter(|&j| !state.used[j]).collect())
                        .unwrap_or_default();
                    for &j in &free {
                        push(state, Some(j));
                    }
                    // skipping keeps the match count maximal only if later
                    // tokens with this key can still use every free position
                    if remaining[i][k.as_str()] > free.len() {
                        push(state, None);
                    }
                }
            }
        }
        let mut states: Vec<State> = next.into_values().collect();
        states.sort_by(|a, b| (a.chunks, &a.links).cmp(&(b.chunks, &b.links)));
        states.truncate(BEAM_WIDTH);
        beam = states;
    }
    beam.into_iter()
        .next()
        .map(|s| s.links)
        .unwrap_or_default()
}

fn count_chunks(links: &[Option<usize>]) -> usize {
    let mut chunks = 0;
    for i in 0..links.len() {
        chunks += chunk_step(&links[..i], links[i]);
    }
    chunks
}

/// Aligns hypothesis and reference tokens: exact matches first, then
/// stem matches among what is left.
pub fn align(hypothesis: &[String], reference: &[String]) -> Alignment {
    let none = vec![None; hypothesis.len()];
    let exact_hyp: Vec<Option<String>> = hypothesis.iter().cloned().map(Some).collect();
    let exact_ref: Vec<Option<String>> = reference.iter().cloned().map(Some).collect();
    let exact = align_stage(&exact_hyp, &exact_ref, &none);

    let mut ref_matched = vec![false; reference.len()];
    for j in exact.iter().flatten() {
        ref_matched[*j] = true;
    }
    let stem_hyp: Vec<Option<String>> = hypothesis
        .iter()
        .zip(&exact)
        .map(|(t, link)| link.is_none().then(|| stem(t)))
        .collect();
    let stem_ref: Vec<Option<String>> = reference
        .iter()
        .zip(&ref_matched)
        .map(|(t, &m)| (!m).then(|| stem(t)))
        .collect();
    let links = align_stage(&stem_hyp, &stem_ref, &exact);

    Alignment {
        matches: links.iter().flatten().count(),
        chunks: count_chunks(&links),
        links,
    }
}

impl Meteor {
    pub fn score_tokens(&self, hypothesis: &[String], reference: &[String]) -> f64 {
        if hypothesis.is_empty() || reference.is_empty() {
            return 0.0;
        }
        let alignment = align(hypothesis, reference);
        if alignment.matches == 0 {
            return 0.0;
        }
        let m = alignment.matches as f64;
        let precision = m / hypothesis.len() as f64;
        let recall = m / reference.len() as f64;
        let fmean = precision * recall / (self.alpha * precision + (1.0 - self.alpha) * recall);
        let penalty = self.gamma * (alignment.chunks as f64 / m).powf(self.beta);
        fmean * (1.0 - penalty)
    }

    pub fn score(&self, pairs: &[EvaluationPair]) -> f64 {
        super::mean(pairs.iter().map(|pair| {
            let hyp = tokenize(&pair.hypothesis);
            pair.references
                .iter()
                .map(|r| self.score_tokens(&hyp, &tokenize(r)))
                .fold(0.0, f64::max)
        }))
    }
}

pub fn meteor(pairs: &[EvaluationPair], alpha: f64, beta: f64, gamma: f64) -> f64 {
    Meteor { alpha, beta, gamma }.score(pairs)
}
