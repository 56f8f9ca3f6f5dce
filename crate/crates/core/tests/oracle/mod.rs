//! From-scratch reference implementations used to check the library.
//!
//! Nothing here calls into the crate's metric or selection code; inputs are
//! plain token vectors.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

/// LCS by enumerating every subsequence of the shorter sequence.
pub fn lcs_exhaustive(a: &[String], b: &[String]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut best = 0;
    for mask in 0u32..(1 << short.len()) {
        let picked: Vec<&String> = (0..short.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| &short[i])
            .collect();
        if picked.len() > best && is_subsequence(&picked, long) {
            best = picked.len();
        }
    }
    best
}

fn is_subsequence(needle: &[&String], haystack: &[String]) -> bool {
    let mut it = haystack.iter();
    needle.iter().all(|n| it.any(|h| h == *n))
}

pub fn rouge_l_oracle(hyp: &[String], reference: &[String], beta: f64) -> f64 {
    if hyp.is_empty() || reference.is_empty() {
        return 0.0;
    }
    rouge_from_lcs(lcs_exhaustive(hyp, reference), hyp.len(), reference.len(), beta)
}

pub fn rouge_from_lcs(lcs: usize, hyp_len: usize, ref_len: usize, beta: f64) -> f64 {
    if lcs == 0 || hyp_len == 0 || ref_len == 0 {
        return 0.0;
    }
    let lcs = lcs as f64;
    let r = lcs / ref_len as f64;
    let p = lcs / hyp_len as f64;
    (1.0 + beta * beta) * r * p / (r + beta * beta * p)
}

/// Every sequence over `alphabet` of length `0..=max_len`, with the set of
/// its subsequences precomputed, so LCS of any two members is a lookup:
/// the longest subsequence of one that is also a subsequence of the other.
pub struct SubsequenceIndex {
    pub sequences: Vec<Vec<String>>,
    /// Per sequence: indices of its distinct subsequences, longest first.
    subsequences: Vec<Vec<usize>>,
    marks: Vec<u32>,
    epoch: u32,
}

impl SubsequenceIndex {
    pub fn new(alphabet: &[&str], max_len: usize) -> Self {
        let k = alphabet.len();
        let mut codes: Vec<Vec<usize>> = vec![vec![]];
        let mut frontier: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..max_len {
            frontier = frontier
                .iter()
                .flat_map(|s| {
                    (0..k).map(move |t| {
                        let mut n = s.clone();
                        n.push(t);
                        n
                    })
                })
                .collect();
            codes.extend(frontier.iter().cloned());
        }
        let position: BTreeMap<Vec<usize>, usize> = codes.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
        let subsequences = codes
            .iter()
            .map(|code| {
                let mut subs: Vec<(usize, usize)> = (0u32..(1 << code.len()))
                    .map(|mask| {
                        let picked: Vec<usize> = (0..code.len()).filter(|i| mask & (1 << i) != 0).map(|i| code[i]).collect();
                        (picked.len(), position[&picked])
                    })
                    .collect();
                subs.sort_unstable_by(|a, b| b.cmp(a));
                subs.dedup();
                subs.into_iter().map(|(_, idx)| idx).collect()
            })
            .collect();
        let sequences = codes
            .iter()
            .map(|c| c.iter().map(|&t| alphabet[t].to_string()).collect())
            .collect();
        let n = codes.len();
        Self {
            sequences,
            subsequences,
            marks: vec![0; n],
            epoch: 0,
        }
    }

    /// Marks the subsequences of sequence `r`; later `lcs_with` calls
    /// compare against it.
    pub fn fix_reference(&mut self, r: usize) {
        self.epoch += 1;
        for &s in &self.subsequences[r] {
            self.marks[s] = self.epoch;
        }
    }

    pub fn lcs_with(&self, h: usize) -> usize {
        self.subsequences[h]
            .iter()
            .find(|&&s| self.marks[s] == self.epoch)
            .map(|&s| self.sequences[s].len())
            .unwrap_or(0)
    }
}

/// n-grams keyed by their space-joined text.
fn ngram_counts(tokens: &[String], n: usize) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    if tokens.len() < n {
        return out;
    }
    for start in 0..=tokens.len() - n {
        *out.entry(tokens[start..start + n].join(" ")).or_insert(0.0) += 1.0;
    }
    out
}

/// Document frequency table: each document is a list of token sequences.
pub struct Df {
    table: BTreeMap<String, f64>,
    docs: f64,
}

impl Df {
    pub fn build(documents: &[Vec<Vec<String>>], ngram_max: usize) -> Self {
        let mut table = BTreeMap::new();
        for doc in documents {
            let mut present = BTreeSet::new();
            for seq in doc {
                for n in 1..=ngram_max {
                    present.extend(ngram_counts(seq, n).into_keys());
                }
            }
            for g in present {
                *table.entry(g).or_insert(0.0) += 1.0;
            }
        }
        Self {
            table,
            docs: documents.len() as f64,
        }
    }

    fn idf(&self, g: &str) -> f64 {
        let df = self.table.get(g).copied().unwrap_or(0.0).max(1.0);
        (self.docs / df).ln()
    }
}

/// CIDEr-D of one hypothesis against its references.
pub fn cider_d_oracle(hyp: &[String], refs: &[Vec<String>], df: &Df, ngram_max: usize, sigma: f64) -> f64 {
    let mut total = 0.0;
    for reference in refs {
        let delta = hyp.len() as f64 - reference.len() as f64;
        let penalty = (-delta * delta / (2.0 * sigma * sigma)).exp();
        let mut per_n = 0.0;
        for n in 1..=ngram_max {
            let h: BTreeMap<String, f64> = ngram_counts(hyp, n)
                .into_iter()
                .map(|(g, c)| {
                    let w = c * df.idf(&g);
                    (g, w)
                })
                .collect();
            let r: BTreeMap<String, f64> = ngram_counts(reference, n)
                .into_iter()
                .map(|(g, c)| {
                    let w = c * df.idf(&g);
                    (g, w)
                })
                .collect();
            let mut num = 0.0;
            for (g, hw) in &h {
                if let Some(rw) = r.get(g) {
                    num += hw.min(*rw) * rw;
                }
            }
            let nh = h.values().map(|x| x * x).sum::<f64>().sqrt();
            let nr = r.values().map(|x| x * x).sum::<f64>().sqrt();
            if nh > 0.0 && nr > 0.0 {
                per_n += num / (nh * nr) * penalty;
            }
        }
        total += per_n / ngram_max as f64;
    }
    if refs.is_empty() {
        0.0
    } else {
        10.0 * total / refs.len() as f64
    }
}

/// Corpus CIDEr-D over (hypothesis, references) pairs.
pub fn corpus_cider_oracle(pairs: &[(Vec<String>, Vec<Vec<String>>)], ngram_max: usize, sigma: f64) -> f64 {
    let docs: Vec<Vec<Vec<String>>> = pairs.iter().map(|(_, r)| r.clone()).collect();
    let df = Df::build(&docs, ngram_max);
    let sum: f64 = pairs
        .iter()
        .map(|(h, r)| cider_d_oracle(h, r, &df, ngram_max, sigma))
        .sum();
    sum / pairs.len() as f64
}

/// Mean CIDEr-D of each candidate against every other, idf over the
/// candidate set.
pub fn uniqueness_oracle(candidates: &[Vec<String>], ngram_max: usize, sigma: f64) -> Vec<f64> {
    let docs: Vec<Vec<Vec<String>>> = candidates.iter().map(|c| vec![c.clone()]).collect();
    let df = Df::build(&docs, ngram_max);
    let n = candidates.len();
    (0..n)
        .map(|i| {
            let sum: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| cider_d_oracle(&candidates[i], &[candidates[j].clone()], &df, ngram_max, sigma))
                .sum();
            sum / (n - 1) as f64
        })
        .collect()
}

/// Indices chosen by the redundancy filter: the `k` lowest means, ties
/// (at 1e-9) broken by `rank` (category order).
pub fn select_oracle(candidates: &[Vec<String>], ranks: &[usize], k: usize, ngram_max: usize, sigma: f64) -> BTreeSet<usize> {
    if candidates.len() <= k {
        return (0..candidates.len()).collect();
    }
    let means = uniqueness_oracle(candidates, ngram_max, sigma);
    let mut idx: Vec<usize> = (0..candidates.len()).collect();
    idx.sort_by(|&a, &b| {
        let (ka, kb) = ((means[a] * 1e9).round() as i64, (means[b] * 1e9).round() as i64);
        ka.cmp(&kb).then(ranks[a].cmp(&ranks[b]))
    });
    idx.into_iter().take(k).collect()
}

pub fn words(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}
