//! CIDEr-D: clipped TF-IDF n-gram cosine with a Gaussian length penalty.

use std::collections::BTreeMap;

use super::ngram::{DocumentFrequency, Ngram, NgramCounts};
use super::EvaluationPair;
use crate::corpus::tokenize;

pub const DEFAULT_NGRAM_MAX: usize = 4;
pub const DEFAULT_SIGMA: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiderD {
    pub ngram_max: usize,
    pub sigma: f64,
}

impl Default for CiderD {
    fn default() -> Self {
        Self {
            ngram_max: DEFAULT_NGRAM_MAX,
            sigma: DEFAULT_SIGMA,
        }
    }
}

struct TfIdf<'a> {
    weights: Vec<BTreeMap<&'a Ngram, f64>>,
    norms: Vec<f64>,
    len: usize,
}

impl CiderD {
    pub fn new(ngram_max: usize, sigma: f64) -> Self {
        assert!((1..=4).contains(&ngram_max), "ngram_max must be in 1..=4");
        assert!(sigma > 0.0, "sigma must be positive");
        Self { ngram_max, sigma }
    }

    pub fn counts(&self, text: &str) -> NgramCounts {
        NgramCounts::new(&tokenize(text), self.ngram_max)
    }

    fn weigh<'a>(&self, counts: &'a NgramCounts, df: &DocumentFrequency) -> TfIdf<'a> {
        let mut weights = Vec::with_capacity(self.ngram_max);
        let mut norms = Vec::with_capacity(self.ngram_max);
        for n in 1..=self.ngram_max {
            let order: BTreeMap<&Ngram, f64> = counts
                .order(n)
                .iter()
                .map(|(ngram, &tf)| (ngram, tf as f64 * df.idf(ngram)))
                .collect();
            norms.push(order.values().map(|w| w * w).sum::<f64>().sqrt());
            weights.push(order);
        }
        TfIdf {
            weights,
            norms,
            len: counts.token_len(),
        }
    }

    fn similarity(&self, hyp: &TfIdf<'_>, reference: &TfIdf<'_>) -> f64 {
        let delta = hyp.len as f64 - reference.len as f64;
        let penalty = (-(delta * delta) / (2.0 * self.sigma * self.sigma)).exp();
        let per_order = (0..self.ngram_max).map(|n| {
            let (h, r) = (&hyp.weights[n], &reference.weights[n]);
            let dot: f64 = h
                .iter()
                .map(|(ngram, &hw)| {
                    let rw = r.get(ngram).copied().unwrap_or(0.0);
                    hw.min(rw) * rw
                })
                .sum();
            let denom = hyp.norms[n] * reference.norms[n];
            let cosine = if denom > 0.0 { dot / denom } else { 0.0 };
            cosine * penalty
        });
        per_order.sum::<f64>() / self.ngram_max as f64
    }

    /// Score of one hypothesis against its references under `df`, in `[0, 10]`.
    pub fn score_counts(&self, df: &DocumentFrequency, hypothesis: &NgramCounts, references: &[NgramCounts]) -> f64 {
        if references.is_empty() {
            return 0.0;
        }
        let hyp = self.weigh(hypothesis, df);
        let total: f64 = references
            .iter()
            .map(|r| self.similarity(&hyp, &self.weigh(r, df)))
            .sum();
        10.0 * total / references.len() as f64
    }

    /// Score of every item against every other as its sole reference;
    /// the diagonal is zero.
    pub fn cross_scores(&self, df: &DocumentFrequency, items: &[NgramCounts]) -> Vec<Vec<f64>> {
        let weighted: Vec<TfIdf<'_>> = items.iter().map(|c| self.weigh(c, df)).collect();
        (0..weighted.len())
            .map(|i| {
                (0..weighted.len())
                    .map(|j| {
                        if i == j {
                            0.0
                        } else {
                            10.0 * self.similarity(&weighted[i], &weighted[j])
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Per-pair scores with document frequencies taken over the pairs'
    /// reference sets (one document per pair).
    pub fn pair_scores(&self, pairs: &[EvaluationPair]) -> Vec<f64> {
        let hyps: Vec<NgramCounts> = pairs.iter().map(|p| self.counts(&p.hypothesis)).collect();
        let refs: Vec<Vec<NgramCounts>> = pairs
            .iter()
            .map(|p| p.references.iter().map(|r| self.counts(r)).collect())
            .collect();
        let df = DocumentFrequency::from_documents(refs.iter().map(|r| r.iter()));
        hyps.iter()
            .zip(&refs)
            .map(|(h, r)| self.score_counts(&df, h, r))
            .collect()
    }

    pub fn corpus_score(&self, pairs: &[EvaluationPair]) -> f64 {
        super::mean(self.pair_scores(pairs).into_iter())
    }
}

/// Corpus CIDEr-D averaged over pairs.
pub fn cider(pairs: &[EvaluationPair], ngram_max: usize, sigma: f64) -> f64 {
    CiderD::new(ngram_max, sigma).corpus_score(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(h: &str, r: &str) -> EvaluationPair {
        EvaluationPair::new("s", h, r)
    }

    #[test]
    fn identity_on_disjoint_studies_scores_ten() {
        let pairs = [
            pair("the heart is mildly enlarged", "the heart is mildly enlarged"),
            pair("small left pleural effusion noted", "small left pleural effusion noted"),
        ];
        assert!((cider(&pairs, 4, 6.0) - 10.0).abs() < 1e-9);
    }

    #[test]
    fn disjoint_hypothesis_scores_zero() {
        let pairs = [pair("lungs clear", "heart enlarged"), pair("a b c d", "a b c d")];
        assert_eq!(CiderD::default().pair_scores(&pairs)[0], 0.0);
    }

    #[test]
    fn shared_ngrams_have_zero_idf() {
        let pairs = vec![pair("no acute findings today", "no acute findings today"); 3];
        assert_eq!(cider(&pairs, 4, 6.0), 0.0);
    }

    #[test]
    fn empty_hypothesis_scores_zero() {
        let pairs = [pair("", "heart enlarged"), pair("x y", "x y")];
        assert_eq!(CiderD::default().pair_scores(&pairs)[0], 0.0);
    }

    #[test]
    fn clipping_limits_repeated_ngrams() {
        let pairs = [pair("effusion effusion effusion", "effusion"), pair("a", "b")];
        let repeated = CiderD::new(1, 6.0).pair_scores(&pairs)[0];
        let pairs = [pair("effusion", "effusion"), pair("a", "b")];
        let single = CiderD::new(1, 6.0).pair_scores(&pairs)[0];
        assert!(repeated < single);
    }

    #[test]
    fn length_penalty() {
        // unigram only, so the length penalty is the only other factor
        let pairs = [pair("edema edema", "edema"), pair("z", "q")];
        let score = CiderD::new(1, 6.0).pair_scores(&pairs)[0];
        // clipped tf: min(2w, w) * w / (2w * w) = 0.5; penalty exp(-1/72)
        let expected = 10.0 * 0.5 * (-1.0f64 / 72.0).exp();
        assert!((score - expected).abs() < 1e-12);
    }
}
