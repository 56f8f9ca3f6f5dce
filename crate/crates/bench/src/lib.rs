//! Seeded synthetic inputs for the benchmarks.

use mrgagents::{CandidateSentence, DiseaseCategory, EvaluationPair};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const VOCAB: &[&str] = &[
    "the", "heart", "size", "is", "normal", "enlarged", "no", "focal", "consolidation", "pleural", "effusion",
    "pneumothorax", "mild", "interstitial", "edema", "left", "right", "lower", "lobe", "opacity", "atelectasis",
    "stable", "silhouette", "mediastinal", "contours", "within", "limits", "there", "small", "bilateral",
];

fn sentence(rng: &mut StdRng, min: usize, max: usize) -> String {
    let len = rng.random_range(min..=max);
    let words: Vec<&str> = (0..len).map(|_| VOCAB[rng.random_range(0..VOCAB.len())]).collect();
    format!("{}.", words.join(" "))
}

/// `n` report pairs of 3 to 6 sentences each.
pub fn report_pairs(n: usize, seed: u64) -> Vec<EvaluationPair> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let report = |rng: &mut StdRng| {
                let sentences = rng.random_range(3..=6);
                (0..sentences).map(|_| sentence(rng, 4, 10)).collect::<Vec<_>>().join(" ")
            };
            let hypothesis = report(&mut rng);
            let reference = report(&mut rng);
            EvaluationPair::new(format!("s{i}"), hypothesis, reference)
        })
        .collect()
}

/// One candidate per agent-bearing category, the first `n` of them.
pub fn candidates(n: usize, seed: u64) -> Vec<CandidateSentence> {
    let mut rng = StdRng::seed_from_u64(seed);
    DiseaseCategory::AGENT_BEARING
        .into_iter()
        .take(n)
        .map(|c| CandidateSentence::new(c, sentence(&mut rng, 3, 12)))
        .collect()
}
