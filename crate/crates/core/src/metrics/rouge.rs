use super::EvaluationPair;
use crate::corpus::tokenize;

pub const DEFAULT_BETA: f64 = 1.2;

/// Longest common subsequence length, O(|a|·|b|) time and O(|b|) space.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            curr[j + 1] = if x == y {
                prev[j] + 1
            } else {
                curr[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// LCS F-measure of token sequences.
pub fn rouge_l_tokens(hypothesis: &[String], reference: &[String], beta: f64) -> f64 {
    if hypothesis.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let lcs = lcs_length(hypothesis, reference) as f64;
    let recall = lcs / reference.len() as f64;
    let precision = lcs / hypothesis.len() as f64;
    let b2 = beta * beta;
    if recall == 0.0 && precision == 0.0 {
        0.0
    } else {
        (1.0 + b2) * recall * precision / (recall + b2 * precision)
    }
}

/// Best score over each pair's references, averaged over pairs.
pub fn rouge_l(pairs: &[EvaluationPair], beta: f64) -> f64 {
    super::mean(pairs.iter().map(|pair| {
        let hyp = tokenize(&pair.hypothesis);
        pair.references
            .iter()
            .map(|r| rouge_l_tokens(&hyp, &tokenize(r), beta))
            .fold(0.0, f64::max)
    }))
}
