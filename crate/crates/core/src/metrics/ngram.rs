use std::collections::{BTreeMap, HashMap, HashSet};

pub type Ngram = Vec<String>;

/// n-gram counts for orders `1..=ngram_max` of one token sequence, in a
/// fixed iteration order so floating-point sums are reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramCounts {
    orders: Vec<BTreeMap<Ngram, u32>>,
    token_len: usize,
}

impl NgramCounts {
    pub fn new(tokens: &[String], ngram_max: usize) -> Self {
        let orders = (1..=ngram_max)
            .map(|n| {
                let mut counts = BTreeMap::new();
                if tokens.len() >= n {
                    for window in tokens.windows(n) {
                        *counts.entry(window.to_vec()).or_insert(0) += 1;
                    }
                }
                counts
            })
            .collect();
        Self {
            orders,
            token_len: tokens.len(),
        }
    }

    pub fn ngram_max(&self) -> usize {
        self.orders.len()
    }

    /// Counts for order `n` (1-based).
    pub fn order(&self, n: usize) -> &BTreeMap<Ngram, u32> {
        &self.orders[n - 1]
    }

    pub fn token_len(&self) -> usize {
        self.token_len
    }

    pub(crate) fn all_ngrams(&self) -> impl Iterator<Item = &Ngram> {
        self.orders.iter().flat_map(|o| o.keys())
    }
}

/// Document frequencies over a corpus; an n-gram counts once per document.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DocumentFrequency {
    df: HashMap<Ngram, usize>,
    corpus_size: usize,
}

impl DocumentFrequency {
    /// Each item is one document, made of one or more n-gram count sets
    /// (for instance every reference of one study).
    pub fn from_documents<'a, D>(documents: impl IntoIterator<Item = D>) -> Self
    where
        D: IntoIterator<Item = &'a NgramCounts>,
    {
        let mut df = HashMap::new();
        let mut corpus_size = 0;
        for document in documents {
            corpus_size += 1;
            let mut seen: HashSet<&Ngram> = HashSet::new();
            for counts in document {
                seen.extend(counts.all_ngrams());
            }
            for ngram in seen {
                *df.entry(ngram.clone()).or_insert(0) += 1;
            }
        }
        Self { df, corpus_size }
    }

    pub fn corpus_size(&self) -> usize {
        self.corpus_size
    }

    pub fn df(&self, ngram: &[String]) -> usize {
        self.df.get(ngram).copied().unwrap_or(0)
    }

    /// `ln(corpus_size / max(df, 1))`; zero for an n-gram in every document.
    pub fn idf(&self, ngram: &[String]) -> f64 {
        let n = self.corpus_size.max(1) as f64;
        (n.ln() - (self.df(ngram).max(1) as f64).ln()).max(0.0)
    }
}
