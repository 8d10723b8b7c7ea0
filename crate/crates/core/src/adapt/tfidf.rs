use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::tokenize;

/// English function words ignored by the extractive generator and the
/// lexical scorer.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "all", "also", "am", "an", "and", "any", "are", "as", "at", "be",
    "because", "been", "before", "being", "below", "between", "both", "but", "by", "can", "could", "did", "do",
    "does", "doing", "down", "during", "each", "either", "few", "for", "from", "further", "had", "has", "have",
    "having", "he", "her", "here", "hers", "him", "his", "how", "i", "if", "in", "into", "is", "it", "its",
    "itself", "may", "me", "might", "more", "most", "must", "my", "no", "nor", "not", "of", "off", "on", "once",
    "only", "or", "other", "our", "ours", "out", "over", "own", "same", "shall", "she", "should", "so", "some",
    "such", "than", "that", "the", "their", "them", "then", "there", "these", "they", "this", "those", "through",
    "to", "too", "under", "until", "up", "upon", "very", "was", "we", "were", "what", "when", "where", "which",
    "while", "who", "whom", "why", "will", "with", "would", "you", "your",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

/// Lowercased tokens of `text` with stopwords removed, in text order.
pub fn content_tokens(text: &str) -> Vec<String> {
    tokenize(text).into_iter().filter(|t| !is_stopword(t)).collect()
}

/// Document frequencies of content tokens over a fitted corpus.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TfIdf {
    doc_freq: BTreeMap<String, usize>,
    docs: usize,
}

impl TfIdf {
    pub fn fit<S: AsRef<str>>(texts: &[S]) -> Self {
        let mut doc_freq = BTreeMap::new();
        for text in texts {
            let distinct: BTreeSet<String> = content_tokens(text.as_ref()).into_iter().collect();
            for t in distinct {
                *doc_freq.entry(t).or_insert(0) += 1;
            }
        }
        TfIdf { doc_freq, docs: texts.len() }
    }

    pub fn documents(&self) -> usize {
        self.docs
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }

    /// Smoothed `ln((1 + n) / (1 + df)) + 1`; unseen terms get the maximum.
    pub fn idf(&self, term: &str) -> f64 {
        ((1 + self.docs) as f64 / (1 + self.doc_freq(term)) as f64).ln() + 1.0
    }

    /// `tf · idf` per distinct content token of `text`.
    pub fn weights(&self, text: &str) -> BTreeMap<String, f64> {
        let mut tf: BTreeMap<String, f64> = BTreeMap::new();
        for t in content_tokens(text) {
            *tf.entry(t).or_insert(0.0) += 1.0;
        }
        for (t, w) in tf.iter_mut() {
            *w *= self.idf(t);
        }
        tf
    }

    /// Cosine between the weight vectors of two texts; 0 when either has no
    /// content tokens.
    pub fn cosine(&self, a: &str, b: &str) -> f64 {
        let (wa, wb) = (self.weights(a), self.weights(b));
        let dot: f64 = wa.iter().filter_map(|(t, x)| wb.get(t).map(|y| x * y)).sum();
        let na = wa.values().map(|x| x * x).sum::<f64>().sqrt();
        let nb = wb.values().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    }
}
