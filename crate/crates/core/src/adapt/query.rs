use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tfidf::{content_tokens, TfIdf};
use crate::corpus::tokenize;
use crate::{Error, Result};

/// Produces search queries for which a paragraph is a relevant answer.
pub trait QueryGenerator {
    fn id(&self) -> &str;
    /// Up to `n` queries for `paragraph`; the same seed gives the same list.
    fn generate(&self, paragraph: &str, n: usize, seed: u64) -> Result<Vec<String>>;
}

/// A generated query paired with the paragraph it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedQuery {
    pub query: String,
    pub positive: String,
    pub generator: String,
}

/// Runs `generator` on one paragraph and pairs every distinct, non-empty
/// query that differs from the paragraph with it.
pub fn generate_queries(
    generator: &dyn QueryGenerator,
    paragraph: &str,
    n: usize,
    seed: u64,
) -> Result<Vec<GeneratedQuery>> {
    if paragraph.trim().is_empty() {
        return Err(Error::InvalidArgument("cannot generate queries for an empty paragraph".into()));
    }
    let mut out: Vec<GeneratedQuery> = Vec::with_capacity(n);
    for q in generator.generate(paragraph, n, seed)? {
        let q = q.trim().to_string();
        if q.is_empty() || q == paragraph.trim() || out.iter().any(|g| g.query == q) {
            continue;
        }
        out.push(GeneratedQuery { query: q, positive: paragraph.to_string(), generator: generator.id().to_string() });
        if out.len() == n {
            break;
        }
    }
    Ok(out)
}

/// Keyword queries: subsets of a paragraph's highest TF-IDF content words.
///
/// The `pool` best words are combined into every subset of `min_words` to
/// `max_words` words, ranked by total weight. A query is drawn with the seed
/// from the best `2n` subsets; smaller subsets fill in when a paragraph has
/// too few words. With fewer than `min_words` content words the only query is
/// the paragraph's rarest word.
#[derive(Debug, Clone)]
pub struct ExtractiveGenerator {
    tfidf: TfIdf,
    pub min_words: usize,
    pub max_words: usize,
    pub pool: usize,
}

impl ExtractiveGenerator {
    pub fn new(tfidf: TfIdf) -> Self {
        ExtractiveGenerator { tfidf, min_words: 3, max_words: 5, pool: 8 }
    }

    pub fn fit<S: AsRef<str>>(corpus: &[S]) -> Self {
        Self::new(TfIdf::fit(corpus))
    }

    fn rarest(&self, tokens: &[String]) -> Option<String> {
        tokens
            .iter()
            .max_by(|a, b| self.tfidf.idf(a).total_cmp(&self.tfidf.idf(b)).then_with(|| b.cmp(a)))
            .cloned()
    }
}

/// Every subset of `0..n` with `size` elements, in lexicographic order.
fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if size <= n {
        go(0, n, size, &mut Vec::with_capacity(size), &mut out);
    }
    out
}

impl QueryGenerator for ExtractiveGenerator {
    fn id(&self) -> &str {
        "extractive-tfidf"
    }

    fn generate(&self, paragraph: &str, n: usize, seed: u64) -> Result<Vec<String>> {
        let content = content_tokens(paragraph);
        let mut distinct: Vec<String> = Vec::new();
        for t in &content {
            if !distinct.contains(t) {
                distinct.push(t.clone());
            }
        }
        if distinct.len() < self.min_words {
            let all = if content.is_empty() { tokenize(paragraph) } else { content };
            return Ok(self.rarest(&all).into_iter().collect());
        }
        let weights = self.tfidf.weights(paragraph);
        let mut ranked = distinct.clone();
        ranked.sort_by(|a, b| weights[b].total_cmp(&weights[a]).then_with(|| a.cmp(b)));
        ranked.truncate(self.pool);

        let whole: Vec<String> = tokenize(paragraph);
        let mut primary = Vec::new();
        let mut fallback = Vec::new();
        for size in 1..=self.max_words.min(ranked.len()) {
            for s in subsets(ranked.len(), size) {
                let score: f64 = s.iter().map(|&i| weights[&ranked[i]]).sum();
                // Words keep their paragraph order.
                let mut words: Vec<&String> = s.iter().map(|&i| &ranked[i]).collect();
                words.sort_by_key(|w| distinct.iter().position(|d| d == *w));
                let words: Vec<String> = words.into_iter().cloned().collect();
                if words == whole {
                    continue;
                }
                let entry = (score, words.join(" "));
                if size >= self.min_words {
                    primary.push(entry);
                } else {
                    fallback.push(entry);
                }
            }
        }
        let by_score = |a: &(f64, String), b: &(f64, String)| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1));
        primary.sort_by(by_score);
        fallback.sort_by(by_score);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out: Vec<String> = if primary.len() > n {
            let window = primary.len().min(2 * n);
            let mut picks = sample(&mut rng, window, n).into_vec();
            picks.sort_unstable();
            picks.into_iter().map(|i| primary[i].1.clone()).collect()
        } else {
            primary.into_iter().map(|e| e.1).collect()
        };
        out.extend(fallback.into_iter().map(|e| e.1).take(n.saturating_sub(out.len())));
        Ok(out)
    }
}
