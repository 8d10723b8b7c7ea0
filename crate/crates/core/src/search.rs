//! Exhaustive cosine-similarity search over sentence vectors.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::io::Write;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Identifies a sentence: its document and its position within it.
/// Ordered lexicographically by `(doc_id, seq)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SentenceKey {
    pub doc_id: String,
    pub seq: u32,
}

impl SentenceKey {
    pub fn new(doc_id: impl Into<String>, seq: u32) -> Self {
        SentenceKey { doc_id: doc_id.into(), seq }
    }

    /// Parses the `doc_id#seq` form used as a vector name.
    pub fn parse(name: &str) -> Result<Self> {
        let (doc, seq) = name
            .rsplit_once('#')
            .ok_or_else(|| Error::Parse(format!("sentence key {name:?} lacks '#seq'")))?;
        let seq = seq.parse().map_err(|e| Error::Parse(format!("sentence key {name:?}: {e}")))?;
        Ok(SentenceKey::new(doc, seq))
    }
}

impl fmt::Display for SentenceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.doc_id, self.seq)
    }
}

/// `QᵀP / (‖Q‖ ‖P‖)`.
pub fn cosine_similarity(q: &[f64], p: &[f64]) -> Result<f64> {
    if q.len() != p.len() {
        return Err(Error::Shape(format!("vectors of length {} and {}", q.len(), p.len())));
    }
    let (mut dot, mut nq, mut np) = (0.0, 0.0, 0.0);
    for (a, b) in q.iter().zip(p) {
        dot += a * b;
        nq += a * a;
        np += b * b;
    }
    if nq == 0.0 || np == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(dot / (nq.sqrt() * np.sqrt()))
}

pub(crate) fn unit(v: &[f64]) -> Result<Array1<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !n.is_finite() {
        return Err(Error::NonFinite("vector norm".into()));
    }
    if n == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// One scored neighbour.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hit {
    pub key: SentenceKey,
    pub score: f64,
}

/// Descending score, then ascending key.
fn rank(a: &Hit, b: &Hit) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.key.cmp(&b.key))
}

/// Unit-normalized vectors with their keys. Immutable once built.
#[derive(Debug, Clone, Default)]
pub struct VectorIndex {
    keys: Vec<SentenceKey>,
    vectors: Option<Array2<f64>>,
}

impl VectorIndex {
    pub fn build<I>(items: I) -> Result<Self>
    where
        I: IntoIterator<Item = (SentenceKey, Vec<f64>)>,
    {
        let mut keys = Vec::new();
        let mut rows = Vec::new();
        let mut dim = None;
        let mut seen = HashSet::new();
        for (key, v) in items {
            match dim {
                None => dim = Some(v.len()),
                Some(d) if d != v.len() => {
                    return Err(Error::Shape(format!("vector for {key} has length {}, index has {d}", v.len())))
                }
                _ => {}
            }
            if !seen.insert(key.clone()) {
                return Err(Error::DuplicateKey(key.to_string()));
            }
            rows.extend(unit(&v)?);
            keys.push(key);
        }
        let vectors = dim
            .map(|d| Array2::from_shape_vec((keys.len(), d), rows).map_err(|e| Error::Shape(e.to_string())))
            .transpose()?;
        Ok(VectorIndex { keys, vectors })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.vectors.as_ref().map(|v| v.ncols())
    }

    pub fn keys(&self) -> &[SentenceKey] {
        &self.keys
    }

    pub fn vector(&self, i: usize) -> Option<ArrayView1<'_, f64>> {
        self.vectors.as_ref().and_then(|v| (i < v.nrows()).then(|| v.row(i)))
    }

    /// Cosine score of `query` against every stored vector, in storage order.
    pub fn scores(&self, query: &[f64]) -> Result<Vec<f64>> {
        let Some(vectors) = &self.vectors else { return Ok(Vec::new()) };
        if query.len() != vectors.ncols() {
            return Err(Error::Shape(format!("query of length {}, index has {}", query.len(), vectors.ncols())));
        }
        let q = unit(query)?;
        Ok(vectors.rows().into_iter().map(|row| row.dot(&q)).collect())
    }

    fn ranked(&self, query: &[f64]) -> Result<Vec<Hit>> {
        let mut hits: Vec<Hit> = self
            .scores(query)?
            .into_iter()
            .zip(&self.keys)
            .map(|(score, key)| Hit { key: key.clone(), score })
            .collect();
        hits.sort_by(rank);
        Ok(hits)
    }

    /// Exact top-`k` by cosine, ties broken by key.
    pub fn query_top_k(&self, query: &[f64], k: usize) -> Result<Vec<Hit>> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let mut hits = self.ranked(query)?;
        hits.truncate(k);
        Ok(hits)
    }

    /// Every stored vector with score `≥ tau`, best first.
    pub fn query_threshold(&self, query: &[f64], tau: f64) -> Result<Vec<Hit>> {
        let mut hits = self.ranked(query)?;
        hits.retain(|h| h.score >= tau);
        Ok(hits)
    }
}

/// A rule sentence matched to a policy sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub rule: SentenceKey,
    pub policy: SentenceKey,
    pub score: f64,
    pub votes: Option<u32>,
}

/// All (rule, policy) pairs with cosine `≥ tau`, grouped by rule in input
/// order and sorted best first within each rule.
pub fn threshold_match(index: &VectorIndex, rules: &[(SentenceKey, Vec<f64>)], tau: f64) -> Result<Vec<MatchResult>> {
    if !(tau > -1.0 && tau < 1.0) {
        return Err(Error::InvalidArgument(format!("threshold {tau} outside (-1, 1)")));
    }
    let mut out = Vec::new();
    for (rule, v) in rules {
        for hit in index.query_threshold(v, tau)? {
            out.push(MatchResult { rule: rule.clone(), policy: hit.key, score: hit.score, votes: None });
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct ReportLine<'a> {
    rule_doc: &'a str,
    rule_seq: u32,
    policy_doc: &'a str,
    policy_seq: u32,
    score: f64,
}

/// JSON lines `{"rule_doc","rule_seq","policy_doc","policy_seq","score"}`.
pub fn write_match_report<W: Write>(mut w: W, matches: &[MatchResult]) -> Result<()> {
    for m in matches {
        let line = ReportLine {
            rule_doc: &m.rule.doc_id,
            rule_seq: m.rule.seq,
            policy_doc: &m.policy.doc_id,
            policy_seq: m.policy.seq,
            score: m.score,
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Plain-text table with rule text, policy text and score columns. Texts are
/// looked up through `text_of`, falling back to the key.
pub fn write_match_table<W, F>(mut w: W, matches: &[MatchResult], text_of: F, width: usize) -> Result<()>
where
    W: Write,
    F: Fn(&SentenceKey) -> Option<String>,
{
    let fit = |s: String| -> String {
        let n = s.chars().count();
        if n <= width {
            format!("{s:<width$}")
        } else {
            let cut: String = s.chars().take(width.saturating_sub(3)).collect();
            format!("{cut}...")
        }
    };
    writeln!(w, "{} | {} | Score", fit("Rule".into()), fit("Policy".into()))?;
    writeln!(w, "{}-+-{}-+-{}", "-".repeat(width), "-".repeat(width), "-".repeat(6))?;
    for m in matches {
        let rule = text_of(&m.rule).unwrap_or_else(|| m.rule.to_string());
        let policy = text_of(&m.policy).unwrap_or_else(|| m.policy.to_string());
        writeln!(w, "{} | {} | {:.4}", fit(rule), fit(policy), m.score)?;
    }
    Ok(())
}
