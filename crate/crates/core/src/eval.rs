//! Ensemble pseudo-labelling of (rule, policy) pairs and the two validation
//! scores.
//!
//! Score 1 is the mean of `cos(R_i, P_i) − cos(R_i, P_j)` with one random
//! `j ≠ i` per pair. Score 2 is the fraction of rules whose most similar
//! policy in the validation pool is their own.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::attention::TextEncoder;
use crate::corpus::tokenize;
use crate::neural_embed::shuffle;
use crate::search::{cosine_similarity, SentenceKey};
use crate::{Error, NamedVectors, Result};

/// Anything that maps a sentence to a fixed-width vector.
pub trait SentenceEmbedder {
    fn id(&self) -> &str;
    fn embed(&self, text: &str) -> Result<Vec<f64>>;
}

/// Deterministic stand-in model: every token gets a Gaussian vector seeded by
/// a hash of `(model id, token)` and a sentence is the sum of its tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockModel {
    pub id: String,
    pub dim: usize,
}

impl MockModel {
    pub fn new(id: impl Into<String>, dim: usize) -> Self {
        MockModel { id: id.into(), dim }
    }

    /// `n` mocks with ids `mock-0 … mock-(n-1)`.
    pub fn ensemble(n: usize, dim: usize) -> Vec<MockModel> {
        (0..n).map(|i| MockModel::new(format!("mock-{i}"), dim)).collect()
    }
}

fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for &b in *part {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl SentenceEmbedder for MockModel {
    fn id(&self) -> &str {
        &self.id
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return Err(Error::Model { model: self.id.clone(), reason: format!("no tokens in {text:?}") });
        }
        let mut v = vec![0.0; self.dim];
        for t in tokens {
            let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(&[self.id.as_bytes(), t.as_bytes()]));
            for x in v.iter_mut() {
                let g: f64 = StandardNormal.sample(&mut rng);
                *x += g;
            }
        }
        Ok(v)
    }
}

/// An attention encoder under a model id.
#[derive(Debug, Clone)]
pub struct EncoderModel {
    pub id: String,
    pub encoder: TextEncoder,
}

impl SentenceEmbedder for EncoderModel {
    fn id(&self) -> &str {
        &self.id
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        Ok(self.encoder.encode(text)?.to_vec())
    }
}

/// Mean of imported word vectors over the tokens a vectors file knows.
#[derive(Debug, Clone)]
pub struct WordVectorModel {
    pub id: String,
    vectors: NamedVectors,
    rows: HashMap<String, usize>,
}

impl WordVectorModel {
    pub fn new(id: impl Into<String>, vectors: NamedVectors) -> Result<Self> {
        let id = id.into();
        let mut rows = HashMap::with_capacity(vectors.len());
        for (i, name) in vectors.names.iter().enumerate() {
            if rows.insert(name.clone(), i).is_some() {
                return Err(Error::Model { model: id, reason: format!("word {name:?} listed twice") });
            }
        }
        Ok(WordVectorModel { id, vectors, rows })
    }

    pub fn dim(&self) -> usize {
        self.vectors.dim()
    }
}

impl SentenceEmbedder for WordVectorModel {
    fn id(&self) -> &str {
        &self.id
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; self.dim()];
        let mut n = 0usize;
        for t in tokenize(text) {
            if let Some(&i) = self.rows.get(&t) {
                for (a, x) in acc.iter_mut().zip(self.vectors.vectors.row(i)) {
                    *a += x;
                }
                n += 1;
            }
        }
        if n == 0 {
            return Err(Error::Model { model: self.id.clone(), reason: format!("no known words in {text:?}") });
        }
        Ok(acc.into_iter().map(|a| a / n as f64).collect())
    }
}

/// Vectors one model assigned to the rule and policy sentences.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelVectors {
    pub model: String,
    pub rules: Vec<Vec<f64>>,
    pub policies: Vec<Vec<f64>>,
}

impl ModelVectors {
    pub fn embed(model: &dyn SentenceEmbedder, rules: &[(SentenceKey, String)], policies: &[(SentenceKey, String)]) -> Result<Self> {
        let embed_all = |items: &[(SentenceKey, String)]| -> Result<Vec<Vec<f64>>> {
            items.iter().map(|(_, text)| model.embed(text)).collect()
        };
        let out = ModelVectors { model: model.id().to_string(), rules: embed_all(rules)?, policies: embed_all(policies)? };
        out.check_dims()?;
        Ok(out)
    }

    fn check_dims(&self) -> Result<()> {
        let mut all = self.rules.iter().chain(&self.policies);
        if let Some(first) = all.next() {
            if let Some(bad) = all.find(|v| v.len() != first.len()) {
                return Err(Error::Model {
                    model: self.model.clone(),
                    reason: format!("produced vectors of length {} and {}", first.len(), bad.len()),
                });
            }
        }
        Ok(())
    }
}

/// How many votes a pair needs to be kept out of `N` models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VoteCut {
    /// More than `√N` votes.
    #[default]
    Auto,
    /// At least `⌊√N⌋`.
    Floor,
    /// At least `⌈√N⌉`.
    Ceil,
    AtLeast(u32),
}

impl VoteCut {
    /// Minimum vote count for `n` models, clamped to `[1, n]`.
    pub fn min_votes(self, n: usize) -> u32 {
        let root = (n as f64).sqrt();
        let raw = match self {
            VoteCut::Auto => root.floor() as u32 + 1,
            VoteCut::Floor => root.floor() as u32,
            VoteCut::Ceil => root.ceil() as u32,
            VoteCut::AtLeast(m) => m,
        };
        raw.clamp(1, n.max(1) as u32)
    }
}

impl FromStr for VoteCut {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(VoteCut::Auto),
            "floor" => Ok(VoteCut::Floor),
            "ceil" => Ok(VoteCut::Ceil),
            n => n
                .parse()
                .map(VoteCut::AtLeast)
                .map_err(|_| Error::InvalidArgument(format!("vote cut {s:?} is not auto, floor, ceil or a count"))),
        }
    }
}

impl fmt::Display for VoteCut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VoteCut::Auto => f.write_str("auto"),
            VoteCut::Floor => f.write_str("floor"),
            VoteCut::Ceil => f.write_str("ceil"),
            VoteCut::AtLeast(m) => write!(f, "{m}"),
        }
    }
}

/// Per-pair tally over the ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleVote {
    pub rule: usize,
    pub policy: usize,
    pub votes: u32,
    /// One cosine per model, in model order.
    pub scores: Vec<f64>,
}

/// Tallies, for every (rule, policy) index pair, how many models score it
/// at least `tau`.
pub fn ensemble_votes(models: &[ModelVectors], tau: f64) -> Result<Vec<EnsembleVote>> {
    let first = models.first().ok_or_else(|| Error::InvalidArgument("the ensemble has no models".into()))?;
    let (nr, np) = (first.rules.len(), first.policies.len());
    for m in models {
        if m.rules.len() != nr || m.policies.len() != np {
            return Err(Error::Model { model: m.model.clone(), reason: "sentence count differs from the first model".into() });
        }
        m.check_dims()?;
    }
    let mut out = Vec::with_capacity(nr * np);
    for r in 0..nr {
        for p in 0..np {
            let scores = models
                .iter()
                .map(|m| {
                    cosine_similarity(&m.rules[r], &m.policies[p])
                        .map_err(|e| Error::Model { model: m.model.clone(), reason: e.to_string() })
                })
                .collect::<Result<Vec<f64>>>()?;
            let votes = scores.iter().filter(|&&s| s >= tau).count() as u32;
            out.push(EnsembleVote { rule: r, policy: p, votes, scores });
        }
    }
    Ok(out)
}

/// A retained (rule, policy) match.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationPair {
    pub rule: SentenceKey,
    pub rule_text: String,
    pub policy: SentenceKey,
    pub policy_text: String,
    pub votes: u32,
}

/// Keeps the pairs that at least `cut.min_votes(N)` models score `≥ tau`,
/// ordered by rule then policy input position.
pub fn ensemble_pseudo_label(
    models: &[&dyn SentenceEmbedder],
    rules: &[(SentenceKey, String)],
    policies: &[(SentenceKey, String)],
    tau: f64,
    cut: VoteCut,
) -> Result<Vec<ValidationPair>> {
    let vectors = models
        .iter()
        .map(|m| ModelVectors::embed(*m, rules, policies))
        .collect::<Result<Vec<_>>>()?;
    ensemble_from_vectors(&vectors, rules, policies, tau, cut)
}

/// [`ensemble_pseudo_label`] over vectors computed elsewhere.
pub fn ensemble_from_vectors(
    models: &[ModelVectors],
    rules: &[(SentenceKey, String)],
    policies: &[(SentenceKey, String)],
    tau: f64,
    cut: VoteCut,
) -> Result<Vec<ValidationPair>> {
    if let Some(m) = models.iter().find(|m| m.rules.len() != rules.len() || m.policies.len() != policies.len()) {
        return Err(Error::Model { model: m.model.clone(), reason: "vector count differs from sentence count".into() });
    }
    let min = cut.min_votes(models.len());
    Ok(ensemble_votes(models, tau)?
        .into_iter()
        .filter(|v| v.votes >= min)
        .map(|v| ValidationPair {
            rule: rules[v.rule].0.clone(),
            rule_text: rules[v.rule].1.clone(),
            policy: policies[v.policy].0.clone(),
            policy_text: policies[v.policy].1.clone(),
            votes: v.votes,
        })
        .collect())
}

/// Seeded shuffle, then the first `round(n · train_fraction)` pairs (at least
/// one, leaving at least one) train and the rest validate.
pub fn split_dataset<T: Clone>(pairs: &[T], train_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    let n = pairs.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("cannot split {n} pairs")));
    }
    let n_train = ((n as f64 * train_fraction).round() as usize).clamp(1, n - 1);
    let mut shuffled = pairs.to_vec();
    shuffle(&mut shuffled, &mut ChaCha8Rng::seed_from_u64(seed));
    let validation = shuffled.split_off(n_train);
    Ok((shuffled, validation))
}

fn check_aligned(rules: &[Vec<f64>], policies: &[Vec<f64>]) -> Result<usize> {
    if rules.len() != policies.len() {
        return Err(Error::Shape(format!("{} rules for {} policies", rules.len(), policies.len())));
    }
    if rules.len() < 2 {
        return Err(Error::InvalidArgument("scoring needs at least 2 pairs".into()));
    }
    Ok(rules.len())
}

/// Score 1 over aligned vectors: `rules[i]` matches `policies[i]`.
pub fn score1_vectors(rules: &[Vec<f64>], policies: &[Vec<f64>], seed: u64) -> Result<f64> {
    let n = check_aligned(rules, policies)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    for i in 0..n {
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        sum += cosine_similarity(&rules[i], &policies[i])? - cosine_similarity(&rules[i], &policies[j])?;
    }
    Ok(sum / n as f64)
}

/// Score 2 over aligned vectors. The pool is the distinct `policy_keys`;
/// equal scores go to the smaller key, and a hit means the winning key equals
/// the pair's own.
pub fn score2_vectors(rules: &[Vec<f64>], policies: &[Vec<f64>], policy_keys: &[SentenceKey]) -> Result<f64> {
    let n = check_aligned(rules, policies)?;
    if policy_keys.len() != n {
        return Err(Error::Shape(format!("{} policy keys for {n} pairs", policy_keys.len())));
    }
    let mut pool: BTreeMap<&SentenceKey, &Vec<f64>> = BTreeMap::new();
    for (k, v) in policy_keys.iter().zip(policies) {
        pool.entry(k).or_insert(v);
    }
    let mut hits = 0usize;
    for (i, r) in rules.iter().enumerate() {
        let mut best: Option<(&SentenceKey, f64)> = None;
        for (&k, v) in &pool {
            let s = cosine_similarity(r, v)?;
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((k, s));
            }
        }
        if best.map(|(k, _)| k) == Some(&policy_keys[i]) {
            hits += 1;
        }
    }
    Ok(hits as f64 / n as f64)
}

/// Embeds both sides of every pair with `model`.
pub fn embed_pairs(model: &dyn SentenceEmbedder, pairs: &[ValidationPair]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let rules = pairs.iter().map(|p| model.embed(&p.rule_text)).collect::<Result<Vec<_>>>()?;
    let policies = pairs.iter().map(|p| model.embed(&p.policy_text)).collect::<Result<Vec<_>>>()?;
    Ok((rules, policies))
}

pub fn score1(model: &dyn SentenceEmbedder, pairs: &[ValidationPair], seed: u64) -> Result<f64> {
    let (r, p) = embed_pairs(model, pairs)?;
    score1_vectors(&r, &p, seed)
}

pub fn score2(model: &dyn SentenceEmbedder, pairs: &[ValidationPair]) -> Result<f64> {
    let (r, p) = embed_pairs(model, pairs)?;
    let keys: Vec<SentenceKey> = pairs.iter().map(|p| p.policy.clone()).collect();
    score2_vectors(&r, &p, &keys)
}

/// `(new − baseline) / baseline`.
pub fn improvement_ratio(score: f64, baseline: f64) -> Result<f64> {
    if baseline == 0.0 {
        return Err(Error::InvalidArgument("improvement over a zero baseline is undefined".into()));
    }
    Ok((score - baseline) / baseline)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorePair {
    pub score1: f64,
    pub score2: f64,
}

/// Relative change of each score; absent where the baseline score is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub score1: Option<f64>,
    pub score2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub model: String,
    pub score1: f64,
    pub score2: f64,
    pub n: usize,
    pub baseline: Option<ScorePair>,
    pub improvement: Option<Improvement>,
}

impl ScoreReport {
    pub fn new(model: impl Into<String>, score1: f64, score2: f64, n: usize) -> Self {
        ScoreReport { model: model.into(), score1, score2, n, baseline: None, improvement: None }
    }

    pub fn with_baseline(mut self, baseline: ScorePair) -> Self {
        self.improvement = Some(Improvement {
            score1: improvement_ratio(self.score1, baseline.score1).ok(),
            score2: improvement_ratio(self.score2, baseline.score2).ok(),
        });
        self.baseline = Some(baseline);
        self
    }

    /// Rows for the baseline (if any), the model and the improvement.
    pub fn write_table<W: Write>(&self, mut w: W) -> Result<()> {
        let pct = |x: Option<f64>| x.map_or_else(|| "n/a".to_string(), |x| format!("{:.0}%", 100.0 * x));
        writeln!(w, "{:<24} {:>9} {:>9}", "Model", "Score 1", "Score 2")?;
        if let Some(b) = self.baseline {
            writeln!(w, "{:<24} {:>9.4} {:>9.4}", "baseline", b.score1, b.score2)?;
        }
        writeln!(w, "{:<24} {:>9.4} {:>9.4}", self.model, self.score1, self.score2)?;
        if let Some(imp) = self.improvement {
            writeln!(w, "{:<24} {:>9} {:>9}", "Improvement", pct(imp.score1), pct(imp.score2))?;
        }
        writeln!(w, "({} pairs)", self.n)?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ValidationLine {
    rule_text: String,
    policy_text: String,
    votes: u32,
}

/// JSON lines `{"rule_text","policy_text","votes"}`.
pub fn write_validation<W: Write>(mut w: W, pairs: &[ValidationPair]) -> Result<()> {
    for p in pairs {
        let line = ValidationLine { rule_text: p.rule_text.clone(), policy_text: p.policy_text.clone(), votes: p.votes };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a validation file. Rule `i` gets key `rule#i`; policies get
/// `policy#j` with one `j` per distinct policy text, in order of appearance.
pub fn read_validation<R: BufRead>(r: R) -> Result<Vec<ValidationPair>> {
    let mut policy_ids: BTreeMap<String, u32> = BTreeMap::new();
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: ValidationLine = serde_json::from_str(&line).map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))?;
        let next = policy_ids.len() as u32;
        let j = *policy_ids.entry(v.policy_text.clone()).or_insert(next);
        out.push(ValidationPair {
            rule: SentenceKey::new("rule", out.len() as u32),
            rule_text: v.rule_text,
            policy: SentenceKey::new("policy", j),
            policy_text: v.policy_text,
            votes: v.votes,
        });
    }
    Ok(out)
}
