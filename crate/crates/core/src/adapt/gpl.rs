use std::io::{BufRead, Write};

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::query::{generate_queries, GeneratedQuery, QueryGenerator};
use super::tfidf::TfIdf;
use super::Adam;
use crate::attention::{EncoderParams, Tape, TextEncoder, Upstream};
use crate::corpus::TokenId;
use crate::neural_embed::{shuffle, EpochLoss};
use crate::search::{Hit, SentenceKey, VectorIndex};
use crate::seed::mix_seed;
use crate::{Error, Result};

/// A keyed paragraph of the adaptation corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Passage {
    pub key: SentenceKey,
    pub text: String,
}

/// Relevance of a passage to a query; higher is more relevant.
pub trait CrossScorer {
    fn score(&self, query: &str, passage: &str) -> Result<f64>;
}

/// Cosine under a frozen encoder.
#[derive(Debug, Clone)]
pub struct EncoderScorer {
    pub encoder: TextEncoder,
}

impl CrossScorer for EncoderScorer {
    fn score(&self, query: &str, passage: &str) -> Result<f64> {
        let q = self.encoder.encode(query)?;
        let p = self.encoder.encode(passage)?;
        Ok(q.values.dot(&p.values))
    }
}

/// Cosine between TF-IDF bag-of-words vectors.
#[derive(Debug, Clone)]
pub struct LexicalScorer {
    pub tfidf: TfIdf,
}

impl CrossScorer for LexicalScorer {
    fn score(&self, query: &str, passage: &str) -> Result<f64> {
        Ok(self.tfidf.cosine(query, passage))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabeledTriplet {
    pub query: String,
    pub positive: String,
    pub negative: String,
    pub margin: f64,
}

/// Triplet with texts replaced by token ids.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletIds {
    pub query: Vec<TokenId>,
    pub positive: Vec<TokenId>,
    pub negative: Vec<TokenId>,
    pub margin: f64,
}

/// The `m` passages other than `positive` closest to `query`, best first,
/// ties broken by key.
pub fn mine_negatives(index: &VectorIndex, query: &[f64], positive: &SentenceKey, m: usize) -> Result<Vec<Hit>> {
    let available = index.len() - usize::from(index.keys().contains(positive));
    if m > available {
        return Err(Error::InvalidArgument(format!("{m} negatives requested, {available} passages available")));
    }
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut hits = index.query_top_k(query, m + 1)?;
    hits.retain(|h| &h.key != positive);
    hits.truncate(m);
    Ok(hits)
}

/// One triplet per negative with `margin = score(Q, P⁺) − score(Q, P⁻)`.
pub fn pseudo_label(
    scorer: &dyn CrossScorer,
    query: &str,
    positive: &str,
    negatives: &[&str],
) -> Result<Vec<PseudoLabeledTriplet>> {
    let pos = scorer.score(query, positive)?;
    negatives
        .iter()
        .map(|neg| {
            let margin = pos - scorer.score(query, neg)?;
            if !margin.is_finite() {
                return Err(Error::NonFinite(format!("margin for query {query:?}")));
            }
            Ok(PseudoLabeledTriplet {
                query: query.to_string(),
                positive: positive.to_string(),
                negative: neg.to_string(),
                margin,
            })
        })
        .collect()
}

/// Token ids of every triplet text under `encoder`.
pub fn encode_triplets(encoder: &TextEncoder, triplets: &[PseudoLabeledTriplet]) -> Result<Vec<TripletIds>> {
    let ids = |text: &str| -> Result<Vec<TokenId>> {
        let ids = encoder.token_ids(text);
        if ids.is_empty() {
            return Err(Error::InvalidArgument(format!("no tokens in {text:?}")));
        }
        Ok(ids)
    };
    triplets
        .iter()
        .map(|t| {
            Ok(TripletIds { query: ids(&t.query)?, positive: ids(&t.positive)?, negative: ids(&t.negative)?, margin: t.margin })
        })
        .collect()
}

/// Mean of `(margin − (cos(Q, P⁺) − cos(Q, P⁻)))²` over `batch`, with its
/// parameter gradient.
pub fn margin_mse_loss(params: &EncoderParams, batch: &[TripletIds]) -> Result<(f64, EncoderParams)> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty triplet batch".into()));
    }
    let mut tape = Tape::new();
    let mut grads = params.zeros_like();
    let n = batch.len() as f64;
    let mut loss = 0.0;
    for t in batch {
        let (q, qi) = tape.record(params, &t.query)?;
        let (p, pi) = tape.record(params, &t.positive)?;
        let (m, mi) = tape.record(params, &t.negative)?;
        let predicted = q.values.dot(&p.values) - q.values.dot(&m.values);
        let err = t.margin - predicted;
        loss += err * err;
        let d_pred = -2.0 * err / n;
        if d_pred == 0.0 {
            continue;
        }
        let dq: Array1<f64> = (&p.values - &m.values) * d_pred;
        let dp = &q.values * d_pred;
        let dm = &q.values * -d_pred;
        tape.backward(params, qi, Upstream::Sentence(&dq), &mut grads)?;
        tape.backward(params, pi, Upstream::Sentence(&dp), &mut grads)?;
        tape.backward(params, mi, Upstream::Sentence(&dm), &mut grads)?;
    }
    Ok((loss / n, grads))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GplConfig {
    pub n_queries: usize,
    /// Negatives mined per query, `M`.
    pub m_negatives: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for GplConfig {
    fn default() -> Self {
        GplConfig { n_queries: 3, m_negatives: 4, epochs: 30, batch_size: 16, lr: 2e-3, seed: 0 }
    }
}

/// Margin-MSE training over shuffled minibatches with Adam.
pub fn gpl_train(
    params: &EncoderParams,
    triplets: &[TripletIds],
    config: &GplConfig,
) -> Result<(EncoderParams, Vec<EpochLoss>)> {
    if triplets.is_empty() {
        return Err(Error::InvalidArgument("no triplets to train on".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    let mut params = params.clone();
    let mut opt = Adam::new(&params, config.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..triplets.len()).collect();
    let mut log = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        shuffle(&mut order, &mut rng);
        let mut sum = 0.0;
        let mut steps = 0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<TripletIds> = chunk.iter().map(|&i| triplets[i].clone()).collect();
            let (loss, grads) = margin_mse_loss(&params, &batch)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("margin loss at epoch {epoch}, batch {b}")));
            }
            sum += loss;
            steps += 1;
            opt.step(&mut params, &grads);
        }
        log.push(EpochLoss { epoch, mean_loss: sum / steps as f64 });
    }
    Ok((params, log))
}

/// Everything [`gpl_pipeline`] produced, for inspection.
#[derive(Debug, Clone)]
pub struct GplOutput {
    pub params: EncoderParams,
    pub queries: Vec<GeneratedQuery>,
    pub triplets: Vec<PseudoLabeledTriplet>,
    pub losses: Vec<EpochLoss>,
}

/// Query generation, negative mining with the initial encoder, pseudo-labels
/// from `scorer`, then margin-MSE training of `encoder`.
pub fn gpl_pipeline(
    corpus: &[Passage],
    generator: &dyn QueryGenerator,
    scorer: &dyn CrossScorer,
    encoder: &TextEncoder,
    config: &GplConfig,
) -> Result<GplOutput> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let vectors = corpus
        .iter()
        .map(|p| Ok((p.key.clone(), encoder.encode(&p.text)?.to_vec())))
        .collect::<Result<Vec<_>>>()?;
    let index = VectorIndex::build(vectors)?;
    let mut queries = Vec::new();
    let mut triplets = Vec::new();
    for (i, passage) in corpus.iter().enumerate() {
        let generated = generate_queries(generator, &passage.text, config.n_queries, mix_seed(config.seed, i as u64))?;
        for g in generated {
            let q = encoder.encode(&g.query)?;
            let hits = mine_negatives(&index, q.values.as_slice().expect("contiguous"), &passage.key, config.m_negatives)?;
            let negatives: Vec<&str> = hits
                .iter()
                .map(|h| corpus.iter().find(|p| p.key == h.key).map(|p| p.text.as_str()).expect("indexed passage"))
                .collect();
            triplets.extend(pseudo_label(scorer, &g.query, &passage.text, &negatives)?);
            queries.push(g);
        }
    }
    let ids = encode_triplets(encoder, &triplets)?;
    let (params, losses) = gpl_train(&encoder.params, &ids, config)?;
    Ok(GplOutput { params, queries, triplets, losses })
}

fn write_jsonl<W: Write, T: Serialize>(mut w: W, items: &[T]) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn read_jsonl<R: BufRead, T: DeserializeOwned>(r: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))?);
    }
    Ok(out)
}

/// JSON lines `{"query","positive","negative","margin"}`.
pub fn write_triplets<W: Write>(w: W, triplets: &[PseudoLabeledTriplet]) -> Result<()> {
    write_jsonl(w, triplets)
}

pub fn read_triplets<R: BufRead>(r: R) -> Result<Vec<PseudoLabeledTriplet>> {
    read_jsonl(r)
}

/// A (rule, policy) training pair as text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextPair {
    pub rule_text: String,
    pub policy_text: String,
}

/// JSON lines `{"rule_text","policy_text"}`.
pub fn write_pairs<W: Write>(w: W, pairs: &[TextPair]) -> Result<()> {
    write_jsonl(w, pairs)
}

pub fn read_pairs<R: BufRead>(r: R) -> Result<Vec<TextPair>> {
    read_jsonl(r)
}
