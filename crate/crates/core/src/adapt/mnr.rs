use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Adam;
use crate::attention::{EncoderParams, Tape, Upstream};
use crate::corpus::TokenId;
use crate::neural_embed::{shuffle, EpochLoss};
use crate::{Error, Result};

/// A query sentence and its answer, as token ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenPair {
    pub query: Vec<TokenId>,
    pub answer: Vec<TokenId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MnrConfig {
    pub epochs: usize,
    /// Pairs per batch, `K`.
    pub batch_size: usize,
    pub lr: f64,
    /// Cosines are multiplied by this before the softmax.
    pub temperature: f64,
    pub seed: u64,
}

impl Default for MnrConfig {
    fn default() -> Self {
        MnrConfig { epochs: 10, batch_size: 16, lr: 5e-3, temperature: 20.0, seed: 0 }
    }
}

/// Softmax cross-entropy of each row of `scores` against its diagonal entry,
/// averaged over rows. Returns the loss and `∂loss/∂scores`.
pub fn mnr_loss_from_scores(scores: &Array2<f64>) -> Result<(f64, Array2<f64>)> {
    let k = scores.nrows();
    if k < 2 || scores.ncols() != k {
        return Err(Error::Shape(format!("score matrix {:?} must be square with K >= 2", scores.dim())));
    }
    let mut grad = Array2::zeros((k, k));
    let mut loss = 0.0;
    for i in 0..k {
        let row = scores.row(i);
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let sum: f64 = row.iter().map(|&s| (s - max).exp()).sum();
        let lse = max + sum.ln();
        loss += lse - row[i];
        for j in 0..k {
            grad[[i, j]] = ((row[j] - lse).exp() - if i == j { 1.0 } else { 0.0 }) / k as f64;
        }
    }
    let loss = loss / k as f64;
    if !loss.is_finite() {
        return Err(Error::NonFinite("ranking loss".into()));
    }
    Ok((loss, grad))
}

/// Ranking loss of one batch under the encoder: every other answer in the
/// batch is a negative for each query. Returns the loss and its parameter
/// gradient.
pub fn mnr_loss(params: &EncoderParams, batch: &[TokenPair], temperature: f64) -> Result<(f64, EncoderParams)> {
    let k = batch.len();
    if k < 2 {
        return Err(Error::InvalidArgument(format!("a ranking batch needs at least 2 pairs, got {k}")));
    }
    let mut tape = Tape::new();
    let mut queries = Vec::with_capacity(k);
    let mut answers = Vec::with_capacity(k);
    for pair in batch {
        queries.push(tape.record(params, &pair.query)?);
        answers.push(tape.record(params, &pair.answer)?);
    }
    let scores = Array2::from_shape_fn((k, k), |(i, j)| temperature * queries[i].0.values.dot(&answers[j].0.values));
    let (loss, d_scores) = mnr_loss_from_scores(&scores)?;
    let mut grads = params.zeros_like();
    let d = params.config.d_model;
    for i in 0..k {
        let mut dq = Array1::zeros(d);
        let mut da = Array1::zeros(d);
        for j in 0..k {
            dq.scaled_add(temperature * d_scores[[i, j]], &answers[j].0.values);
            da.scaled_add(temperature * d_scores[[j, i]], &queries[j].0.values);
        }
        tape.backward(params, queries[i].1, Upstream::Sentence(&dq), &mut grads)?;
        tape.backward(params, answers[i].1, Upstream::Sentence(&da), &mut grads)?;
    }
    Ok((loss, grads))
}

/// Groups `order` into batches of at most `k` pairs with distinct queries.
/// A pair whose query is already in the batch being filled waits for the
/// next one. Batches of fewer than two pairs are dropped.
pub fn mnr_batches(pairs: &[TokenPair], order: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut batches = Vec::new();
    let mut queue = order.to_vec();
    while !queue.is_empty() {
        let mut batch: Vec<usize> = Vec::with_capacity(k);
        let mut rest = Vec::new();
        for i in queue {
            if batch.len() < k && batch.iter().all(|&b| pairs[b].query != pairs[i].query) {
                batch.push(i);
            } else {
                rest.push(i);
            }
        }
        if batch.len() < 2 {
            break;
        }
        batches.push(batch);
        queue = rest;
    }
    batches
}

/// Fine-tunes on (query, answer) pairs with the ranking loss and Adam.
pub fn fine_tune_mnr(
    params: &EncoderParams,
    pairs: &[TokenPair],
    config: &MnrConfig,
) -> Result<(EncoderParams, Vec<EpochLoss>)> {
    if pairs.len() < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 training pairs, got {}", pairs.len())));
    }
    if config.batch_size < 2 {
        return Err(Error::InvalidArgument("batch size must be at least 2".into()));
    }
    let mut params = params.clone();
    let mut opt = Adam::new(&params, config.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut log = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        shuffle(&mut order, &mut rng);
        let batches = mnr_batches(pairs, &order, config.batch_size);
        let mut sum = 0.0;
        for (b, idx) in batches.iter().enumerate() {
            let batch: Vec<TokenPair> = idx.iter().map(|&i| pairs[i].clone()).collect();
            let (loss, grads) = mnr_loss(&params, &batch, config.temperature).map_err(|e| match e {
                Error::NonFinite(_) => Error::NonFinite(format!("ranking loss at epoch {epoch}, batch {b}")),
                other => other,
            })?;
            sum += loss;
            opt.step(&mut params, &grads);
        }
        log.push(EpochLoss { epoch, mean_loss: sum / batches.len().max(1) as f64 });
    }
    Ok((params, log))
}
