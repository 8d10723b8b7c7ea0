use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Adam;
use crate::attention::{EncoderParams, Tape, Upstream};
use crate::corpus::{mask_tokens, MaskedBatch, TokenId};
use crate::neural_embed::{shuffle, EpochLoss};
use crate::seed::mix_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MlmConfig {
    pub epochs: usize,
    /// Masked sentences per optimizer step.
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for MlmConfig {
    fn default() -> Self {
        MlmConfig { epochs: 10, batch_size: 8, lr: 2e-3, seed: 0 }
    }
}

/// Masks every sentence independently; sentence `i` uses a seed derived from
/// `(seed, i)`. Empty sentences are skipped.
pub fn mask_corpus(sentences: &[Vec<TokenId>], fraction: f64, seed: u64) -> Result<Vec<MaskedBatch>> {
    sentences
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.is_empty())
        .map(|(i, s)| mask_tokens(s, fraction, mix_seed(seed, i as u64)))
        .collect()
}

/// Cross-entropy of the vocabulary projection of `X̃` against the original
/// token, averaged over every masked position in `batch`.
pub fn mlm_loss(params: &EncoderParams, batch: &[MaskedBatch]) -> Result<(f64, EncoderParams)> {
    let proj = &params.mlm_projection;
    let mut tape = Tape::new();
    let mut grads = params.zeros_like();
    let count: usize = batch.iter().map(|b| b.positions.len()).sum();
    if count == 0 {
        return Err(Error::InvalidArgument("no masked positions in batch".into()));
    }
    let scale = 1.0 / count as f64;
    let mut loss = 0.0;
    for b in batch {
        let (_, id) = tape.record(params, &b.masked)?;
        let trace = tape.trace(id).expect("just recorded");
        let mut d_ctx = Array2::zeros(trace.contextual.dim());
        for &pos in &b.positions {
            let target = b.original[pos];
            if target >= params.config.vocab_size {
                return Err(Error::UnknownId { id: target, size: params.config.vocab_size });
            }
            let row = trace.contextual.row(pos);
            let logits = row.dot(proj);
            let max = logits.fold(f64::NEG_INFINITY, |a, &x| a.max(x));
            let lse = max + logits.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
            loss += lse - logits[target];
            let mut d_logits: Array1<f64> = logits.mapv(|x| (x - lse).exp() * scale);
            d_logits[target] -= scale;
            let outer = row.to_owned().insert_axis(ndarray::Axis(1)).dot(&d_logits.view().insert_axis(ndarray::Axis(0)));
            grads.mlm_projection += &outer;
            d_ctx.row_mut(pos).assign(&proj.dot(&d_logits));
        }
        tape.backward(params, id, Upstream::Contextual(&d_ctx), &mut grads)?;
    }
    Ok((loss * scale, grads))
}

/// Masked-token pretraining with Adam over shuffled minibatches.
pub fn mlm_pretrain(
    params: &EncoderParams,
    batches: &[MaskedBatch],
    config: &MlmConfig,
) -> Result<(EncoderParams, Vec<EpochLoss>)> {
    if batches.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    let mut params = params.clone();
    let mut opt = Adam::new(&params, config.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..batches.len()).collect();
    let mut log = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        shuffle(&mut order, &mut rng);
        let mut sum = 0.0;
        let mut steps = 0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let group: Vec<MaskedBatch> = chunk.iter().map(|&i| batches[i].clone()).collect();
            let (loss, grads) = mlm_loss(&params, &group)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("masked-token loss at epoch {epoch}, batch {b}")));
            }
            sum += loss;
            steps += 1;
            opt.step(&mut params, &grads);
        }
        log.push(EpochLoss { epoch, mean_loss: sum / steps as f64 });
    }
    Ok((params, log))
}
