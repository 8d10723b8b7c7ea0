//! One-layer multi-head self-attention encoder.
//!
//! A sentence of `L` token ids becomes `X = token_embedding[ids] +
//! position_embedding[0..L]`. Each head projects `X` to `Q_i, K_i, V_i`
//! (`d_e × d_w` weights with `d_w = d_e / h`) and computes
//! `softmax(Q_i K_iᵀ / √d_w) V_i`; the heads are concatenated and projected by
//! `W_o` into the contextual matrix `X̃`. The sentence vector is the
//! L2-normalized mean of the rows of `X̃`.
//!
//! There is no feed-forward sublayer, residual connection or layer norm.
//! Gradients come from [`Tape`], which records forward passes and replays
//! them backwards.

mod backward;
mod checkpoint;
mod forward;
mod params;

pub use backward::{Tape, TraceId, Upstream};
pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointHeader, Section};
pub use forward::{
    embed_tokens, encode_sentence, forward_trace, multi_head_attention, scaled_dot_attention,
    softmax_rows, EncoderTrace, SentenceVector,
};
pub use params::{AttentionConfig, EncoderParams};

use crate::corpus::{tokenize, Vocabulary};
use crate::{Error, Result};

/// Encoder parameters bundled with the vocabulary that maps text to ids.
#[derive(Debug, Clone)]
pub struct TextEncoder {
    pub params: EncoderParams,
    pub vocab: Vocabulary,
}

impl TextEncoder {
    pub fn new(params: EncoderParams, vocab: Vocabulary) -> Result<Self> {
        if params.config.vocab_size != vocab.len() {
            return Err(Error::Shape(format!(
                "encoder expects {} tokens, vocabulary has {}",
                params.config.vocab_size,
                vocab.len()
            )));
        }
        Ok(TextEncoder { params, vocab })
    }

    /// Token ids of `text`, truncated to the encoder's maximum length.
    pub fn token_ids(&self, text: &str) -> Vec<usize> {
        let mut ids = self.vocab.encode(&tokenize(text));
        ids.truncate(self.params.config.max_len);
        ids
    }

    pub fn encode(&self, text: &str) -> Result<SentenceVector> {
        let ids = self.token_ids(text);
        if ids.is_empty() {
            return Err(Error::InvalidArgument(format!("no tokens in {text:?}")));
        }
        encode_sentence(&self.params, &ids)
    }
}
