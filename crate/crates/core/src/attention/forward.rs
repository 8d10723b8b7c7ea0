use ndarray::{s, Array1, Array2, Axis};

use super::EncoderParams;
use crate::corpus::TokenId;
use crate::{Error, Result};

/// A pooled sentence embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceVector {
    pub values: Array1<f64>,
    pub normalized: bool,
}

impl SentenceVector {
    pub fn norm(&self) -> f64 {
        self.values.dot(&self.values).sqrt()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.values.to_vec()
    }
}

/// `X[i] = token_embedding[ids[i]] + position_embedding[i]`.
pub fn embed_tokens(params: &EncoderParams, ids: &[TokenId]) -> Result<Array2<f64>> {
    let cfg = params.config;
    if ids.len() > cfg.max_len {
        return Err(Error::InvalidArgument(format!(
            "sentence of {} tokens exceeds L_max = {}",
            ids.len(),
            cfg.max_len
        )));
    }
    let mut x = Array2::zeros((ids.len(), cfg.d_model));
    for (i, &id) in ids.iter().enumerate() {
        if id >= cfg.vocab_size {
            return Err(Error::UnknownId { id, size: cfg.vocab_size });
        }
        let mut row = x.row_mut(i);
        row.assign(&params.token_embedding.row(id));
        row += &params.position_embedding.row(i);
    }
    Ok(x)
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(scores: &Array2<f64>) -> Array2<f64> {
    let mut out = scores.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|x| (x - max).exp());
        let z = row.sum();
        row.mapv_inplace(|x| x / z);
    }
    out
}

/// `softmax(Q Kᵀ / √d_w) V` together with the `L × L` weight matrix.
pub fn scaled_dot_attention(
    q: &Array2<f64>,
    k: &Array2<f64>,
    v: &Array2<f64>,
) -> Result<(Array2<f64>, Array2<f64>)> {
    if q.ncols() != k.ncols() || k.nrows() != v.nrows() {
        return Err(Error::Shape(format!(
            "attention with Q {:?}, K {:?}, V {:?}",
            q.dim(),
            k.dim(),
            v.dim()
        )));
    }
    let scale = (q.ncols() as f64).sqrt();
    let weights = softmax_rows(&(q.dot(&k.t()) / scale));
    let out = weights.dot(v);
    Ok((out, weights))
}

/// Everything the backward pass needs from one forward pass.
#[derive(Debug, Clone)]
pub struct EncoderTrace {
    pub ids: Vec<TokenId>,
    pub x: Array2<f64>,
    pub q: Vec<Array2<f64>>,
    pub k: Vec<Array2<f64>>,
    pub v: Vec<Array2<f64>>,
    pub weights: Vec<Array2<f64>>,
    /// Concatenated head outputs `O`.
    pub concat: Array2<f64>,
    /// `X̃ = O W_o`.
    pub contextual: Array2<f64>,
    pub pooled: Array1<f64>,
    pub pooled_norm: f64,
    pub sentence: Array1<f64>,
}

fn attention_layer(params: &EncoderParams, x: &Array2<f64>) -> Result<EncoderTrace> {
    let cfg = params.config;
    if x.ncols() != cfg.d_model {
        return Err(Error::Shape(format!("input has {} columns, d_e = {}", x.ncols(), cfg.d_model)));
    }
    let dw = cfg.head_dim();
    let l = x.nrows();
    let mut concat = Array2::zeros((l, cfg.d_model));
    let (mut qs, mut ks, mut vs, mut ws) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for h in 0..cfg.heads {
        let q = x.dot(&params.w_q[h]);
        let k = x.dot(&params.w_k[h]);
        let v = x.dot(&params.w_v[h]);
        let (out, w) = scaled_dot_attention(&q, &k, &v)?;
        concat.slice_mut(s![.., h * dw..(h + 1) * dw]).assign(&out);
        qs.push(q);
        ks.push(k);
        vs.push(v);
        ws.push(w);
    }
    let contextual = concat.dot(&params.w_o);
    Ok(EncoderTrace {
        ids: Vec::new(),
        x: x.clone(),
        q: qs,
        k: ks,
        v: vs,
        weights: ws,
        concat,
        contextual,
        pooled: Array1::zeros(0),
        pooled_norm: 0.0,
        sentence: Array1::zeros(0),
    })
}

/// The multi-head attention layer applied to an embedded sentence.
pub fn multi_head_attention(params: &EncoderParams, x: &Array2<f64>) -> Result<Array2<f64>> {
    Ok(attention_layer(params, x)?.contextual)
}

/// Full forward pass with recorded activations.
pub fn forward_trace(params: &EncoderParams, ids: &[TokenId]) -> Result<EncoderTrace> {
    if ids.is_empty() {
        return Err(Error::InvalidArgument("cannot encode an empty token list".into()));
    }
    let x = embed_tokens(params, ids)?;
    let mut trace = attention_layer(params, &x)?;
    trace.ids = ids.to_vec();
    let pooled = trace.contextual.mean_axis(Axis(0)).expect("non-empty");
    let norm = pooled.dot(&pooled).sqrt();
    if !norm.is_finite() {
        return Err(Error::NonFinite("pooled sentence vector".into()));
    }
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    trace.sentence = &pooled / norm;
    trace.pooled = pooled;
    trace.pooled_norm = norm;
    Ok(trace)
}

/// Mean-pooled, L2-normalized sentence vector.
pub fn encode_sentence(params: &EncoderParams, ids: &[TokenId]) -> Result<SentenceVector> {
    let trace = forward_trace(params, ids)?;
    Ok(SentenceVector { values: trace.sentence, normalized: true })
}
