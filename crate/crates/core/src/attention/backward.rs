use ndarray::{s, Array1, Array2, Axis};

use super::{forward_trace, EncoderParams, EncoderTrace, SentenceVector};
use crate::corpus::TokenId;
use crate::{Error, Result};

/// Handle to a forward pass recorded on a [`Tape`].
pub type TraceId = usize;

/// Gradient flowing into the encoder output.
#[derive(Debug, Clone, Copy)]
pub enum Upstream<'a> {
    /// With respect to the normalized sentence vector.
    Sentence(&'a Array1<f64>),
    /// With respect to the contextual matrix `X̃` (`L × d_e`).
    Contextual(&'a Array2<f64>),
}

/// Records forward passes so that gradients can be pushed back through any
/// of them later.
#[derive(Debug, Default)]
pub struct Tape {
    traces: Vec<EncoderTrace>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn record(&mut self, params: &EncoderParams, ids: &[TokenId]) -> Result<(SentenceVector, TraceId)> {
        let trace = forward_trace(params, ids)?;
        let v = SentenceVector { values: trace.sentence.clone(), normalized: true };
        self.traces.push(trace);
        Ok((v, self.traces.len() - 1))
    }

    pub fn trace(&self, id: TraceId) -> Option<&EncoderTrace> {
        self.traces.get(id)
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn clear(&mut self) {
        self.traces.clear();
    }

    /// Accumulates the parameter gradient of trace `id` into `grads`.
    pub fn backward(
        &self,
        params: &EncoderParams,
        id: TraceId,
        upstream: Upstream<'_>,
        grads: &mut EncoderParams,
    ) -> Result<()> {
        let trace = self.traces.get(id).ok_or(Error::NoForward(id))?;
        backward_trace(params, trace, upstream, grads)
    }
}

fn backward_trace(
    params: &EncoderParams,
    trace: &EncoderTrace,
    upstream: Upstream<'_>,
    grads: &mut EncoderParams,
) -> Result<()> {
    let cfg = params.config;
    let l = trace.ids.len();
    let d = cfg.d_model;
    let dw = cfg.head_dim();

    let d_ctx: Array2<f64> = match upstream {
        Upstream::Sentence(g) => {
            if g.len() != d {
                return Err(Error::Shape(format!("sentence gradient of length {}, d_e = {d}", g.len())));
            }
            // s = p / |p|  ⇒  dp = (g − s (s·g)) / |p|; p is the row mean.
            let s = &trace.sentence;
            let dp = (g - &(s * s.dot(g))) / trace.pooled_norm;
            let row = (dp / l as f64).insert_axis(Axis(0));
            row.broadcast((l, d)).expect("broadcast row").to_owned()
        }
        Upstream::Contextual(g) => {
            if g.dim() != (l, d) {
                return Err(Error::Shape(format!("contextual gradient {:?}, expected {:?}", g.dim(), (l, d))));
            }
            g.clone()
        }
    };

    grads.w_o += &trace.concat.t().dot(&d_ctx);
    let d_concat = d_ctx.dot(&params.w_o.t());
    let inv_scale = 1.0 / (dw as f64).sqrt();
    let mut dx = Array2::<f64>::zeros((l, d));
    for h in 0..cfg.heads {
        let d_out = d_concat.slice(s![.., h * dw..(h + 1) * dw]);
        let a = &trace.weights[h];
        let d_a = d_out.dot(&trace.v[h].t());
        let d_v = a.t().dot(&d_out);
        // Softmax backward, row by row: dS = A ∘ (dA − rowsum(dA ∘ A)).
        let rowdot = (&d_a * a).sum_axis(Axis(1)).insert_axis(Axis(1));
        let d_s = a * &(&d_a - &rowdot);
        let d_q = d_s.dot(&trace.k[h]) * inv_scale;
        let d_k = d_s.t().dot(&trace.q[h]) * inv_scale;
        grads.w_q[h] += &trace.x.t().dot(&d_q);
        grads.w_k[h] += &trace.x.t().dot(&d_k);
        grads.w_v[h] += &trace.x.t().dot(&d_v);
        dx += &d_q.dot(&params.w_q[h].t());
        dx += &d_k.dot(&params.w_k[h].t());
        dx += &d_v.dot(&params.w_v[h].t());
    }
    for (i, &id) in trace.ids.iter().enumerate() {
        let row = dx.row(i);
        grads.token_embedding.row_mut(id).scaled_add(1.0, &row);
        grads.position_embedding.row_mut(i).scaled_add(1.0, &row);
    }
    Ok(())
}
