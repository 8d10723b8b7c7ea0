use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttentionConfig {
    /// Embedding width `d_e`.
    pub d_model: usize,
    pub heads: usize,
    pub max_len: usize,
    pub vocab_size: usize,
}

impl AttentionConfig {
    /// Toy-scale defaults: `d_e = 64`, 4 heads of width 16, 64 positions.
    pub fn new(vocab_size: usize) -> Self {
        AttentionConfig { d_model: 64, heads: 4, max_len: 64, vocab_size }
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.heads
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 || self.heads == 0 || self.max_len == 0 || self.vocab_size == 0 {
            return Err(Error::InvalidArgument("encoder dimensions must be positive".into()));
        }
        if !self.d_model.is_multiple_of(self.heads) {
            return Err(Error::InvalidArgument(format!(
                "{} heads do not divide d_e = {}",
                self.heads, self.d_model
            )));
        }
        Ok(())
    }
}

/// Every trainable matrix of the encoder. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub config: AttentionConfig,
    /// `|V| × d_e`
    pub token_embedding: Array2<f64>,
    /// `L_max × d_e`
    pub position_embedding: Array2<f64>,
    /// Per head, `d_e × d_w`.
    pub w_q: Vec<Array2<f64>>,
    pub w_k: Vec<Array2<f64>>,
    pub w_v: Vec<Array2<f64>>,
    /// `d_e × d_e`
    pub w_o: Array2<f64>,
    /// `d_e × |V|`, used only by masked-token pretraining.
    pub mlm_projection: Array2<f64>,
}

impl EncoderParams {
    /// Weights drawn from `Normal(0, 1/√d_e)`; the vocabulary projection
    /// starts at zero so untrained masked-token predictions are uniform.
    pub fn init(config: AttentionConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0 / (config.d_model as f64).sqrt())
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let mut draw = |rows: usize, cols: usize| Array2::from_shape_fn((rows, cols), |_| normal.sample(&mut rng));
        let (d, dw, h) = (config.d_model, config.head_dim(), config.heads);
        let token_embedding = draw(config.vocab_size, d);
        let position_embedding = draw(config.max_len, d);
        let w_q = (0..h).map(|_| draw(d, dw)).collect();
        let w_k = (0..h).map(|_| draw(d, dw)).collect();
        let w_v = (0..h).map(|_| draw(d, dw)).collect();
        let w_o = draw(d, d);
        Ok(EncoderParams {
            config,
            token_embedding,
            position_embedding,
            w_q,
            w_k,
            w_v,
            w_o,
            mlm_projection: Array2::zeros((d, config.vocab_size)),
        })
    }

    pub fn zeros(config: AttentionConfig) -> Result<Self> {
        config.validate()?;
        let (d, dw, h) = (config.d_model, config.head_dim(), config.heads);
        Ok(EncoderParams {
            config,
            token_embedding: Array2::zeros((config.vocab_size, d)),
            position_embedding: Array2::zeros((config.max_len, d)),
            w_q: vec![Array2::zeros((d, dw)); h],
            w_k: vec![Array2::zeros((d, dw)); h],
            w_v: vec![Array2::zeros((d, dw)); h],
            w_o: Array2::zeros((d, d)),
            mlm_projection: Array2::zeros((d, config.vocab_size)),
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.config).expect("config already validated")
    }

    /// Named views of every matrix, in checkpoint order.
    pub fn tensors(&self) -> Vec<(String, &Array2<f64>)> {
        let mut out = vec![
            ("token_embedding".to_string(), &self.token_embedding),
            ("position_embedding".to_string(), &self.position_embedding),
        ];
        for (prefix, group) in [("w_q", &self.w_q), ("w_k", &self.w_k), ("w_v", &self.w_v)] {
            out.extend(group.iter().enumerate().map(|(i, m)| (format!("{prefix}.{i}"), m)));
        }
        out.push(("w_o".to_string(), &self.w_o));
        out.push(("mlm_projection".to_string(), &self.mlm_projection));
        out
    }

    /// Mutable views in the same order as [`tensors`](Self::tensors).
    pub fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut out = vec![&mut self.token_embedding, &mut self.position_embedding];
        out.extend(self.w_q.iter_mut());
        out.extend(self.w_k.iter_mut());
        out.extend(self.w_v.iter_mut());
        out.push(&mut self.w_o);
        out.push(&mut self.mlm_projection);
        out
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &EncoderParams) {
        let theirs: Vec<&Array2<f64>> = other.tensors().into_iter().map(|(_, m)| m).collect();
        for (mine, theirs) in self.tensors_mut().into_iter().zip(theirs) {
            mine.scaled_add(alpha, theirs);
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for m in self.tensors_mut() {
            m.mapv_inplace(|x| x * alpha);
        }
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|(_, m)| m.len()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|(_, m)| m.iter())
            .fold(0.0f64, |acc, x| acc.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, m)| m.iter().all(|x| x.is_finite()))
    }

    /// Flattened parameter values in checkpoint order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|(_, m)| m.iter().copied()).collect()
    }
}
