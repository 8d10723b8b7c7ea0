//! Skip-gram and CBOW word vectors trained with negative sampling.
//!
//! Every word owns an input vector (used when it is the centre word) and an
//! output vector (used when it is predicted). For a centre word `w_I`, a
//! context word `w_O` and `k` noise words `w_j ~ P_n`, the per-example loss is
//!
//! ```text
//! −log σ(u_Oᵀ v_I) − Σ_j log σ(−u_jᵀ v_I)
//! ```
//!
//! with `P_n(w) ∝ count(w)^{3/4}`. The exported vector of a word is the mean
//! of its input and output vectors.

use std::io::Write;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::{TokenId, Vocabulary};
use crate::count_embed::DenseEmbeddingTable;
use crate::{Error, Result};

/// A (centre, context) pair at signed offset `offset` (`0 < |offset| ≤ c`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TrainingPair {
    pub center: TokenId,
    pub context: TokenId,
    pub offset: isize,
}

/// Predict `target` from the average of `context`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CbowExample {
    pub context: Vec<TokenId>,
    pub target: TokenId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContextMode {
    SkipGram { window: usize },
    Cbow { window: usize },
    /// `n`-grams whose consecutive members are at most `k + 1` apart in total
    /// span, i.e. with at most `k` skipped words overall.
    KSkipNGram { k: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Examples {
    Pairs(Vec<TrainingPair>),
    Cbow(Vec<CbowExample>),
    Grams(Vec<Vec<TokenId>>),
}

impl Examples {
    pub fn len(&self) -> usize {
        match self {
            Examples::Pairs(v) => v.len(),
            Examples::Cbow(v) => v.len(),
            Examples::Grams(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn extract_pairs(tokens: &[TokenId], mode: ContextMode) -> Examples {
    match mode {
        ContextMode::SkipGram { window } => Examples::Pairs(skipgram_pairs(tokens, window)),
        ContextMode::Cbow { window } => Examples::Cbow(cbow_examples(tokens, window)),
        ContextMode::KSkipNGram { k, n } => Examples::Grams(skip_ngrams(tokens, k, n)),
    }
}

/// All `(w_t, w_{t+j})` with `0 < |j| ≤ window`, in sentence order.
pub fn skipgram_pairs(tokens: &[TokenId], window: usize) -> Vec<TrainingPair> {
    let mut out = Vec::new();
    for (t, &center) in tokens.iter().enumerate() {
        let lo = t.saturating_sub(window);
        let hi = (t + window).min(tokens.len().saturating_sub(1));
        for (c, &context) in tokens.iter().enumerate().take(hi + 1).skip(lo) {
            if c != t {
                out.push(TrainingPair { center, context, offset: c as isize - t as isize });
            }
        }
    }
    out
}

pub fn cbow_examples(tokens: &[TokenId], window: usize) -> Vec<CbowExample> {
    let mut out = Vec::new();
    for (t, &target) in tokens.iter().enumerate() {
        let lo = t.saturating_sub(window);
        let hi = (t + window + 1).min(tokens.len());
        let context: Vec<TokenId> = (lo..hi).filter(|&c| c != t).map(|c| tokens[c]).collect();
        if !context.is_empty() {
            out.push(CbowExample { context, target });
        }
    }
    out
}

/// k-skip-n-grams: ordered `n`-element subsequences whose span exceeds `n`
/// by at most `k` skipped positions. `k = 0` gives plain n-grams.
pub fn skip_ngrams<T: Clone>(tokens: &[T], k: usize, n: usize) -> Vec<Vec<T>> {
    fn rec<T: Clone>(
        tokens: &[T],
        n: usize,
        skips_left: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<T>>,
    ) {
        if current.len() == n {
            out.push(current.iter().map(|&i| tokens[i].clone()).collect());
            return;
        }
        let last = *current.last().expect("seeded with a start index");
        for gap in 0..=skips_left {
            let next = last + 1 + gap;
            if next >= tokens.len() {
                break;
            }
            current.push(next);
            rec(tokens, n, skips_left - gap, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    for start in 0..tokens.len() {
        let mut current = vec![start];
        rec(tokens, n, k, &mut current, &mut out);
    }
    out
}

/// Noise distribution `P_n(w) = u(w)^e / Z` with inverse-CDF sampling.
#[derive(Debug, Clone)]
pub struct NoiseDistribution {
    probs: Vec<f64>,
    cumulative: Vec<f64>,
    exponent: f64,
    normalizer: f64,
}

impl NoiseDistribution {
    pub const DEFAULT_EXPONENT: f64 = 0.75;

    pub fn from_vocabulary(vocab: &Vocabulary) -> Result<Self> {
        Self::from_counts(vocab.frequencies(), Self::DEFAULT_EXPONENT)
    }

    pub fn from_counts(counts: &[u64], exponent: f64) -> Result<Self> {
        let weights: Vec<f64> = counts
            .iter()
            .map(|&c| if c == 0 { 0.0 } else { (c as f64).powf(exponent) })
            .collect();
        let normalizer: f64 = weights.iter().sum();
        if normalizer <= 0.0 {
            return Err(Error::EmptyCorpus);
        }
        let probs: Vec<f64> = weights.iter().map(|w| w / normalizer).collect();
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        // Pin the top of the table so every uniform draw lands somewhere.
        if let Some(last) = probs.iter().rposition(|&p| p > 0.0) {
            for c in &mut cumulative[last..] {
                *c = 1.0;
            }
        }
        Ok(NoiseDistribution { probs, cumulative, exponent, normalizer })
    }

    pub fn probability(&self, id: TokenId) -> f64 {
        self.probs.get(id).copied().unwrap_or(0.0)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TokenId {
        let u: f64 = rng.random();
        self.cumulative.partition_point(|&c| c <= u).min(self.probs.len() - 1)
    }
}

/// Input and output vector tables.
#[derive(Debug, Clone, PartialEq)]
pub struct SkipGramModel {
    pub input: Array2<f64>,
    pub output: Array2<f64>,
}

impl SkipGramModel {
    /// Input rows uniform in `(−0.5/d, 0.5/d)`, output rows zero.
    pub fn init(vocab_size: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = 0.5 / dim as f64;
        let input = Array2::from_shape_fn((vocab_size, dim), |_| rng.random_range(-half..half));
        SkipGramModel { input, output: Array2::zeros((vocab_size, dim)) }
    }

    pub fn vocab_size(&self) -> usize {
        self.input.nrows()
    }

    pub fn dim(&self) -> usize {
        self.input.ncols()
    }

    /// Final word vectors: `(input + output) / 2`.
    pub fn embeddings(&self) -> Result<DenseEmbeddingTable> {
        DenseEmbeddingTable::new((&self.input + &self.output) / 2.0)
    }

    fn check_id(&self, id: TokenId) -> Result<()> {
        if id < self.vocab_size() {
            Ok(())
        } else {
            Err(Error::UnknownId { id, size: self.vocab_size() })
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log σ(x)` without overflow.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Gradient of the negative-sampling loss restricted to the rows it touches.
#[derive(Debug, Clone, PartialEq)]
pub struct NsGradients {
    /// Gradient for the centre word's input row.
    pub input: (TokenId, Array1<f64>),
    /// Gradients for output rows, one entry per distinct id, sorted by id.
    pub output: Vec<(TokenId, Array1<f64>)>,
}

fn negative_sampling_core(
    model: &SkipGramModel,
    hidden: &Array1<f64>,
    target: TokenId,
    negatives: &[TokenId],
) -> Result<(f64, Array1<f64>, Vec<(TokenId, Array1<f64>)>)> {
    model.check_id(target)?;
    for &n in negatives {
        model.check_id(n)?;
    }
    let mut loss = 0.0;
    let mut grad_hidden = Array1::zeros(hidden.len());
    let mut out: Vec<(TokenId, Array1<f64>)> = Vec::with_capacity(negatives.len() + 1);
    let mut push = |id: TokenId, g: Array1<f64>| match out.iter_mut().find(|(i, _)| *i == id) {
        Some((_, acc)) => *acc += &g,
        None => out.push((id, g)),
    };
    for (id, label) in std::iter::once((target, 1.0)).chain(negatives.iter().map(|&n| (n, 0.0))) {
        let u = model.output.row(id);
        let score = u.dot(hidden);
        if !score.is_finite() {
            return Err(Error::NonFinite(format!("dot product for token {id}")));
        }
        // label 1: −log σ(s); label 0: −log σ(−s). d/ds = σ(s) − label.
        loss -= if label == 1.0 { log_sigmoid(score) } else { log_sigmoid(-score) };
        let g = sigmoid(score) - label;
        grad_hidden.scaled_add(g, &u);
        push(id, hidden * g);
    }
    out.sort_by_key(|(id, _)| *id);
    Ok((loss, grad_hidden, out))
}

/// Loss and gradient of one skip-gram example with the given noise words.
pub fn negative_sampling_objective(
    model: &SkipGramModel,
    pair: &TrainingPair,
    negatives: &[TokenId],
) -> Result<(f64, NsGradients)> {
    model.check_id(pair.center)?;
    let hidden = model.input.row(pair.center).to_owned();
    let (loss, g_in, output) = negative_sampling_core(model, &hidden, pair.context, negatives)?;
    Ok((loss, NsGradients { input: (pair.center, g_in), output }))
}

/// CBOW variant: the hidden vector is the mean of the context input rows; the
/// returned input gradients are per context id (already divided by the
/// context size).
pub fn cbow_objective(
    model: &SkipGramModel,
    example: &CbowExample,
    negatives: &[TokenId],
) -> Result<(f64, Vec<(TokenId, Array1<f64>)>, Vec<(TokenId, Array1<f64>)>)> {
    if example.context.is_empty() {
        return Err(Error::InvalidArgument("empty CBOW context".into()));
    }
    let mut hidden = Array1::zeros(model.dim());
    for &c in &example.context {
        model.check_id(c)?;
        hidden += &model.input.row(c);
    }
    let n = example.context.len() as f64;
    hidden /= n;
    let (loss, g_hidden, output) = negative_sampling_core(model, &hidden, example.target, negatives)?;
    let mut inputs: Vec<(TokenId, Array1<f64>)> = Vec::new();
    for &c in &example.context {
        match inputs.iter_mut().find(|(i, _)| *i == c) {
            Some((_, acc)) => acc.scaled_add(1.0 / n, &g_hidden),
            None => inputs.push((c, &g_hidden / n)),
        }
    }
    inputs.sort_by_key(|(id, _)| *id);
    Ok((loss, inputs, output))
}

/// Full softmax `P(w | w_I)` over every output row. Only practical for
/// small vocabularies; used as a reference.
pub fn softmax_distribution(model: &SkipGramModel, input: TokenId) -> Result<Vec<f64>> {
    model.check_id(input)?;
    let v = model.input.row(input);
    let scores: Vec<f64> = model.output.rows().into_iter().map(|u| u.dot(&v)).collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / z).collect())
}

pub fn full_softmax_probability(model: &SkipGramModel, output: TokenId, input: TokenId) -> Result<f64> {
    model.check_id(output)?;
    Ok(softmax_distribution(model, input)?[output])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    SkipGram,
    Cbow,
}

#[derive(Debug, Clone)]
pub struct SgdConfig {
    pub architecture: Architecture,
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Starting learning rate, decayed linearly towards `lr * 1e-4`.
    pub lr: f64,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            architecture: Architecture::SkipGram,
            dim: 50,
            window: 5,
            negatives: 5,
            epochs: 5,
            lr: 0.025,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub mean_loss: f64,
}

/// Writes one `{"epoch", "mean_loss"}` JSON line per entry.
pub fn write_loss_log<W: Write>(mut w: W, log: &[EpochLoss]) -> Result<()> {
    for e in log {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn draw_negatives<R: Rng>(noise: &NoiseDistribution, rng: &mut R, k: usize, avoid: TokenId) -> Vec<TokenId> {
    let mut out = Vec::with_capacity(k);
    let mut tries = 0;
    while out.len() < k {
        let w = noise.sample(rng);
        tries += 1;
        // A vocabulary dominated by one word would otherwise loop forever.
        if w != avoid || tries > 64 * k {
            out.push(w);
        }
    }
    out
}

/// Plain SGD over all examples of every sentence, in a per-epoch shuffled
/// order. Returns the model and the epoch-mean losses.
pub fn train(
    sentences: &[Vec<TokenId>],
    vocab: &Vocabulary,
    config: &SgdConfig,
) -> Result<(SkipGramModel, Vec<EpochLoss>)> {
    if config.negatives == 0 || config.dim == 0 || config.window == 0 {
        return Err(Error::InvalidArgument("dim, window and negatives must be positive".into()));
    }
    let noise = NoiseDistribution::from_vocabulary(vocab)?;
    let mut model = SkipGramModel::init(vocab.len(), config.dim, config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let pairs: Vec<TrainingPair> = match config.architecture {
        Architecture::SkipGram => sentences.iter().flat_map(|s| skipgram_pairs(s, config.window)).collect(),
        Architecture::Cbow => Vec::new(),
    };
    let cbow: Vec<CbowExample> = match config.architecture {
        Architecture::SkipGram => Vec::new(),
        Architecture::Cbow => sentences.iter().flat_map(|s| cbow_examples(s, config.window)).collect(),
    };
    let per_epoch = pairs.len() + cbow.len();
    let total_steps = (per_epoch * config.epochs).max(1) as f64;
    let mut step = 0usize;
    let mut log = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..per_epoch).collect();
    for epoch in 0..config.epochs {
        shuffle(&mut order, &mut rng);
        let mut sum = 0.0;
        for &i in &order {
            let lr = config.lr * (1.0 - step as f64 / total_steps).max(1e-4);
            step += 1;
            match config.architecture {
                Architecture::SkipGram => {
                    let pair = pairs[i];
                    let negs = draw_negatives(&noise, &mut rng, config.negatives, pair.context);
                    let (loss, g) = negative_sampling_objective(&model, &pair, &negs)?;
                    sum += loss;
                    model.input.row_mut(g.input.0).scaled_add(-lr, &g.input.1);
                    for (id, grad) in &g.output {
                        model.output.row_mut(*id).scaled_add(-lr, grad);
                    }
                }
                Architecture::Cbow => {
                    let ex = &cbow[i];
                    let negs = draw_negatives(&noise, &mut rng, config.negatives, ex.target);
                    let (loss, gin, gout) = cbow_objective(&model, ex, &negs)?;
                    sum += loss;
                    for (id, grad) in &gin {
                        model.input.row_mut(*id).scaled_add(-lr, grad);
                    }
                    for (id, grad) in &gout {
                        model.output.row_mut(*id).scaled_add(-lr, grad);
                    }
                }
            }
        }
        let mean_loss = if per_epoch == 0 { 0.0 } else { sum / per_epoch as f64 };
        if !mean_loss.is_finite() {
            return Err(Error::NonFinite(format!("training loss diverged in epoch {}", epoch + 1)));
        }
        log.push(EpochLoss { epoch: epoch + 1, mean_loss });
    }
    Ok((model, log))
}

/// Fisher–Yates shuffle driven by `rng`.
pub(crate) fn shuffle<T, R: Rng>(items: &mut [T], rng: &mut R) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}
