//! Independent oracles, finite-difference helpers and planted datasets shared
//! by the integration tests and the acceptance harness.
#![allow(dead_code)]

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rulematch::adapt::{margin_mse_loss, mlm_loss, mnr_loss, Passage, TokenPair, TripletIds};
use rulematch::attention::{forward_trace, AttentionConfig, EncoderParams, Tape, Upstream};
use rulematch::corpus::MaskedBatch;
use rulematch::eval::ValidationPair;
use rulematch::neural_embed::{negative_sampling_objective, SkipGramModel, TrainingPair};
use rulematch::search::SentenceKey;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- oracles

/// Double loop over ordered position pairs `(i, j)`, `0 < |i − j| ≤ W`,
/// adding `W − |i − j| + 1` to cell `(s_i, s_j)`.
pub fn naive_cooccurrence(sentences: &[Vec<usize>], v: usize, w: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; v]; v];
    for s in sentences {
        for i in 0..s.len() {
            for j in 0..s.len() {
                let d = i.abs_diff(j);
                if d >= 1 && d <= w {
                    m[s[i]][s[j]] += (w - d + 1) as f64;
                }
            }
        }
    }
    m
}

/// Cell-by-cell correlation transform with explicit sums.
pub fn naive_correlation(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut total = 0.0;
    for row in m {
        for &x in row {
            total += x;
        }
    }
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut r = 0.0;
            for k in 0..n {
                r += m[i][k];
            }
            let mut c = 0.0;
            for k in 0..n {
                c += m[k][j];
            }
            let denom = r * (total - r) * c * (total - c);
            if denom > 0.0 {
                let corr = (total * m[i][j] - r * c) / denom.sqrt();
                out[i][j] = if corr > 0.0 { corr.sqrt() } else { 0.0 };
            }
        }
    }
    out
}

/// Singular values from the cyclic Jacobi eigen-decomposition of `AᵀA`,
/// descending.
pub fn jacobi_singular_values(a: &Array2<f64>) -> Vec<f64> {
    let mut s = a.t().dot(a);
    let n = s.nrows();
    for _ in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += s[[p, q]] * s[[p, q]];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if s[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = (s[[q, q]] - s[[p, p]]) / (2.0 * s[[p, q]]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let (skp, skq) = (s[[k, p]], s[[k, q]]);
                    s[[k, p]] = c * skp - sn * skq;
                    s[[k, q]] = sn * skp + c * skq;
                }
                for k in 0..n {
                    let (spk, sqk) = (s[[p, k]], s[[q, k]]);
                    s[[p, k]] = c * spk - sn * sqk;
                    s[[q, k]] = sn * spk + c * sqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| s[[i, i]].max(0.0).sqrt()).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

fn naive_cos(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Scores every item, sorts everything by (score desc, key asc).
pub fn naive_ranking(items: &[(SentenceKey, Vec<f64>)], q: &[f64]) -> Vec<(SentenceKey, f64)> {
    let mut all: Vec<(SentenceKey, f64)> = items.iter().map(|(k, v)| (k.clone(), naive_cos(q, v))).collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    all
}

/// Per-pair vote counts by explicit loops over models.
pub fn naive_votes(
    models: &[(Vec<Vec<f64>>, Vec<Vec<f64>>)],
    tau: f64,
) -> BTreeMap<(usize, usize), u32> {
    let mut votes = BTreeMap::new();
    let (nr, np) = (models[0].0.len(), models[0].1.len());
    for r in 0..nr {
        for p in 0..np {
            let mut n = 0;
            for (rules, policies) in models {
                if naive_cos(&rules[r], &policies[p]) >= tau {
                    n += 1;
                }
            }
            votes.insert((r, p), n);
        }
    }
    votes
}

// ------------------------------------------------------ finite differences

pub const EPS: f64 = 1e-5;

fn entry(p: &mut EncoderParams, mut i: usize) -> &mut f64 {
    for m in p.tensors_mut() {
        if i < m.len() {
            return &mut m.as_slice_mut().expect("standard layout")[i];
        }
        i -= m.len();
    }
    panic!("parameter index out of range")
}

/// Central differences of `f` over every scalar parameter.
pub fn numeric_gradient(params: &EncoderParams, f: impl Fn(&EncoderParams) -> f64) -> Vec<f64> {
    let n = params.num_parameters();
    let mut p = params.clone();
    (0..n)
        .map(|i| {
            let orig = *entry(&mut p, i);
            *entry(&mut p, i) = orig + EPS;
            let up = f(&p);
            *entry(&mut p, i) = orig - EPS;
            let down = f(&p);
            *entry(&mut p, i) = orig;
            (up - down) / (2.0 * EPS)
        })
        .collect()
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

fn random_ids(r: &mut ChaCha8Rng, len: usize, vocab: usize) -> Vec<usize> {
    (0..len).map(|_| r.random_range(0..vocab)).collect()
}

fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| r.random_range(-1.0..1.0))
}

/// The encoder shapes the gradient checks sweep.
pub fn encoder_configs() -> Vec<AttentionConfig> {
    let mut out = Vec::new();
    for d in [4, 8] {
        for h in [1, 2] {
            out.push(AttentionConfig { d_model: d, heads: h, max_len: 5, vocab_size: 7 });
        }
    }
    out
}

/// Random linear functionals of the contextual matrix and of the sentence
/// vector, differentiated through the tape.
pub fn attention_gradient_errors(instances: usize) -> Vec<f64> {
    let configs = encoder_configs();
    let mut r = rng(11);
    (0..instances)
        .map(|n| {
            let cfg = configs[n % configs.len()];
            let len = [1, 3, 5][(n / configs.len()) % 3];
            let p = EncoderParams::init(cfg, n as u64).unwrap();
            let ids = random_ids(&mut r, len, cfg.vocab_size);
            let mut tape = Tape::new();
            let (_, id) = tape.record(&p, &ids).unwrap();
            let mut grads = p.zeros_like();
            if n % 2 == 0 {
                let g = random_matrix(&mut r, len, cfg.d_model);
                tape.backward(&p, id, Upstream::Contextual(&g), &mut grads).unwrap();
                let num = numeric_gradient(&p, |q| (&forward_trace(q, &ids).unwrap().contextual * &g).sum());
                relative_error(&grads.to_flat(), &num)
            } else {
                let g: Array1<f64> = (0..cfg.d_model).map(|_| r.random_range(-1.0..1.0)).collect();
                tape.backward(&p, id, Upstream::Sentence(&g), &mut grads).unwrap();
                let num = numeric_gradient(&p, |q| forward_trace(q, &ids).unwrap().sentence.dot(&g));
                relative_error(&grads.to_flat(), &num)
            }
        })
        .collect()
}

fn table_mut(m: &mut SkipGramModel, table: usize) -> &mut Array2<f64> {
    if table == 0 {
        &mut m.input
    } else {
        &mut m.output
    }
}

/// Negative-sampling loss against central differences over both tables.
pub fn negative_sampling_gradient_errors(instances: usize) -> Vec<f64> {
    let mut r = rng(12);
    (0..instances)
        .map(|n| {
            let (v, d) = (9, [4, 8][n % 2]);
            let model = SkipGramModel { input: random_matrix(&mut r, v, d), output: random_matrix(&mut r, v, d) };
            let pair = TrainingPair { center: r.random_range(0..v), context: r.random_range(0..v), offset: 1 };
            let negs = random_ids(&mut r, 1 + n % 5, v);
            let (_, g) = negative_sampling_objective(&model, &pair, &negs).unwrap();
            let mut analytic_in = Array2::<f64>::zeros((v, d));
            analytic_in.row_mut(g.input.0).assign(&g.input.1);
            let mut analytic_out = Array2::<f64>::zeros((v, d));
            for (id, row) in &g.output {
                analytic_out.row_mut(*id).assign(row);
            }
            let loss = |m: &SkipGramModel| negative_sampling_objective(m, &pair, &negs).unwrap().0;
            let mut num = Vec::new();
            let mut m = model.clone();
            for table in 0..2 {
                for i in 0..v {
                    for j in 0..d {
                        let orig = table_mut(&mut m, table)[[i, j]];
                        table_mut(&mut m, table)[[i, j]] = orig + EPS;
                        let up = loss(&m);
                        table_mut(&mut m, table)[[i, j]] = orig - EPS;
                        let down = loss(&m);
                        table_mut(&mut m, table)[[i, j]] = orig;
                        num.push((up - down) / (2.0 * EPS));
                    }
                }
            }
            let analytic: Vec<f64> = analytic_in.iter().chain(analytic_out.iter()).copied().collect();
            relative_error(&analytic, &num)
        })
        .collect()
}

pub fn mnr_gradient_errors(instances: usize) -> Vec<f64> {
    let configs = encoder_configs();
    let mut r = rng(13);
    (0..instances)
        .map(|n| {
            let cfg = configs[n % configs.len()];
            let p = EncoderParams::init(cfg, 100 + n as u64).unwrap();
            let k = 2 + n % 2;
            // Identical answers make the loss constant; such batches carry no
            // gradient information and are redrawn.
            let batch: Vec<TokenPair> = loop {
                let batch: Vec<TokenPair> = (0..k)
                    .map(|_| {
                        let (lq, la) = (r.random_range(1..=5), r.random_range(1..=5));
                        TokenPair { query: random_ids(&mut r, lq, cfg.vocab_size), answer: random_ids(&mut r, la, cfg.vocab_size) }
                    })
                    .collect();
                if batch.iter().enumerate().all(|(i, a)| batch[..i].iter().all(|b| b.answer != a.answer)) {
                    break batch;
                }
            };
            // A low temperature keeps the softmax away from saturation.
            let t = 2.0;
            let (_, g) = mnr_loss(&p, &batch, t).unwrap();
            let num = numeric_gradient(&p, |q| mnr_loss(q, &batch, t).unwrap().0);
            relative_error(&g.to_flat(), &num)
        })
        .collect()
}

pub fn gpl_gradient_errors(instances: usize) -> Vec<f64> {
    let configs = encoder_configs();
    let mut r = rng(14);
    (0..instances)
        .map(|n| {
            let cfg = configs[n % configs.len()];
            let p = EncoderParams::init(cfg, 200 + n as u64).unwrap();
            let batch: Vec<TripletIds> = (0..1 + n % 3)
                .map(|_| {
                    let lens = [r.random_range(1..=5), r.random_range(1..=5), r.random_range(1..=5)];
                    TripletIds {
                        query: random_ids(&mut r, lens[0], cfg.vocab_size),
                        positive: random_ids(&mut r, lens[1], cfg.vocab_size),
                        negative: random_ids(&mut r, lens[2], cfg.vocab_size),
                        margin: r.random_range(-1.0..1.0),
                    }
                })
                .collect();
            let (_, g) = margin_mse_loss(&p, &batch).unwrap();
            let num = numeric_gradient(&p, |q| margin_mse_loss(q, &batch).unwrap().0);
            relative_error(&g.to_flat(), &num)
        })
        .collect()
}

pub fn mlm_gradient_errors(instances: usize) -> Vec<f64> {
    let configs = encoder_configs();
    let mut r = rng(15);
    (0..instances)
        .map(|n| {
            let cfg = configs[n % configs.len()];
            let mut p = EncoderParams::init(cfg, 300 + n as u64).unwrap();
            p.mlm_projection = random_matrix(&mut r, cfg.d_model, cfg.vocab_size);
            let len = r.random_range(2..=5);
            let original = random_ids(&mut r, len, cfg.vocab_size);
            let positions = vec![r.random_range(0..len)];
            let mut masked = original.clone();
            masked[positions[0]] = 1;
            let batch = vec![MaskedBatch { original, masked, positions, seed: 0 }];
            let (_, g) = mlm_loss(&p, &batch).unwrap();
            let num = numeric_gradient(&p, |q| mlm_loss(q, &batch).unwrap().0);
            relative_error(&g.to_flat(), &num)
        })
        .collect()
}

// ------------------------------------------------------- planted datasets

fn filler_sentence(r: &mut ChaCha8Rng, keys: &[String], prefix: &str, pool: usize, n: usize) -> String {
    let mut words: Vec<String> = (0..n).map(|_| format!("{prefix}{}", r.random_range(0..pool))).collect();
    for k in keys {
        let at = r.random_range(0..=words.len());
        words.insert(at, k.clone());
    }
    words.join(" ")
}

/// Sentences drawn from `{a1..a5}` only or from `{b1..b5}` only.
pub fn two_cluster_corpus(sentences: usize, len: usize, seed: u64) -> Vec<Vec<String>> {
    let mut r = rng(seed);
    (0..sentences)
        .map(|i| {
            let c = if i % 2 == 0 { 'a' } else { 'b' };
            (0..len).map(|_| format!("{c}{}", r.random_range(1..=5))).collect()
        })
        .collect()
}

/// `n` training pairs and `n` held-out pairs. Pair `i` shares the private
/// token `key{i}`; everything else is filler from a pool of 40 words.
pub fn planted_pairs(n: usize, seed: u64) -> (Vec<(String, String)>, Vec<ValidationPair>) {
    let mut r = rng(seed);
    let key = |i: usize| vec![format!("key{i}")];
    let train = (0..n)
        .map(|i| (filler_sentence(&mut r, &key(i), "f", 40, 5), filler_sentence(&mut r, &key(i), "f", 40, 5)))
        .collect();
    let validation = (0..n)
        .map(|i| ValidationPair {
            rule: SentenceKey::new("rule", i as u32),
            rule_text: filler_sentence(&mut r, &key(i), "f", 40, 5),
            policy: SentenceKey::new("policy", i as u32),
            policy_text: filler_sentence(&mut r, &key(i), "f", 40, 5),
            votes: 0,
        })
        .collect();
    (train, validation)
}

/// `n` paragraphs with three private words each plus six fillers, and a
/// validation set pairing a new short query (two of the private words, three
/// fresh fillers) with its paragraph.
pub fn planted_paragraphs(n: usize, seed: u64) -> (Vec<Passage>, Vec<ValidationPair>) {
    let mut r = rng(seed);
    let corpus: Vec<Passage> = (0..n)
        .map(|i| Passage {
            key: SentenceKey::new(format!("P{i}"), 0),
            text: filler_sentence(&mut r, &[format!("ka{i}"), format!("kb{i}"), format!("kc{i}")], "w", 60, 6),
        })
        .collect();
    let validation = (0..n)
        .map(|i| ValidationPair {
            rule: SentenceKey::new("query", i as u32),
            rule_text: filler_sentence(&mut r, &[format!("ka{i}"), format!("kc{i}")], "w", 60, 3),
            policy: corpus[i].key.clone(),
            policy_text: corpus[i].text.clone(),
            votes: 0,
        })
        .collect();
    (corpus, validation)
}
