//! One PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;
mod common;

use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::Rng;

use rulematch::adapt::{
    fine_tune_mnr, gpl_pipeline, mnr_loss_from_scores, ExtractiveGenerator, GplConfig, LexicalScorer, MnrConfig,
    Passage, TfIdf, TokenPair,
};
use rulematch::attention::{AttentionConfig, EncoderParams, TextEncoder};
use rulematch::corpus::{tokenize, Vocabulary};
use rulematch::count_embed::{build_cooccurrence, CountEmbeddingConfig};
use rulematch::eval::{
    ensemble_pseudo_label, improvement_ratio, score1, score1_vectors, score2, score2_vectors, EncoderModel,
    MockModel, SentenceEmbedder, ValidationPair, VoteCut,
};
use rulematch::linalg::{truncated_svd, SvdOptions};
use rulematch::neural_embed::{self, Architecture, SgdConfig};
use rulematch::search::{cosine_similarity, threshold_match, SentenceKey, VectorIndex};
use support::*;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(limit: Duration, started: Instant) -> Result<Duration, String> {
    let took = started.elapsed();
    ensure(took < limit, format!("took {took:.1?}, limit {limit:?}"))?;
    Ok(took)
}

fn encoder_for(texts: &[&str], cfg: impl Fn(usize) -> AttentionConfig, seed: u64) -> TextEncoder {
    let toks: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t)).collect();
    let vocab = Vocabulary::from_token_lists(toks.iter().map(|t| t.as_slice()), 1).unwrap();
    let config = cfg(vocab.len());
    TextEncoder::new(EncoderParams::init(config, seed).unwrap(), vocab).unwrap()
}

fn gradients() -> Outcome {
    let started = Instant::now();
    let sweeps = [
        ("attention", attention_gradient_errors(120)),
        ("negative sampling", negative_sampling_gradient_errors(100)),
        ("ranking", mnr_gradient_errors(100)),
        ("margin", gpl_gradient_errors(100)),
    ];
    let mut parts = Vec::new();
    for (name, errors) in &sweeps {
        ensure(errors.len() >= 100, format!("{name}: only {} instances", errors.len()))?;
        let worst = errors.iter().cloned().fold(0.0, f64::max);
        ensure(worst < 1e-4, format!("{name}: worst relative error {worst:e}"))?;
        parts.push(format!("{name} {worst:.1e}"));
    }
    let took = within(Duration::from_secs(30), started)?;
    Ok(format!("{} ({took:.1?})", parts.join(", ")))
}

fn oracle_equivalence() -> Outcome {
    let mut r = rng(1);
    // (a) co-occurrence.
    for window in [1, 3, 10] {
        let mut corpus = Vec::new();
        let mut left = 1000;
        while left > 0 {
            let len = r.random_range(1..=12usize).min(left);
            corpus.push((0..len).map(|_| r.random_range(0..30)).collect::<Vec<usize>>());
            left -= len;
        }
        let m = build_cooccurrence(&corpus, 30, &CountEmbeddingConfig { window, ..Default::default() }).unwrap();
        let oracle = naive_cooccurrence(&corpus, 30, window);
        ensure(
            (0..30).all(|i| (0..30).all(|j| m.get(i, j) == oracle[i][j])),
            format!("(a) co-occurrence differs at window {window}"),
        )?;
    }
    // (b) truncated SVD.
    let mut worst_svd: f64 = 0.0;
    for _ in 0..10 {
        let a = Array2::from_shape_fn((20, 20), |_| r.random_range(-1.0..1.0));
        let svd = truncated_svd(&a, 5, &SvdOptions::default()).unwrap();
        let oracle = jacobi_singular_values(&a);
        for i in 0..5 {
            worst_svd = worst_svd.max((svd.s[i] - oracle[i]).abs() / oracle[i]);
        }
    }
    ensure(worst_svd < 1e-6, format!("(b) singular values off by {worst_svd:e}"))?;
    // (c) retrieval.
    let items: Vec<(SentenceKey, Vec<f64>)> = (0..500)
        .map(|i| (SentenceKey::new("p", i), (0..8).map(|_| r.random_range(-1.0..1.0)).collect()))
        .collect();
    let index = VectorIndex::build(items.clone()).unwrap();
    for _ in 0..20 {
        let q: Vec<f64> = (0..8).map(|_| r.random_range(-1.0..1.0)).collect();
        let oracle = naive_ranking(&items, &q);
        let top = index.query_top_k(&q, 25).unwrap();
        ensure(top.iter().zip(&oracle).all(|(h, (k, _))| &h.key == k), "(c) top-k order differs")?;
    }
    let rules: Vec<(SentenceKey, Vec<f64>)> = (0..40)
        .map(|i| (SentenceKey::new("r", i), (0..8).map(|_| r.random_range(-1.0..1.0)).collect()))
        .collect();
    let matches = threshold_match(&index, &rules, 0.5).unwrap();
    let expected: Vec<(SentenceKey, SentenceKey)> = rules
        .iter()
        .flat_map(|(rk, v)| {
            naive_ranking(&items, v).into_iter().filter(|(_, s)| *s >= 0.5).map(move |(pk, _)| (rk.clone(), pk))
        })
        .collect();
    let got: Vec<(SentenceKey, SentenceKey)> = matches.into_iter().map(|m| (m.rule, m.policy)).collect();
    ensure(got == expected, format!("(c) threshold matches {} vs oracle {}", got.len(), expected.len()))?;
    // (d) ensemble retention.
    let sentences = |prefix: &str, n: usize, r: &mut rand_chacha::ChaCha8Rng| -> Vec<(SentenceKey, String)> {
        (0..n)
            .map(|i| {
                let words: Vec<String> = (0..4).map(|_| format!("w{}", r.random_range(0..12))).collect();
                (SentenceKey::new(prefix, i as u32), words.join(" "))
            })
            .collect()
    };
    let rule_texts = sentences("R", 20, &mut r);
    let policy_texts = sentences("P", 20, &mut r);
    let mocks = MockModel::ensemble(10, 16);
    let refs: Vec<&dyn SentenceEmbedder> = mocks.iter().map(|m| m as &dyn SentenceEmbedder).collect();
    let vectors: Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)> = mocks
        .iter()
        .map(|m| {
            (
                rule_texts.iter().map(|(_, t)| m.embed(t).unwrap()).collect(),
                policy_texts.iter().map(|(_, t)| m.embed(t).unwrap()).collect(),
            )
        })
        .collect();
    let mut retained = 0;
    for tau in [0.5, 0.7] {
        let want: Vec<(usize, usize, u32)> =
            naive_votes(&vectors, tau).into_iter().filter(|(_, v)| *v >= 4).map(|((a, b), v)| (a, b, v)).collect();
        let got: Vec<(usize, usize, u32)> = ensemble_pseudo_label(&refs, &rule_texts, &policy_texts, tau, VoteCut::Auto)
            .unwrap()
            .into_iter()
            .map(|p| (p.rule.seq as usize, p.policy.seq as usize, p.votes))
            .collect();
        ensure(got == want, format!("(d) ensemble differs at tau {tau}"))?;
        retained += got.len();
    }
    Ok(format!("(a)-(d) exact; worst singular value error {worst_svd:.1e}; {retained} pairs retained"))
}

fn formula_anchors() -> Outcome {
    let mut r = rng(2);
    let v: Vec<f64> = (0..10).map(|_| r.random_range(-5.0..5.0)).collect();
    let self_cos = cosine_similarity(&v, &v).unwrap();
    ensure((self_cos - 1.0).abs() < 1e-12, format!("cos(v, v) = {self_cos}"))?;
    for k in [2usize, 8, 32] {
        let (loss, _) = mnr_loss_from_scores(&Array2::from_elem((k, k), 0.3)).unwrap();
        ensure((loss - (k as f64).ln()).abs() < 1e-10, format!("uniform ranking loss {loss} at K = {k}"))?;
    }
    let a = 100.0 * improvement_ratio(0.27, 0.21).unwrap();
    let b = 100.0 * improvement_ratio(0.56, 0.46).unwrap();
    ensure((a - 29.0).abs() <= 0.5 && (b - 22.0).abs() <= 0.5, format!("improvements {a:.2}% and {b:.2}%"))?;
    let cut = VoteCut::Auto.min_votes(10);
    ensure(cut == 4, format!("vote cut {cut} for N = 10"))?;
    Ok(format!("improvements {a:.1}% and {b:.1}%, vote cut {cut}"))
}

fn planted_clusters() -> Outcome {
    let started = Instant::now();
    let corpus = two_cluster_corpus(200, 8, 3);
    let vocab = Vocabulary::from_token_lists(corpus.iter().map(|s| s.as_slice()), 1).unwrap();
    let ids: Vec<Vec<usize>> = corpus.iter().map(|s| vocab.encode(s)).collect();
    let config = SgdConfig { architecture: Architecture::SkipGram, dim: 16, window: 3, negatives: 5, epochs: 30, lr: 0.0025, seed: 3 };
    let (model, _) = neural_embed::train(&ids, &vocab, &config).unwrap();
    let table = model.embeddings().unwrap();
    let vec = |w: String| table.word_vector(vocab.id(&w)).unwrap().to_vec();
    let (mut within_sum, mut across_sum, mut nw, mut na) = (0.0, 0.0, 0, 0);
    for a in 1..=5 {
        for b in 1..=5 {
            across_sum += cosine_similarity(&vec(format!("a{a}")), &vec(format!("b{b}"))).unwrap();
            na += 1;
            if a < b {
                within_sum += cosine_similarity(&vec(format!("a{a}")), &vec(format!("a{b}"))).unwrap();
                within_sum += cosine_similarity(&vec(format!("b{a}")), &vec(format!("b{b}"))).unwrap();
                nw += 2;
            }
        }
    }
    let gap = within_sum / nw as f64 - across_sum / na as f64;
    ensure(gap >= 0.3, format!("cluster gap {gap:.3}"))?;
    let took = within(Duration::from_secs(60), started)?;
    Ok(format!("gap {gap:.3} after 30 epochs ({took:.1?})"))
}

fn encoder_scores(encoder: &TextEncoder, validation: &[ValidationPair]) -> (f64, f64) {
    let m = EncoderModel { id: "encoder".into(), encoder: encoder.clone() };
    (score1(&m, validation, 0).unwrap(), score2(&m, validation).unwrap())
}

fn mnr_direction() -> Outcome {
    let started = Instant::now();
    let (train, validation) = planted_pairs(200, 11);
    let mut texts: Vec<&str> = train.iter().flat_map(|(a, b)| [a.as_str(), b.as_str()]).collect();
    texts.extend(validation.iter().flat_map(|p| [p.rule_text.as_str(), p.policy_text.as_str()]));
    let enc = encoder_for(&texts, |v| AttentionConfig { d_model: 32, heads: 4, max_len: 16, vocab_size: v }, 7);
    let pairs: Vec<TokenPair> =
        train.iter().map(|(a, b)| TokenPair { query: enc.token_ids(a), answer: enc.token_ids(b) }).collect();
    let (s1_before, s2_before) = encoder_scores(&enc, &validation);
    let config = MnrConfig { epochs: 20, lr: 5e-3, ..MnrConfig::default() };
    let (params, _) = fine_tune_mnr(&enc.params, &pairs, &config).unwrap();
    let tuned = TextEncoder::new(params, enc.vocab.clone()).unwrap();
    let (s1_after, s2_after) = encoder_scores(&tuned, &validation);
    let summary = format!("S1 {s1_before:.3} -> {s1_after:.3}, S2 {s2_before:.3} -> {s2_after:.3}");
    ensure(s1_after > s1_before && s2_after > s2_before, summary.clone())?;
    let took = within(Duration::from_secs(120), started)?;
    Ok(format!("{summary} ({took:.1?})"))
}

fn gpl_direction() -> Outcome {
    let started = Instant::now();
    let (corpus, validation): (Vec<Passage>, Vec<ValidationPair>) = planted_paragraphs(50, 21);
    let mut texts: Vec<&str> = corpus.iter().map(|p| p.text.as_str()).collect();
    let corpus_texts = texts.clone();
    texts.extend(validation.iter().map(|p| p.rule_text.as_str()));
    let enc = encoder_for(&texts, |v| AttentionConfig { d_model: 32, heads: 4, max_len: 16, vocab_size: v }, 5);
    let gen = ExtractiveGenerator::fit(&corpus_texts);
    let scorer = LexicalScorer { tfidf: TfIdf::fit(&corpus_texts) };
    let config = GplConfig { n_queries: 3, m_negatives: 4, epochs: 30, ..GplConfig::default() };
    let out = gpl_pipeline(&corpus, &gen, &scorer, &enc, &config).unwrap();
    for p in &corpus {
        let n = out.triplets.iter().filter(|t| t.positive == p.text).count();
        ensure(n == 12, format!("paragraph {} has {n} triplets", p.key))?;
    }
    let (first, last) = (out.losses[0].mean_loss, out.losses[out.losses.len() - 1].mean_loss);
    let reduction = 1.0 - last / first;
    ensure(out.losses.len() == 30 && reduction >= 0.5, format!("loss {first:.4} -> {last:.4}"))?;
    let (_, s2_before) = encoder_scores(&enc, &validation);
    let tuned = TextEncoder::new(out.params, enc.vocab.clone()).unwrap();
    let (_, s2_after) = encoder_scores(&tuned, &validation);
    let summary = format!(
        "{} triplets, loss -{:.0}%, S2 {s2_before:.3} -> {s2_after:.3}",
        out.triplets.len(),
        100.0 * reduction
    );
    ensure(s2_after >= s2_before, summary.clone())?;
    let took = within(Duration::from_secs(180), started)?;
    Ok(format!("{summary} ({took:.1?})"))
}

fn calibration() -> Outcome {
    let basis = |n: usize| -> Vec<Vec<f64>> { (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect() };
    let e = basis(20);
    let keys: Vec<SentenceKey> = (0..20).map(|i| SentenceKey::new("policy", i)).collect();
    let (s1, s2) = (score1_vectors(&e, &e, 0).unwrap(), score2_vectors(&e, &e, &keys).unwrap());
    ensure(s1 == 1.0 && s2 == 1.0, format!("oracle S1 {s1}, S2 {s2}"))?;
    let constant = vec![vec![1.0, 2.0, 3.0]; 20];
    let c1 = score1_vectors(&constant, &constant, 0).unwrap();
    ensure(c1 == 0.0, format!("constant S1 {c1}"))?;
    let n = 352;
    let mut r = rng(3);
    let mut draw = || -> Vec<Vec<f64>> { (0..n).map(|_| (0..16).map(|_| r.random_range(-1.0..1.0)).collect()).collect() };
    let (a, b) = (draw(), draw());
    let keys: Vec<SentenceKey> = (0..n as u32).map(|i| SentenceKey::new("policy", i)).collect();
    let rand2 = score2_vectors(&a, &b, &keys).unwrap();
    ensure(rand2 < 0.05, format!("random S2 {rand2}"))?;
    Ok(format!("oracle 1/1, constant S1 0, random S2 {rand2:.4} at N = {n}"))
}

fn cli_determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = common::full_pipeline(a.path());
    let second = common::full_pipeline(b.path());
    for (x, y) in first.iter().zip(&second) {
        ensure(
            std::fs::read(x).unwrap() == std::fs::read(y).unwrap(),
            format!("{} differs between runs", x.file_name().unwrap().to_string_lossy()),
        )?;
    }
    Ok(format!("{} primary outputs identical over two runs of every command", first.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("gradient correctness", gradients),
        ("oracle equivalence", oracle_equivalence),
        ("formula anchors", formula_anchors),
        ("planted-structure learning", planted_clusters),
        ("ranking fine-tuning raises both scores", mnr_direction),
        ("pseudo-labeling adaptation", gpl_direction),
        ("oracle-score calibration", calibration),
        ("determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                println!("FAIL {name}: {detail}");
                failed += 1;
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
