use std::path::Path;

use anyhow::{bail, Context};
use serde_json::json;

use rulematch::adapt::{
    fine_tune_mnr, gpl_pipeline, mask_corpus, mlm_pretrain, write_triplets, CrossScorer, EncoderScorer,
    ExtractiveGenerator, GplConfig, LexicalScorer, MlmConfig, MnrConfig, Passage, TfIdf, TokenPair,
};
use rulematch::attention::{EncoderParams, TextEncoder};
use rulematch::eval::read_validation;
use rulematch::neural_embed::{write_loss_log, EpochLoss};
use rulematch::search::SentenceKey;

use crate::args::{FinetuneArgs, Method, Teacher};
use crate::io::{create_with, open, read_encoder, read_sentence_file, write_encoder};
use crate::manifest;

struct Trained {
    params: EncoderParams,
    losses: Vec<EpochLoss>,
    summary: serde_json::Value,
}

fn mnr(a: &FinetuneArgs, encoder: &TextEncoder, pairs_path: &Path) -> anyhow::Result<Trained> {
    let d = MnrConfig::default();
    let cfg = MnrConfig {
        epochs: a.epochs.unwrap_or(d.epochs),
        batch_size: a.batch_size.unwrap_or(d.batch_size),
        lr: a.lr.unwrap_or(d.lr),
        temperature: a.temperature,
        seed: a.seed,
    };
    let pairs = read_validation(open(pairs_path)?).with_context(|| format!("reading pairs {}", pairs_path.display()))?;
    let tokens: Vec<TokenPair> = pairs
        .iter()
        .map(|p| TokenPair { query: encoder.token_ids(&p.rule_text), answer: encoder.token_ids(&p.policy_text) })
        .filter(|p| !p.query.is_empty() && !p.answer.is_empty())
        .collect();
    let (params, losses) = fine_tune_mnr(&encoder.params, &tokens, &cfg)?;
    Ok(Trained { params, losses, summary: json!({ "pairs": tokens.len(), "lr": cfg.lr, "batch_size": cfg.batch_size }) })
}

fn mlm(a: &FinetuneArgs, encoder: &TextEncoder, sentences: &Path) -> anyhow::Result<Trained> {
    let d = MlmConfig::default();
    let cfg = MlmConfig {
        epochs: a.epochs.unwrap_or(d.epochs),
        batch_size: a.batch_size.unwrap_or(d.batch_size),
        lr: a.lr.unwrap_or(d.lr),
        seed: a.seed,
    };
    let ids: Vec<Vec<usize>> = read_sentence_file(sentences)?.iter().map(|s| encoder.token_ids(&s.text)).collect();
    let batches = mask_corpus(&ids, a.mask_fraction, a.seed)?;
    let (params, losses) = mlm_pretrain(&encoder.params, &batches, &cfg)?;
    Ok(Trained { params, losses, summary: json!({ "sentences": batches.len(), "lr": cfg.lr, "batch_size": cfg.batch_size }) })
}

fn gpl(a: &FinetuneArgs, encoder: &TextEncoder, sentences: &Path) -> anyhow::Result<Trained> {
    let d = GplConfig::default();
    let cfg = GplConfig {
        n_queries: a.n_queries,
        m_negatives: a.m_negatives,
        epochs: a.epochs.unwrap_or(d.epochs),
        batch_size: a.batch_size.unwrap_or(d.batch_size),
        lr: a.lr.unwrap_or(d.lr),
        seed: a.seed,
    };
    let corpus: Vec<Passage> = read_sentence_file(sentences)?
        .into_iter()
        .map(|s| Passage { key: SentenceKey::new(s.doc_id, s.seq), text: s.text })
        .collect();
    let texts: Vec<&str> = corpus.iter().map(|p| p.text.as_str()).collect();
    let generator = ExtractiveGenerator::fit(&texts);
    let scorer: Box<dyn CrossScorer> = match a.teacher {
        Teacher::Lexical => Box::new(LexicalScorer { tfidf: TfIdf::fit(&texts) }),
        Teacher::Encoder => {
            let teacher = match &a.teacher_checkpoint {
                Some(path) => read_encoder(path, &a.vocab)?,
                None => encoder.clone(),
            };
            Box::new(EncoderScorer { encoder: teacher })
        }
    };
    let out = gpl_pipeline(&corpus, &generator, scorer.as_ref(), encoder, &cfg)?;
    if let Some(path) = &a.triplets_out {
        create_with(path, |w| write_triplets(w, &out.triplets))?;
    }
    Ok(Trained {
        params: out.params,
        losses: out.losses,
        summary: json!({
            "paragraphs": corpus.len(),
            "queries": out.queries.len(),
            "triplets": out.triplets.len(),
            "lr": cfg.lr,
            "batch_size": cfg.batch_size,
        }),
    })
}

pub fn run(a: &FinetuneArgs) -> anyhow::Result<()> {
    let encoder = read_encoder(&a.checkpoint, &a.vocab)?;
    let mut inputs: Vec<&Path> = vec![&a.checkpoint, &a.vocab];
    let trained = match a.method {
        Method::Mnr => {
            let Some(pairs) = &a.pairs else { bail!("--method mnr needs --pairs") };
            inputs.push(pairs);
            mnr(a, &encoder, pairs)?
        }
        Method::Mlm | Method::Gpl => {
            let Some(sentences) = &a.sentences else { bail!("--method {:?} needs --sentences", a.method) };
            inputs.push(sentences);
            if a.method == Method::Mlm {
                mlm(a, &encoder, sentences)?
            } else {
                inputs.extend(a.teacher_checkpoint.as_deref());
                gpl(a, &encoder, sentences)?
            }
        }
    };
    write_encoder(&a.output, &trained.params)?;
    let mut outputs: Vec<&Path> = vec![&a.output];
    if let Some(path) = &a.loss_log {
        create_with(path, |w| write_loss_log(w, &trained.losses))?;
        outputs.push(path);
    }
    if a.method == Method::Gpl {
        outputs.extend(a.triplets_out.as_deref());
    }
    if let (Some(first), Some(last)) = (trained.losses.first(), trained.losses.last()) {
        eprintln!("epoch loss {:.6} -> {:.6} over {} epochs", first.mean_loss, last.mean_loss, trained.losses.len());
    }
    manifest::write(
        &manifest::sidecar_path(&a.output),
        manifest::Run {
            command: "finetune",
            config: a,
            seed: Some(a.seed),
            inputs,
            outputs,
            summary: json!({
                "method": a.method,
                "epochs": trained.losses.len(),
                "final_loss": trained.losses.last().map(|e| e.mean_loss),
                "data": trained.summary,
            }),
        },
    )
}
