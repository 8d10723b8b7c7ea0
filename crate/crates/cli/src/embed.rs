use std::path::Path;

use anyhow::bail;
use serde_json::json;

use rulematch::attention::{AttentionConfig, EncoderParams};
use rulematch::corpus::Vocabulary;
use rulematch::count_embed::{train_count_embeddings, CountEmbeddingConfig, Normalization};
use rulematch::neural_embed::{train, write_loss_log, Architecture, SgdConfig};
use rulematch::{write_vectors, NamedVectors};

use crate::args::{Backend, EmbedArgs, EncodeArgs, NormalizationArg};
use crate::io::{create_with, embed_sentences, keyed_sentences, load_embedder, read_sentence_file, read_vocab, write_encoder};
use crate::manifest;

fn training_ids(path: Option<&Path>, vocab: &Vocabulary) -> anyhow::Result<Vec<Vec<usize>>> {
    let Some(path) = path else { bail!("--sentences is required for this backend") };
    Ok(read_sentence_file(path)?.iter().map(|s| vocab.encode(&s.tokens)).collect())
}

pub fn run(a: &EmbedArgs) -> anyhow::Result<()> {
    let vocab = read_vocab(&a.vocab)?;
    let mut inputs: Vec<&Path> = vec![&a.vocab];
    inputs.extend(a.sentences.as_deref());
    let mut outputs: Vec<&Path> = vec![&a.output];
    let summary;
    match a.backend {
        Backend::Cooc => {
            let sentences = training_ids(a.sentences.as_deref(), &vocab)?;
            let cfg = CountEmbeddingConfig {
                window: a.window.unwrap_or(10),
                normalization: match a.normalization {
                    NormalizationArg::None => Normalization::None,
                    NormalizationArg::Rowl1 => Normalization::RowL1,
                    NormalizationArg::Correlation => Normalization::Correlation,
                },
                svd_rank: a.dim.unwrap_or(50).min(vocab.len()),
                count_threshold: a.count_threshold,
                ..Default::default()
            };
            let table = train_count_embeddings(&sentences, vocab.len(), &cfg)?;
            create_with(&a.output, |w| write_vectors(w, &table.to_named(&vocab)?))?;
            summary = json!({ "words": table.len(), "dim": table.dim(), "window": cfg.window });
        }
        Backend::Skipgram | Backend::Cbow => {
            let sentences = training_ids(a.sentences.as_deref(), &vocab)?;
            let cfg = SgdConfig {
                architecture: if a.backend == Backend::Cbow { Architecture::Cbow } else { Architecture::SkipGram },
                dim: a.dim.unwrap_or(50),
                window: a.window.unwrap_or(5),
                negatives: a.k_negatives,
                epochs: a.epochs,
                lr: a.lr,
                seed: a.seed,
            };
            let (model, log) = train(&sentences, &vocab, &cfg)?;
            let table = model.embeddings()?;
            create_with(&a.output, |w| write_vectors(w, &table.to_named(&vocab)?))?;
            if let Some(path) = &a.loss_log {
                create_with(path, |w| write_loss_log(w, &log))?;
                outputs.push(path);
            }
            summary = json!({
                "words": table.len(),
                "dim": table.dim(),
                "window": cfg.window,
                "final_loss": log.last().map(|e| e.mean_loss),
            });
        }
        Backend::Encoder => {
            let cfg = AttentionConfig {
                d_model: a.dim.unwrap_or(64),
                heads: a.heads,
                max_len: a.max_len,
                vocab_size: vocab.len(),
            };
            let params = EncoderParams::init(cfg, a.seed)?;
            write_encoder(&a.output, &params)?;
            summary = json!({ "parameters": params.num_parameters(), "d_e": cfg.d_model });
        }
    }
    manifest::write(
        &manifest::sidecar_path(&a.output),
        manifest::Run { command: "embed", config: a, seed: Some(a.seed), inputs, outputs, summary },
    )
}

pub fn run_encode(a: &EncodeArgs) -> anyhow::Result<()> {
    let model = load_embedder(&a.model.model, a.model.vocab.as_deref())?;
    let sentences = keyed_sentences(&a.sentences)?;
    let (names, rows): (Vec<String>, Vec<Vec<f64>>) =
        embed_sentences(model.as_ref(), &sentences).into_iter().map(|(k, v)| (k.to_string(), v)).unzip();
    if rows.is_empty() {
        bail!("{} has no sentence the model can embed", a.sentences.display());
    }
    let named = NamedVectors::from_rows(names, rows)?;
    create_with(&a.output, |w| write_vectors(w, &named))?;
    let mut inputs: Vec<&Path> = vec![&a.model.model, &a.sentences];
    inputs.extend(a.model.vocab.as_deref());
    manifest::write(
        &manifest::sidecar_path(&a.output),
        manifest::Run {
            command: "encode",
            config: a,
            seed: None,
            inputs,
            outputs: vec![&a.output],
            summary: json!({ "sentences": named.len(), "dim": named.dim() }),
        },
    )
}
