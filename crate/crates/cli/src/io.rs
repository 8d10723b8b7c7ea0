//! File helpers shared by the commands.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context};

use rulematch::attention::{read_checkpoint, write_checkpoint, EncoderParams, TextEncoder};
use rulematch::corpus::{read_sentences, SentenceRecord, Vocabulary};
use rulematch::eval::{EncoderModel, SentenceEmbedder, WordVectorModel};
use rulematch::search::SentenceKey;
use rulematch::{read_vectors, NamedVectors};

pub fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

/// Writes through `body` into `path`, flushing before returning.
pub fn create_with(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> rulematch::Result<()>,
) -> anyhow::Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(f);
    body(&mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_vocab(path: &Path) -> anyhow::Result<Vocabulary> {
    Vocabulary::read_tsv(open(path)?).with_context(|| format!("reading vocabulary {}", path.display()))
}

pub fn read_sentence_file(path: &Path) -> anyhow::Result<Vec<SentenceRecord>> {
    read_sentences(open(path)?).with_context(|| format!("reading sentences {}", path.display()))
}

/// Sentences as `(doc_id#seq, text)`.
pub fn keyed_sentences(path: &Path) -> anyhow::Result<Vec<(SentenceKey, String)>> {
    Ok(read_sentence_file(path)?
        .into_iter()
        .map(|s| (SentenceKey::new(s.doc_id, s.seq), s.text))
        .collect())
}

pub fn read_vector_file(path: &Path) -> anyhow::Result<NamedVectors> {
    read_vectors(open(path)?).with_context(|| format!("reading vectors {}", path.display()))
}

pub fn read_encoder(path: &Path, vocab: &Path) -> anyhow::Result<TextEncoder> {
    let (_, params) = read_checkpoint(open(path)?).with_context(|| format!("reading checkpoint {}", path.display()))?;
    Ok(TextEncoder::new(params, read_vocab(vocab)?)?)
}

pub fn write_encoder(path: &Path, params: &EncoderParams) -> anyhow::Result<()> {
    create_with(path, |w| write_checkpoint(w, params))
}

fn is_checkpoint(path: &Path) -> anyhow::Result<bool> {
    let mut first = [0u8; 1];
    let n = open(path)?.read(&mut first).with_context(|| format!("reading {}", path.display()))?;
    Ok(n == 1 && first[0] == b'{')
}

/// A model's id is the file name, so moving files around does not change outputs.
pub fn model_id(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

/// Loads a word vectors file or, given its vocabulary, an encoder checkpoint.
pub fn load_embedder(path: &Path, vocab: Option<&Path>) -> anyhow::Result<Box<dyn SentenceEmbedder>> {
    let id = model_id(path);
    if is_checkpoint(path)? {
        let Some(vocab) = vocab else {
            bail!("{} is an encoder checkpoint; pass its --vocab", path.display())
        };
        Ok(Box::new(EncoderModel { id, encoder: read_encoder(path, vocab)? }))
    } else {
        Ok(Box::new(WordVectorModel::new(id, read_vector_file(path)?)?))
    }
}

/// Embeds every sentence, skipping (with a warning) those the model cannot
/// place: no known words, or a zero vector.
pub fn embed_sentences(
    model: &dyn SentenceEmbedder,
    sentences: &[(SentenceKey, String)],
) -> Vec<(SentenceKey, Vec<f64>)> {
    let mut out = Vec::with_capacity(sentences.len());
    for (key, text) in sentences {
        match model.embed(text) {
            Ok(v) if v.iter().all(|x| *x == 0.0) => eprintln!("warning: skipping {key}: zero vector"),
            Ok(v) => out.push((key.clone(), v)),
            Err(e) => eprintln!("warning: skipping {key}: {e}"),
        }
    }
    out
}

/// Sentence vectors from a vectors file whose rows are named `doc_id#seq`.
pub fn read_sentence_vectors(path: &Path) -> anyhow::Result<Vec<(SentenceKey, Vec<f64>)>> {
    let named = read_vector_file(path)?;
    named
        .names
        .iter()
        .zip(named.vectors.rows())
        .map(|(name, row)| {
            let key = SentenceKey::parse(name).with_context(|| format!("{}: row {name:?}", path.display()))?;
            Ok((key, row.to_vec()))
        })
        .collect()
}
