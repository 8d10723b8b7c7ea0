#![allow(dead_code)]

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use rulematch::{write_vectors, NamedVectors};

pub const BIN: &str = env!("CARGO_BIN_EXE_rulematch");

pub fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().expect("binary runs")
}

pub fn run_ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "rulematch {args:?} failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn read_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(String::from).collect()
}

/// A sentence of exactly `len` characters ending in a period.
fn sentence(tag: &str, len: usize) -> String {
    let mut s = format!("The {tag} liquidity report covers");
    while s.len() + 8 < len {
        s.push_str(" assets");
    }
    let pad = len - 2 - s.len();
    format!("{s} {}.", "z".repeat(pad))
}

/// Sentences of 149, 149 and 150 characters joined by spaces: 450 characters.
pub fn long_text() -> String {
    [sentence("first", 149), sentence("second", 149), sentence("third", 150)].join(" ")
}

/// Two rules and one long policy.
pub fn write_corpus(dir: &Path) -> PathBuf {
    let docs = [
        serde_json::json!({"doc_id": "r1", "kind": "rule", "text": "A fund must hold enough liquid assets to meet redemptions. Managers report liquidity risk every quarter."}),
        serde_json::json!({"doc_id": "r2", "kind": "rule", "text": "Investment advisers keep books and records for five years."}),
        serde_json::json!({"doc_id": "p1", "kind": "policy", "text": long_text()}),
    ];
    let path = dir.join("corpus.jsonl");
    let body: String = docs.iter().map(|d| format!("{d}\n")).collect();
    std::fs::write(&path, body).unwrap();
    path
}

/// `n` one-sentence paragraphs, each with three private words and six shared fillers.
pub fn write_paragraphs(path: &Path, n: usize) {
    let mut body = String::new();
    for i in 0..n {
        let fillers: Vec<String> = (0..6).map(|j| format!("w{}", (i * 7 + j * 3) % 20)).collect();
        let text = format!("ka{i} kb{i} kc{i} {}", fillers.join(" "));
        body.push_str(&serde_json::json!({"doc_id": format!("d{i}"), "seq": 0, "text": text}).to_string());
        body.push('\n');
    }
    std::fs::write(path, body).unwrap();
}

pub fn write_named(path: &Path, names: Vec<String>, rows: Vec<Vec<f64>>) {
    let v = NamedVectors::from_rows(names, rows).unwrap();
    write_vectors(BufWriter::new(File::create(path).unwrap()), &v).unwrap();
}

pub fn gaussian_rows(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect()).collect()
}

/// Sentence vectors named `prefix#i`.
pub fn write_sentence_vectors(path: &Path, prefix: &str, rows: Vec<Vec<f64>>) {
    let names = (0..rows.len()).map(|i| format!("{prefix}#{i}")).collect();
    write_named(path, names, rows);
}

/// One-hot word vectors for `w0 … w(n-1)`.
pub fn write_one_hot_words(path: &Path, n: usize) {
    let names = (0..n).map(|i| format!("w{i}")).collect();
    let rows = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    write_named(path, names, rows);
}

/// Validation pairs `("w i", "w i")`.
pub fn write_oracle_pairs(path: &Path, n: usize) {
    let body: String = (0..n)
        .map(|i| format!("{}\n", serde_json::json!({"rule_text": format!("w{i}"), "policy_text": format!("w{i}"), "votes": 1})))
        .collect();
    std::fs::write(path, body).unwrap();
}

/// Runs every subcommand once inside `dir` and returns the primary outputs.
pub fn full_pipeline(dir: &Path) -> Vec<PathBuf> {
    write_corpus(dir);
    write_paragraphs(&dir.join("paragraphs.jsonl"), 10);
    let steps: &[&[&str]] = &[
        &["ingest", "--input", "corpus.jsonl", "--out-dir", "out"],
        &["embed", "--backend", "cooc", "--sentences", "out/sentences.jsonl", "--vocab", "out/vocab.tsv", "--output", "cooc.vec", "--dim", "8"],
        &["embed", "--backend", "skipgram", "--sentences", "out/sentences.jsonl", "--vocab", "out/vocab.tsv", "--output", "sg.vec", "--dim", "8", "--epochs", "3", "--loss-log", "sg.loss.jsonl"],
        &["embed", "--backend", "encoder", "--vocab", "out/vocab.tsv", "--output", "enc.ckpt", "--dim", "16", "--heads", "2", "--max-len", "32"],
        &["encode", "--model", "enc.ckpt", "--vocab", "out/vocab.tsv", "--sentences", "out/rules.jsonl", "--output", "rules.vec"],
        &["match", "--model", "cooc.vec", "--rules", "out/rules.jsonl", "--policies", "out/policies.jsonl", "--tau", "0.1", "--output", "match.jsonl", "--table", "match.txt"],
        &["pseudo-label", "--models", "mock:5,cooc.vec,sg.vec", "--rules", "out/rules.jsonl", "--policies", "out/policies.jsonl", "--tau", "0.0", "--output", "pairs.jsonl", "--train-out", "train.jsonl", "--validation-out", "valid.jsonl", "--train-fraction", "0.5"],
        &["finetune", "--method", "mnr", "--checkpoint", "enc.ckpt", "--vocab", "out/vocab.tsv", "--pairs", "pairs.jsonl", "--output", "mnr.ckpt", "--loss-log", "mnr.loss.jsonl", "--epochs", "3"],
        &["finetune", "--method", "mlm", "--checkpoint", "enc.ckpt", "--vocab", "out/vocab.tsv", "--sentences", "out/sentences.jsonl", "--output", "mlm.ckpt", "--loss-log", "mlm.loss.jsonl", "--epochs", "2"],
        &["embed", "--backend", "encoder", "--vocab", "pvocab.tsv", "--output", "penc.ckpt", "--dim", "16", "--heads", "2", "--max-len", "16"],
        &["finetune", "--method", "gpl", "--checkpoint", "penc.ckpt", "--vocab", "pvocab.tsv", "--sentences", "paragraphs.jsonl", "--output", "gpl.ckpt", "--loss-log", "gpl.loss.jsonl", "--triplets-out", "triplets.jsonl", "--epochs", "2"],
        &["evaluate", "--model", "enc.ckpt", "--vocab", "out/vocab.tsv", "--validation", "pairs.jsonl", "--output", "base.json"],
        &["evaluate", "--model", "mnr.ckpt", "--vocab", "out/vocab.tsv", "--validation", "pairs.jsonl", "--baseline", "base.json", "--output", "report.json"],
    ];
    write_paragraph_vocab(dir);
    for args in steps {
        run_ok(dir, args);
    }
    [
        "out/sentences.jsonl", "out/rules.jsonl", "out/policies.jsonl", "out/vocab.tsv", "cooc.vec", "sg.vec",
        "sg.loss.jsonl", "enc.ckpt", "rules.vec", "match.jsonl", "match.txt", "pairs.jsonl", "train.jsonl",
        "valid.jsonl", "mnr.ckpt", "mnr.loss.jsonl", "mlm.ckpt", "mlm.loss.jsonl", "penc.ckpt", "gpl.ckpt",
        "gpl.loss.jsonl", "triplets.jsonl", "base.json", "report.json",
    ]
    .iter()
    .map(|p| dir.join(p))
    .collect()
}

/// Vocabulary of the paragraphs file, built the way `ingest` builds one.
pub fn write_paragraph_vocab(dir: &Path) {
    let sentences = rulematch::corpus::read_sentences(std::io::BufReader::new(
        File::open(dir.join("paragraphs.jsonl")).unwrap(),
    ))
    .unwrap();
    let vocab = rulematch::corpus::Vocabulary::build(&sentences, 1).unwrap();
    vocab.write_tsv(BufWriter::new(File::create(dir.join("pvocab.tsv")).unwrap())).unwrap();
}
