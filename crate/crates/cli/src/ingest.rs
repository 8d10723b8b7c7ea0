use std::collections::HashMap;

use anyhow::Context;
use serde_json::json;

use rulematch::corpus::{read_documents, write_sentences, DocKind, SplitWarning, Splitter, Vocabulary};

use crate::args::IngestArgs;
use crate::io::{create_with, open};
use crate::manifest;

pub fn run(a: &IngestArgs) -> anyhow::Result<()> {
    let docs = read_documents(open(&a.input)?).with_context(|| format!("reading corpus {}", a.input.display()))?;
    if docs.is_empty() {
        return Err(rulematch::Error::EmptyCorpus).with_context(|| format!("corpus {}", a.input.display()));
    }
    let splitter = Splitter::new(a.max_len);
    let kinds: HashMap<&str, DocKind> = docs.iter().map(|d| (d.doc_id.as_str(), d.kind)).collect();
    let mut sentences = Vec::new();
    for doc in &docs {
        let (mut pieces, warnings) = splitter.sentences(doc);
        for w in warnings {
            match w {
                SplitWarning::HardCut { doc_id, char_offset } => {
                    eprintln!("warning: {doc_id}: word longer than {} characters cut at {char_offset}", a.max_len)
                }
                SplitWarning::NoTokens { doc_id, text } => {
                    eprintln!("warning: {doc_id}: dropped piece without words {text:?}")
                }
            }
        }
        sentences.append(&mut pieces);
    }
    let vocab = Vocabulary::build(&sentences, a.min_count)?;
    let (rules, policies): (Vec<_>, Vec<_>) =
        sentences.iter().cloned().partition(|s| kinds[s.doc_id.as_str()] == DocKind::Rule);

    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let all_path = a.out_dir.join("sentences.jsonl");
    let rules_path = a.out_dir.join("rules.jsonl");
    let policies_path = a.out_dir.join("policies.jsonl");
    let vocab_path = a.out_dir.join("vocab.tsv");
    create_with(&all_path, |w| write_sentences(w, &sentences))?;
    create_with(&rules_path, |w| write_sentences(w, &rules))?;
    create_with(&policies_path, |w| write_sentences(w, &policies))?;
    create_with(&vocab_path, |w| vocab.write_tsv(w))?;
    eprintln!(
        "{} documents -> {} sentences ({} rule, {} policy), {} vocabulary entries",
        docs.len(),
        sentences.len(),
        rules.len(),
        policies.len(),
        vocab.len()
    );
    manifest::write(
        &a.out_dir.join("ingest.manifest.json"),
        manifest::Run {
            command: "ingest",
            config: a,
            seed: None,
            inputs: vec![&a.input],
            outputs: vec![&all_path, &rules_path, &policies_path, &vocab_path],
            summary: json!({
                "documents": docs.len(),
                "sentences": sentences.len(),
                "rule_sentences": rules.len(),
                "policy_sentences": policies.len(),
                "vocabulary": vocab.len(),
            }),
        },
    )
}
