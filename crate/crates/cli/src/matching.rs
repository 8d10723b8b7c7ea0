use std::collections::HashMap;
use std::path::Path;

use anyhow::bail;
use serde_json::json;

use rulematch::search::{threshold_match, write_match_report, write_match_table, SentenceKey, VectorIndex};

use crate::args::MatchArgs;
use crate::io::{create_with, embed_sentences, keyed_sentences, load_embedder, read_sentence_vectors};
use crate::manifest;

const TABLE_WIDTH: usize = 60;

pub fn run(a: &MatchArgs) -> anyhow::Result<()> {
    let rule_texts = a.rules.as_deref().map(keyed_sentences).transpose()?;
    let policy_texts = a.policies.as_deref().map(keyed_sentences).transpose()?;
    let mut inputs: Vec<&Path> = Vec::new();
    let (rules, policies) = match (&a.model, &a.rule_vectors, &a.policy_vectors) {
        (Some(model), _, _) => {
            let model = load_embedder(model, a.vocab.as_deref())?;
            let (Some(r), Some(p)) = (&rule_texts, &policy_texts) else {
                bail!("--model needs --rules and --policies")
            };
            inputs.extend(a.model.as_deref());
            inputs.extend(a.vocab.as_deref());
            (embed_sentences(model.as_ref(), r), embed_sentences(model.as_ref(), p))
        }
        (None, Some(r), Some(p)) => {
            inputs.extend([r.as_path(), p.as_path()]);
            (read_sentence_vectors(r)?, read_sentence_vectors(p)?)
        }
        _ => bail!("give either --model with --rules and --policies, or --rule-vectors with --policy-vectors"),
    };
    inputs.extend(a.rules.as_deref());
    inputs.extend(a.policies.as_deref());
    if policies.is_empty() {
        bail!("no policy sentence to match against");
    }
    let index = VectorIndex::build(policies)?;
    let matches = threshold_match(&index, &rules, a.tau)?;
    create_with(&a.output, |w| write_match_report(w, &matches))?;

    let mut outputs: Vec<&Path> = vec![&a.output];
    if let Some(table) = &a.table {
        let texts: HashMap<SentenceKey, String> =
            rule_texts.into_iter().chain(policy_texts).flatten().collect();
        create_with(table, |w| write_match_table(w, &matches, |k| texts.get(k).cloned(), TABLE_WIDTH))?;
        outputs.push(table);
    }
    eprintln!("{} rules x {} policies -> {} matches at tau {}", rules.len(), index.len(), matches.len(), a.tau);
    manifest::write(
        &manifest::sidecar_path(&a.output),
        manifest::Run {
            command: "match",
            config: a,
            seed: None,
            inputs,
            outputs,
            summary: json!({ "rules": rules.len(), "policies": index.len(), "matches": matches.len() }),
        },
    )
}
