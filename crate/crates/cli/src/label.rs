use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde_json::json;

use rulematch::eval::{
    ensemble_pseudo_label, split_dataset, write_validation, MockModel, SentenceEmbedder, VoteCut,
};

use crate::args::PseudoLabelArgs;
use crate::io::{create_with, keyed_sentences, load_embedder};
use crate::manifest;

/// Expands `mock:N` entries and loads every other entry as a model file.
fn load_models(a: &PseudoLabelArgs) -> anyhow::Result<(Vec<Box<dyn SentenceEmbedder>>, Vec<PathBuf>)> {
    let mut models: Vec<Box<dyn SentenceEmbedder>> = Vec::new();
    let mut files = Vec::new();
    for entry in a.models.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        if let Some(n) = entry.strip_prefix("mock:") {
            let n: usize = n.parse().with_context(|| format!("model entry {entry:?}: count"))?;
            let start = models.len();
            for i in 0..n {
                models.push(Box::new(MockModel::new(format!("mock-{}", start + i), a.mock_dim)));
            }
        } else {
            let path = PathBuf::from(entry);
            models.push(load_embedder(&path, a.vocab.as_deref())?);
            files.push(path);
        }
    }
    Ok((models, files))
}

pub fn run(a: &PseudoLabelArgs) -> anyhow::Result<()> {
    let cut: VoteCut = a.vote_cut.parse()?;
    let (models, files) = load_models(a)?;
    if models.is_empty() {
        bail!("the ensemble has no models");
    }
    let rules = keyed_sentences(&a.rules)?;
    let policies = keyed_sentences(&a.policies)?;
    let refs: Vec<&dyn SentenceEmbedder> = models.iter().map(|m| m.as_ref()).collect();
    let pairs = ensemble_pseudo_label(&refs, &rules, &policies, a.tau, cut)?;
    let min_votes = cut.min_votes(models.len());
    create_with(&a.output, |w| write_validation(w, &pairs))?;
    eprintln!(
        "{} models, vote cut {min_votes}: kept {} of {} pairs",
        models.len(),
        pairs.len(),
        rules.len() * policies.len()
    );

    let mut outputs: Vec<&Path> = vec![&a.output];
    let mut split = serde_json::Value::Null;
    if let (Some(train_out), Some(valid_out)) = (&a.train_out, &a.validation_out) {
        let (train, valid) = split_dataset(&pairs, a.train_fraction, a.seed)?;
        create_with(train_out, |w| write_validation(w, &train))?;
        create_with(valid_out, |w| write_validation(w, &valid))?;
        outputs.extend([train_out.as_path(), valid_out.as_path()]);
        split = json!({ "train": train.len(), "validation": valid.len() });
    }
    let mut inputs: Vec<&Path> = vec![&a.rules, &a.policies];
    inputs.extend(files.iter().map(PathBuf::as_path));
    inputs.extend(a.vocab.as_deref());
    manifest::write(
        &manifest::sidecar_path(&a.output),
        manifest::Run {
            command: "pseudo-label",
            config: a,
            seed: Some(a.seed),
            inputs,
            outputs,
            summary: json!({
                "models": refs.iter().map(|m| m.id()).collect::<Vec<_>>(),
                "min_votes": min_votes,
                "pairs": pairs.len(),
                "split": split,
            }),
        },
    )
}
