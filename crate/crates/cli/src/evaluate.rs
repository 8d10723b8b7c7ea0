use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context};
use serde_json::json;

use rulematch::eval::{read_validation, score1, score2, ScorePair, ScoreReport};

use crate::args::EvaluateArgs;
use crate::io::{create_with, load_embedder, model_id, open};
use crate::manifest;

fn read_report(path: &Path) -> anyhow::Result<ScoreReport> {
    serde_json::from_reader(open(path)?).with_context(|| format!("reading report {}", path.display()))
}

pub fn run(a: &EvaluateArgs) -> anyhow::Result<()> {
    let pairs = read_validation(open(&a.validation)?)
        .with_context(|| format!("reading validation pairs {}", a.validation.display()))?;
    if pairs.is_empty() {
        bail!("{} holds no validation pairs", a.validation.display());
    }
    let model = load_embedder(&a.model.model, a.model.vocab.as_deref())?;
    let s1 = score1(model.as_ref(), &pairs, a.seed)?;
    let s2 = score2(model.as_ref(), &pairs)?;
    let mut report = ScoreReport::new(model_id(&a.model.model), s1, s2, pairs.len());
    let mut inputs: Vec<&Path> = vec![&a.model.model, &a.validation];
    inputs.extend(a.model.vocab.as_deref());
    if let Some(path) = &a.baseline {
        let base = read_report(path)?;
        report = report.with_baseline(ScorePair { score1: base.score1, score2: base.score2 });
        inputs.push(path);
    }
    report.write_table(std::io::stdout().lock())?;
    let Some(output) = &a.output else { return Ok(()) };
    create_with(output, |w| {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        w.write_all(b"\n")?;
        Ok(())
    })?;
    manifest::write(
        &manifest::sidecar_path(output),
        manifest::Run {
            command: "evaluate",
            config: a,
            seed: Some(a.seed),
            inputs,
            outputs: vec![output],
            summary: json!({ "score1": s1, "score2": s2, "pairs": pairs.len() }),
        },
    )
}
