use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rulematch::eval::VoteCut;

#[derive(Debug, Parser)]
#[command(
    name = "rulematch",
    version,
    about = "Semantic matching of regulatory rules to institutional policies",
    args_override_self = true,
    after_help = "Every flag of a subcommand may also be set in a TOML file passed with --config: \
                  top-level keys apply to any subcommand that has the flag, a [subcommand] table \
                  applies to that subcommand only. Flags on the command line win."
)]
pub struct Cli {
    /// TOML file of flag defaults
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean and split a corpus into sentences and build the vocabulary
    Ingest(IngestArgs),
    /// Train word vectors (cooc, skipgram, cbow) or initialize an attention encoder
    Embed(EmbedArgs),
    /// Turn sentences into sentence vectors with a vectors file or checkpoint
    Encode(EncodeArgs),
    /// Report every (rule, policy) sentence pair with cosine at least tau
    Match(MatchArgs),
    /// Keep the (rule, policy) pairs an ensemble of models agrees on
    PseudoLabel(PseudoLabelArgs),
    /// Continue training an encoder checkpoint (mnr, gpl or mlm)
    Finetune(FinetuneArgs),
    /// Score a model on validation pairs
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    /// Corpus JSON lines: {"doc_id", "kind": "rule"|"policy", "text"}
    #[arg(long)]
    pub input: PathBuf,
    /// Directory for sentences.jsonl, rules.jsonl, policies.jsonl and vocab.tsv
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Longest sentence, in characters
    #[arg(long, default_value_t = 200)]
    pub max_len: usize,
    /// Words seen fewer times map to <unk>
    #[arg(long, default_value_t = 1)]
    pub min_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Cooc,
    Skipgram,
    Cbow,
    Encoder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizationArg {
    None,
    Rowl1,
    Correlation,
}

#[derive(Debug, Args, Serialize)]
pub struct EmbedArgs {
    #[arg(long, value_enum)]
    pub backend: Backend,
    /// Training sentences (not needed for the encoder backend)
    #[arg(long)]
    pub sentences: Option<PathBuf>,
    #[arg(long)]
    pub vocab: PathBuf,
    /// Word vectors file, or a checkpoint for the encoder backend
    #[arg(long)]
    pub output: PathBuf,
    /// Per-epoch losses as JSON lines (skipgram and cbow)
    #[arg(long)]
    pub loss_log: Option<PathBuf>,
    /// Context window [default: 10 for cooc, 5 for skipgram and cbow]
    #[arg(long)]
    pub window: Option<usize>,
    /// Vector width, or d_e for the encoder [default: 50, 64 for encoder]
    #[arg(long)]
    pub dim: Option<usize>,
    /// Co-occurrence normalization
    #[arg(long, value_enum, default_value_t = NormalizationArg::Rowl1)]
    pub normalization: NormalizationArg,
    /// Cap on raw co-occurrence weights, applied before normalizing [default: none]
    #[arg(long)]
    pub count_threshold: Option<f64>,
    /// Negative samples per example
    #[arg(long, default_value_t = 5)]
    pub k_negatives: usize,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    /// Starting learning rate, decayed linearly
    #[arg(long, default_value_t = 0.025)]
    pub lr: f64,
    /// Attention heads (encoder)
    #[arg(long, default_value_t = 4)]
    pub heads: usize,
    /// Longest token sequence (encoder)
    #[arg(long, default_value_t = 64)]
    pub max_len: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    /// Word vectors file or encoder checkpoint
    #[arg(long)]
    pub model: PathBuf,
    /// Vocabulary of the checkpoint (needed for checkpoints only)
    #[arg(long)]
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EncodeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub sentences: PathBuf,
    /// Sentence vectors file, rows named doc_id#seq
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct MatchArgs {
    /// Word vectors file or checkpoint used to embed --rules and --policies
    #[arg(long, requires_all = ["rules", "policies"], conflicts_with_all = ["rule_vectors", "policy_vectors"])]
    pub model: Option<PathBuf>,
    /// Vocabulary of the checkpoint
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Rule sentences
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Policy sentences
    #[arg(long)]
    pub policies: Option<PathBuf>,
    /// Precomputed rule sentence vectors (instead of --model)
    #[arg(long, requires = "policy_vectors")]
    pub rule_vectors: Option<PathBuf>,
    /// Precomputed policy sentence vectors
    #[arg(long, requires = "rule_vectors")]
    pub policy_vectors: Option<PathBuf>,
    /// Cosine threshold
    #[arg(long, default_value_t = 0.7, allow_negative_numbers = true)]
    pub tau: f64,
    /// Match report, JSON lines
    #[arg(long)]
    pub output: PathBuf,
    /// Also write a readable Rule | Policy | Score table (needs sentence texts)
    #[arg(long)]
    pub table: Option<PathBuf>,
}

fn vote_cut(s: &str) -> Result<String, String> {
    s.parse::<VoteCut>().map(|c| c.to_string()).map_err(|e| e.to_string())
}

#[derive(Debug, Args, Serialize)]
pub struct PseudoLabelArgs {
    /// Comma-separated models: vectors files, checkpoints, or mock:N for N mock models
    #[arg(long, value_delimiter = ',', required = true)]
    pub models: Vec<String>,
    /// Vocabulary for checkpoint models
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Width of mock model vectors
    #[arg(long, default_value_t = 32)]
    pub mock_dim: usize,
    #[arg(long)]
    pub rules: PathBuf,
    #[arg(long)]
    pub policies: PathBuf,
    /// Cosine threshold a model must reach to vote for a pair
    #[arg(long, default_value_t = 0.7, allow_negative_numbers = true)]
    pub tau: f64,
    /// Votes needed: auto (more than sqrt N), floor, ceil, or a count
    #[arg(long, default_value = "auto", value_parser = vote_cut)]
    pub vote_cut: String,
    /// Retained pairs, JSON lines
    #[arg(long)]
    pub output: PathBuf,
    /// Also split the retained pairs: training part
    #[arg(long, requires = "validation_out")]
    pub train_out: Option<PathBuf>,
    /// Also split the retained pairs: validation part
    #[arg(long, requires = "train_out")]
    pub validation_out: Option<PathBuf>,
    /// Fraction of pairs in the training part
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    /// Seed of the split shuffle
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mnr,
    Gpl,
    Mlm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Teacher {
    Lexical,
    Encoder,
}

#[derive(Debug, Args, Serialize)]
pub struct FinetuneArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    /// Encoder to start from
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// Trained checkpoint
    #[arg(long)]
    pub output: PathBuf,
    /// Per-epoch losses as JSON lines
    #[arg(long)]
    pub loss_log: Option<PathBuf>,
    /// (rule_text, policy_text) pairs for mnr, as written by pseudo-label
    #[arg(long, required_if_eq("method", "mnr"))]
    pub pairs: Option<PathBuf>,
    /// Unlabelled sentences for gpl and mlm
    #[arg(long, required_if_eq_any([("method", "gpl"), ("method", "mlm")]))]
    pub sentences: Option<PathBuf>,
    /// [default: 10 for mnr and mlm, 30 for gpl]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Adam step size [default: 5e-3 for mnr, 2e-3 for gpl and mlm]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Examples per batch; K for mnr [default: 16 for mnr and gpl, 8 for mlm]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Scale on cosines before the ranking softmax (mnr)
    #[arg(long, default_value_t = 20.0)]
    pub temperature: f64,
    /// Share of tokens masked (mlm)
    #[arg(long, default_value_t = 0.15)]
    pub mask_fraction: f64,
    /// Queries generated per paragraph (gpl)
    #[arg(long, default_value_t = 3)]
    pub n_queries: usize,
    /// Hard negatives mined per query (gpl)
    #[arg(long, default_value_t = 4)]
    pub m_negatives: usize,
    /// Pseudo-label scorer (gpl): TF-IDF cosine, or a frozen encoder
    #[arg(long, value_enum, default_value_t = Teacher::Lexical)]
    pub teacher: Teacher,
    /// Frozen teacher checkpoint [default: the starting checkpoint]
    #[arg(long)]
    pub teacher_checkpoint: Option<PathBuf>,
    /// Pseudo-labelled triplets, JSON lines (gpl)
    #[arg(long)]
    pub triplets_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Validation pairs, JSON lines {"rule_text", "policy_text", "votes"}
    #[arg(long)]
    pub validation: PathBuf,
    /// Earlier report to compare against
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Score report, JSON [default: print only]
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Seed of the random policies in Score 1
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
