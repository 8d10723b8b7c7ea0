//! Domain adaptation of the attention encoder.
//!
//! Three training loops share the [`Adam`] optimizer and the encoder tape:
//!
//! * [`mlm_pretrain`] predicts masked tokens through the vocabulary
//!   projection;
//! * [`fine_tune_mnr`] ranks each query's answer above the other answers in
//!   its batch;
//! * [`gpl_pipeline`] generates queries for unlabeled paragraphs, mines hard
//!   negatives, labels margins with a [`CrossScorer`] and regresses the
//!   encoder's cosine margins onto them with [`gpl_train`].

mod gpl;
mod mlm;
mod mnr;
mod optim;
mod query;
mod tfidf;

pub use gpl::{
    encode_triplets, gpl_pipeline, gpl_train, margin_mse_loss, mine_negatives, pseudo_label, read_pairs,
    read_triplets, write_pairs, write_triplets, CrossScorer, EncoderScorer, GplConfig, GplOutput, LexicalScorer,
    Passage, PseudoLabeledTriplet, TextPair, TripletIds,
};
pub use mlm::{mask_corpus, mlm_loss, mlm_pretrain, MlmConfig};
pub use mnr::{fine_tune_mnr, mnr_batches, mnr_loss, mnr_loss_from_scores, MnrConfig, TokenPair};
pub use optim::Adam;
pub use query::{generate_queries, ExtractiveGenerator, GeneratedQuery, QueryGenerator};
pub use tfidf::{content_tokens, is_stopword, TfIdf, STOPWORDS};
