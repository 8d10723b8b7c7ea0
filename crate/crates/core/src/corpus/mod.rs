//! Document ingestion: cleaning, sentence splitting, tokenization,
//! vocabulary construction and masking for masked-token pretraining.

mod clean;
mod document;
mod mask;
mod split;
mod tokenize;
mod vocab;

pub use clean::{clean_text, StripSet};
pub use document::{read_documents, read_sentences, write_sentences, DocKind, Document};
pub use mask::{mask_tokens, MaskedBatch};
pub use split::{split_sentences, split_text, SentenceRecord, SplitWarning, Splitter};
pub use tokenize::tokenize;
pub use vocab::{TokenId, Vocabulary, MASK_ID, MASK_TOKEN, UNK_ID, UNK_TOKEN};
