use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::SentenceRecord;
use crate::{Error, Result};

pub type TokenId = usize;

pub const UNK_ID: TokenId = 0;
pub const MASK_ID: TokenId = 1;
pub const UNK_TOKEN: &str = "<unk>";
pub const MASK_TOKEN: &str = "<mask>";

/// Token ↔ id bijection with corpus frequencies.
///
/// Ids `0` and `1` are reserved for [`UNK_TOKEN`] and [`MASK_TOKEN`]; the rest
/// are assigned by decreasing frequency, ties broken alphabetically. Tokens
/// below `min_count` are counted under `<unk>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    surfaces: Vec<String>,
    freqs: Vec<u64>,
    index: HashMap<String, TokenId>,
    total_tokens: u64,
}

impl Vocabulary {
    pub fn build(sentences: &[SentenceRecord], min_count: u64) -> Result<Self> {
        Self::from_token_lists(sentences.iter().map(|s| s.tokens.as_slice()), min_count)
    }

    pub fn from_token_lists<'a, I>(lists: I, min_count: u64) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let min_count = min_count.max(1);
        let mut counts: HashMap<&str, u64> = HashMap::new();
        let mut total = 0u64;
        for list in lists {
            for t in list {
                *counts.entry(t.as_str()).or_default() += 1;
                total += 1;
            }
        }
        if total == 0 {
            return Err(Error::EmptyCorpus);
        }
        let mut kept: Vec<(&str, u64)> = Vec::new();
        let mut unk = 0u64;
        for (t, c) in counts {
            if c >= min_count {
                kept.push((t, c));
            } else {
                unk += c;
            }
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let mut surfaces = vec![UNK_TOKEN.to_string(), MASK_TOKEN.to_string()];
        let mut freqs = vec![unk, 0];
        for (t, c) in kept {
            surfaces.push(t.to_string());
            freqs.push(c);
        }
        Ok(Self::from_parts(surfaces, freqs))
    }

    fn from_parts(surfaces: Vec<String>, freqs: Vec<u64>) -> Self {
        let index = surfaces.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let total_tokens = freqs.iter().sum();
        Vocabulary { surfaces, freqs, index, total_tokens }
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    /// Always false: the reserved tokens are present in every vocabulary.
    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn lookup(&self, surface: &str) -> Option<TokenId> {
        self.index.get(surface).copied()
    }

    /// Id of `surface`, or [`UNK_ID`].
    pub fn id(&self, surface: &str) -> TokenId {
        self.lookup(surface).unwrap_or(UNK_ID)
    }

    pub fn surface(&self, id: TokenId) -> Option<&str> {
        self.surfaces.get(id).map(String::as_str)
    }

    pub fn frequency(&self, id: TokenId) -> Option<u64> {
        self.freqs.get(id).copied()
    }

    pub fn frequencies(&self) -> &[u64] {
        &self.freqs
    }

    pub fn surfaces(&self) -> &[String] {
        &self.surfaces
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<TokenId> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    /// One `surface<TAB>frequency` line per id, in id order.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for (s, f) in self.surfaces.iter().zip(&self.freqs) {
            writeln!(w, "{s}\t{f}")?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(r: R) -> Result<Self> {
        let mut surfaces = Vec::new();
        let mut freqs = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (s, f) = line
                .rsplit_once('\t')
                .ok_or_else(|| Error::Parse(format!("vocabulary line {}: missing tab", lineno + 1)))?;
            let f: u64 = f
                .parse()
                .map_err(|e| Error::Parse(format!("vocabulary line {}: {e}", lineno + 1)))?;
            surfaces.push(s.to_string());
            freqs.push(f);
        }
        if surfaces.len() < 2 || surfaces[UNK_ID] != UNK_TOKEN || surfaces[MASK_ID] != MASK_TOKEN {
            return Err(Error::Parse("vocabulary must start with <unk> and <mask>".into()));
        }
        let vocab = Self::from_parts(surfaces, freqs);
        if vocab.index.len() != vocab.surfaces.len() {
            return Err(Error::Parse("vocabulary has duplicate surfaces".into()));
        }
        Ok(vocab)
    }
}
