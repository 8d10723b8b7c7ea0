use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::split::SentenceRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocKind {
    Rule,
    Policy,
}

/// One input document, as read from a corpus JSON-lines file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub kind: DocKind,
    #[serde(rename = "text")]
    pub raw_text: String,
}

/// Reads `{"doc_id", "kind", "text"}` lines. Blank lines are skipped and
/// duplicate `doc_id`s are rejected.
pub fn read_documents<R: BufRead>(reader: R) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        if !seen.insert(doc.doc_id.clone()) {
            return Err(Error::DuplicateKey(doc.doc_id));
        }
        docs.push(doc);
    }
    Ok(docs)
}

#[derive(Serialize, Deserialize)]
struct SentenceLine {
    doc_id: String,
    seq: u32,
    text: String,
}

/// Writes `{"doc_id", "seq", "text"}` lines.
pub fn write_sentences<W: Write>(mut writer: W, sentences: &[SentenceRecord]) -> Result<()> {
    for s in sentences {
        let line = SentenceLine { doc_id: s.doc_id.clone(), seq: s.seq, text: s.text.clone() };
        serde_json::to_writer(&mut writer, &line)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a sentence file back; tokens are recomputed from the text.
pub fn read_sentences<R: BufRead>(reader: R) -> Result<Vec<SentenceRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s: SentenceLine = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        let tokens = super::tokenize(&s.text);
        out.push(SentenceRecord { doc_id: s.doc_id, seq: s.seq, text: s.text, tokens });
    }
    Ok(out)
}
