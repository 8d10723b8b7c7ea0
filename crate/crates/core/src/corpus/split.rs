use super::{clean_text, tokenize, Document, StripSet};

/// One bounded-length piece of a document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceRecord {
    pub doc_id: String,
    /// Position of the piece within its document, starting at 0.
    pub seq: u32,
    pub text: String,
    pub tokens: Vec<String>,
}

/// Raised when a piece had to be cut in the middle of a token, or when a
/// piece carried no word token and was dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SplitWarning {
    HardCut { doc_id: String, char_offset: usize },
    NoTokens { doc_id: String, text: String },
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Splits `text` into pieces of at most `max_len` characters.
///
/// Text that already fits is returned whole. Otherwise each cut goes right
/// after the last `.`, `!` or `?` inside the window, else at the last
/// whitespace, else (a single token longer than the window) exactly at
/// `max_len`. Whitespace at the cut is dropped. The returned offsets are the
/// character positions of hard cuts.
pub fn split_text(text: &str, max_len: usize) -> (Vec<String>, Vec<usize>) {
    assert!(max_len > 0, "max_len must be positive");
    let chars: Vec<char> = text.chars().collect();
    let mut pieces = Vec::new();
    let mut hard_cuts = Vec::new();
    let mut start = 0;
    let skip_ws = |mut i: usize| {
        while i < chars.len() && chars[i].is_whitespace() {
            i += 1;
        }
        i
    };
    start = skip_ws(start);
    while chars.len() - start > max_len {
        let window = &chars[start..start + max_len];
        let end = if let Some(p) = window.iter().rposition(|&c| is_terminator(c)) {
            start + p + 1
        } else if let Some(p) = window.iter().rposition(|c| c.is_whitespace()).filter(|&p| p > 0) {
            start + p
        } else {
            hard_cuts.push(start + max_len);
            start + max_len
        };
        let piece: String = chars[start..end].iter().collect();
        pieces.push(piece.trim_end().to_string());
        start = skip_ws(end);
    }
    if start < chars.len() {
        let piece: String = chars[start..].iter().collect();
        pieces.push(piece.trim_end().to_string());
    }
    (pieces, hard_cuts)
}

/// Splits an already-cleaned document into [`SentenceRecord`]s.
///
/// Pieces without any word token are dropped and reported.
pub fn split_sentences(doc: &Document, max_len: usize) -> (Vec<SentenceRecord>, Vec<SplitWarning>) {
    let (pieces, cuts) = split_text(&doc.raw_text, max_len);
    let mut warnings: Vec<SplitWarning> = cuts
        .into_iter()
        .map(|char_offset| SplitWarning::HardCut { doc_id: doc.doc_id.clone(), char_offset })
        .collect();
    let mut records = Vec::with_capacity(pieces.len());
    for text in pieces {
        let tokens = tokenize(&text);
        if tokens.is_empty() {
            warnings.push(SplitWarning::NoTokens { doc_id: doc.doc_id.clone(), text });
            continue;
        }
        records.push(SentenceRecord {
            doc_id: doc.doc_id.clone(),
            seq: records.len() as u32,
            text,
            tokens,
        });
    }
    (records, warnings)
}

/// Cleaning followed by splitting, with one configuration for every
/// document kind.
#[derive(Debug, Clone)]
pub struct Splitter {
    pub max_len: usize,
    pub strip: StripSet,
}

impl Default for Splitter {
    fn default() -> Self {
        Splitter { max_len: 200, strip: StripSet::default() }
    }
}

impl Splitter {
    pub fn new(max_len: usize) -> Self {
        Splitter { max_len, ..Default::default() }
    }

    pub fn sentences(&self, doc: &Document) -> (Vec<SentenceRecord>, Vec<SplitWarning>) {
        let cleaned = Document { raw_text: clean_text(&doc.raw_text, &self.strip), ..doc.clone() };
        split_sentences(&cleaned, self.max_len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DocKind;
    use proptest::prelude::*;

    fn doc(text: &str) -> Document {
        Document { doc_id: "d".into(), kind: DocKind::Rule, raw_text: text.into() }
    }

    #[test]
    fn terminators_at_190_and_380() {
        // Periods sit at character positions 190 and 380 (1-based).
        let text = format!("{}.{}.{}", "a".repeat(189), "b".repeat(189), "c".repeat(70));
        assert_eq!(text.chars().count(), 450);
        let (recs, warns) = split_sentences(&doc(&text), 200);
        let lens: Vec<usize> = recs.iter().map(|r| r.text.chars().count()).collect();
        assert_eq!(lens, [190, 190, 70]);
        assert!(warns.is_empty());
        assert_eq!(recs[2].seq, 2);
    }

    #[test]
    fn short_and_empty_docs() {
        let text = "Firms must keep records. They must be accurate for all clients!";
        let (recs, _) = split_sentences(&doc(text), 200);
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].text, text);
        assert!(split_sentences(&doc(""), 200).0.is_empty());
    }

    #[test]
    fn whitespace_fallback() {
        let text = "alpha beta gamma delta epsilon";
        let (pieces, cuts) = split_text(text, 12);
        assert_eq!(pieces, ["alpha beta", "gamma delta", "epsilon"]);
        assert!(cuts.is_empty());
    }

    #[test]
    fn long_token_is_hard_cut() {
        let text = "x".repeat(25);
        let (recs, warns) = split_sentences(&doc(&text), 10);
        let lens: Vec<usize> = recs.iter().map(|r| r.text.len()).collect();
        assert_eq!(lens, [10, 10, 5]);
        assert_eq!(
            warns,
            [
                SplitWarning::HardCut { doc_id: "d".into(), char_offset: 10 },
                SplitWarning::HardCut { doc_id: "d".into(), char_offset: 20 },
            ]
        );
    }

    #[test]
    fn splitter_cleans_first() {
        let (recs, _) = Splitter::new(200).sentences(&doc("See [rule] #4."));
        assert_eq!(recs[0].text, "See rule 4.");
        assert_eq!(recs[0].tokens, ["see", "rule", "4"]);
    }

    fn non_space(s: &str) -> Vec<char> {
        let mut v: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        v.sort_unstable();
        v
    }

    proptest! {
        #[test]
        fn preserves_characters(
            words in proptest::collection::vec("[a-z]{1,14}[.!?,]?", 0..60),
            max_len in 5usize..60,
        ) {
            let text = words.join(" ");
            let (pieces, _) = split_text(&text, max_len);
            for p in &pieces {
                prop_assert!(p.chars().count() <= max_len);
                prop_assert!(!p.is_empty());
            }
            prop_assert_eq!(non_space(&pieces.concat()), non_space(&text));
        }
    }
}
