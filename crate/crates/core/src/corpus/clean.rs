/// Characters removed by [`clean_text`].
///
/// Control characters that are not whitespace are always removed when
/// `control` is set; whitespace runs are always collapsed to one space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StripSet {
    pub chars: Vec<char>,
    pub control: bool,
}

impl Default for StripSet {
    fn default() -> Self {
        StripSet {
            chars: vec!['(', ')', '[', ']', '{', '}', '<', '>', '#'],
            control: true,
        }
    }
}

impl StripSet {
    pub fn contains(&self, c: char) -> bool {
        (self.control && c.is_control() && !c.is_whitespace()) || self.chars.contains(&c)
    }
}

/// Removes every character of `strip`, collapses whitespace runs into a single
/// space and trims both ends.
///
/// ```
/// use rulematch::corpus::{clean_text, StripSet};
/// assert_eq!(clean_text("rule #12 (see [A])", &StripSet::default()), "rule 12 see A");
/// ```
pub fn clean_text(raw: &str, strip: &StripSet) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for c in raw.chars() {
        if c.is_whitespace() {
            pending_space = true;
            continue;
        }
        // A stripped whitespace character would be handled above; anything
        // else in the set disappears without leaving a gap.
        if strip.contains(c) {
            continue;
        }
        if pending_space && !out.is_empty() {
            out.push(' ');
        }
        pending_space = false;
        out.push(c);
    }
    out
}
