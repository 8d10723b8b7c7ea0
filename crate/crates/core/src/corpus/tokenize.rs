/// Lowercased word tokens, delimited by anything that is not alphanumeric.
///
/// ```
/// use rulematch::corpus::tokenize;
/// assert_eq!(tokenize("FCA-approved circular."), ["fca", "approved", "circular"]);
/// ```
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}
