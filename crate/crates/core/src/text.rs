//! Small text utilities shared by ingestion, scoring and evaluation.

/// Collapses every run of whitespace into a single space and trims the ends.
/// Case is preserved.
pub fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Lowercased alphanumeric word tokens, in order.
pub fn words(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "by", "for", "from", "in", "is", "it", "of", "on",
    "or", "that", "the", "this", "to", "was", "with",
];

pub fn is_stopword(w: &str) -> bool {
    STOPWORDS.binary_search(&w).is_ok()
}

/// Lowercased words minus stopwords.
pub fn content_words(s: &str) -> Vec<String> {
    words(s).into_iter().filter(|w| !is_stopword(w)).collect()
}

/// Length in characters (not bytes).
pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stopwords_sorted() {
        let mut sorted = STOPWORDS.to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, STOPWORDS);
    }

    #[test]
    fn collapse() {
        assert_eq!(collapse_whitespace("  a \n\t b  "), "a b");
        assert_eq!(collapse_whitespace("   "), "");
        assert_eq!(collapse_whitespace("MSRP"), "MSRP");
    }

    #[test]
    fn tokenizes() {
        assert_eq!(words("EPA Fuel-Economy!"), vec!["epa", "fuel", "economy"]);
        assert_eq!(content_words("The price of a car"), vec!["price", "car"]);
        assert_eq!(char_len("χ^N"), 3);
    }
}
