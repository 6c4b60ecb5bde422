//! Query normalization, tokenization, stop-words and stemming.

use std::collections::BTreeSet;

/// Lowercases and collapses runs of whitespace.
pub fn normalize_query(raw: &str) -> String {
    let lower = raw.to_lowercase();
    lower.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Whitespace tokens of an already-normalized string.
pub fn tokens(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

/// Tokens with surrounding punctuation stripped, empty tokens dropped.
pub fn clean_tokens(s: &str) -> Vec<String> {
    s.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Porter stem of a single lowercase token.
pub fn stem(token: &str) -> String {
    if token.chars().all(|c| c.is_ascii_alphabetic()) {
        porter_stemmer::stem(token)
    } else {
        token.to_string()
    }
}

pub fn is_stop_word(token: &str) -> bool {
    STOP_WORDS.binary_search(&token).is_ok()
}

/// Stemmed content terms: stop-words removed, then Porter-stemmed. Falls back
/// to all stemmed tokens when every token is a stop-word.
pub fn content_terms(s: &str) -> Vec<String> {
    let toks = clean_tokens(s);
    let kept: Vec<String> = toks
        .iter()
        .filter(|t| !is_stop_word(t))
        .map(|t| stem(t))
        .collect();
    if kept.is_empty() {
        toks.iter().map(|t| stem(t)).collect()
    } else {
        kept
    }
}

pub fn term_set(s: &str) -> BTreeSet<String> {
    content_terms(s).into_iter().collect()
}

/// True when `needle`'s tokens occur as a contiguous run of `haystack`'s tokens.
pub fn contains_phrase(haystack: &str, needle: &str) -> bool {
    let h = tokens(haystack);
    let n = tokens(needle);
    if n.is_empty() || n.len() > h.len() {
        return false;
    }
    h.windows(n.len()).any(|w| w == n.as_slice())
}

/// Removes the first occurrence of `phrase` (token aligned) from `query`.
/// Returns the query unchanged when the phrase is absent or is the whole query.
pub fn strip_phrase(query: &str, phrase: &str) -> String {
    let h = tokens(query);
    let n = tokens(phrase);
    if n.is_empty() || n.len() >= h.len() {
        return query.to_string();
    }
    for start in 0..=h.len() - n.len() {
        if h[start..start + n.len()] == n[..] {
            let mut rest: Vec<&str> = h[..start].to_vec();
            rest.extend_from_slice(&h[start + n.len()..]);
            return rest.join(" ");
        }
    }
    query.to_string()
}

/// Share of characters that are ASCII letters, digits or spaces.
pub fn ascii_ratio(s: &str) -> f64 {
    let total = s.chars().count();
    if total == 0 {
        return 1.0;
    }
    let ok = s
        .chars()
        .filter(|c| c.is_ascii_alphanumeric() || *c == ' ')
        .count();
    ok as f64 / total as f64
}

// Sorted for binary search.
const STOP_WORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for",
    "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "herself",
    "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just",
    "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once",
    "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own", "s", "same", "she",
    "should", "so", "some", "such", "t", "than", "that", "the", "their", "theirs", "them",
    "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too",
    "under", "until", "up", "very", "was", "we", "were", "what", "when", "where", "which",
    "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself",
    "yourselves",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stop_words_sorted() {
        assert!(STOP_WORDS.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn normalizes_case_and_space() {
        assert_eq!(normalize_query("  World   Cup\tTickets "), "world cup tickets");
    }

    #[test]
    fn phrase_match_respects_word_boundaries() {
        assert!(contains_phrase("ncaa scores", "ncaa"));
        assert!(contains_phrase("the world cup final", "world cup"));
        assert!(!contains_phrase("ncaab scores", "ncaa"));
        assert!(!contains_phrase("cup world", "world cup"));
    }

    #[test]
    fn strip_phrase_removes_entity() {
        assert_eq!(strip_phrase("world cup tickets", "world cup"), "tickets");
        assert_eq!(strip_phrase("world cup", "world cup"), "world cup");
        assert_eq!(strip_phrase("tickets", "world cup"), "tickets");
    }

    #[test]
    fn content_terms_stem_and_drop_stop_words() {
        assert_eq!(content_terms("the world cup tickets"), vec!["world", "cup", "ticket"]);
        assert_eq!(content_terms("the of"), vec!["the", "of"]);
    }

    #[test]
    fn ascii_ratio_flags_non_latin() {
        assert!(ascii_ratio("mother's day") >= 0.9);
        assert!(ascii_ratio("чемпионат мира") < 0.2);
    }
}
