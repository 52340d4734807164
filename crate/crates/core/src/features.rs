//! Tokenization and n-gram / meta feature extraction from responder speech.
//!
//! Tokenizer rules (fixed, no external dependency): Unicode-aware
//! lowercasing, split on whitespace, drop every character that is not
//! alphanumeric or one of `'` `-` `/`, then strip those three from token
//! edges. Contractions ("don't"), hyphenated compounds, and slash terms
//! ("9/11") survive intact; bare punctuation runs vanish.
//!
//! N-grams of orders 1–3 are taken within each utterance only — a phrase
//! spanning two speech turns is not a phrase.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::util::kahan_sum_iter;

/// Highest n-gram order the pipeline ever extracts.
pub const MAX_NGRAM_ORDER: usize = 3;

/// A single lowercase, whitespace-free word form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Token(String);

impl Token {
    /// Wraps a surface form, rejecting empty strings and internal whitespace.
    pub fn new(surface: impl Into<String>) -> Option<Token> {
        let surface = surface.into();
        if surface.is_empty() || surface.chars().any(char::is_whitespace) {
            None
        } else {
            Some(Token(surface))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Character count (Unicode scalar values, not bytes).
    pub fn char_len(&self) -> usize {
        self.0.chars().count()
    }
}

impl std::fmt::Display for Token {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Characters kept when they appear inside a token and stripped from edges.
fn is_kept_punct(c: char) -> bool {
    matches!(c, '\'' | '-' | '/')
}

/// Deterministic tokenizer. Empty text yields an empty list.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let mut cleaned = String::with_capacity(chunk.len());
        for c in chunk.chars() {
            if c.is_alphanumeric() {
                for lc in c.to_lowercase() {
                    cleaned.push(lc);
                }
            } else if is_kept_punct(c) {
                cleaned.push(c);
            }
            // any other punctuation is dropped
        }
        let trimmed = cleaned.trim_matches(is_kept_punct);
        if !trimmed.is_empty() {
            tokens.push(Token(trimmed.to_string()));
        }
    }
    tokens
}

/// An n-gram of order 1–3, stored as its space-joined surface text.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NGramKey {
    order: u8,
    text: String,
}

impl NGramKey {
    /// Builds a key from a window of tokens. Panics if the window is empty
    /// or longer than [`MAX_NGRAM_ORDER`].
    pub fn from_window(window: &[Token]) -> NGramKey {
        assert!(!window.is_empty() && window.len() <= MAX_NGRAM_ORDER);
        let mut text = String::new();
        for (i, tok) in window.iter().enumerate() {
            if i > 0 {
                text.push(' ');
            }
            text.push_str(tok.as_str());
        }
        NGramKey {
            order: window.len() as u8,
            text,
        }
    }

    /// Builds a unigram key from a single word.
    pub fn unigram(word: &str) -> NGramKey {
        NGramKey {
            order: 1,
            text: word.to_string(),
        }
    }

    /// Parses a space-joined surface form, validating the implied order.
    pub fn parse(text: &str) -> Option<NGramKey> {
        let n = text.split(' ').filter(|t| !t.is_empty()).count();
        if n == 0 || n > MAX_NGRAM_ORDER || text.split(' ').any(|t| t.is_empty()) {
            return None;
        }
        Some(NGramKey {
            order: n as u8,
            text: text.to_string(),
        })
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    /// Space-joined surface form, e.g. `"went down there"`.
    pub fn text(&self) -> &str {
        &self.text
    }
}

/// Whether feature values are per-order relative frequencies or 0/1 presence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    RelativeFrequency,
    Binary,
}

/// Sparse n-gram feature representation of one responder's speech.
///
/// In relative-frequency mode the values of each order sum to 1 (when that
/// order has any entries); in binary mode every value is exactly 1.0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    mode: FeatureMode,
    entries: BTreeMap<NGramKey, f64>,
    /// totals[n-1] = number of order-n n-gram occurrences observed.
    totals: [u64; MAX_NGRAM_ORDER],
}

impl FeatureVector {
    pub fn mode(&self) -> FeatureMode {
        self.mode
    }

    /// Value for a key; 0.0 when absent.
    pub fn get(&self, key: &NGramKey) -> f64 {
        self.entries.get(key).copied().unwrap_or(0.0)
    }

    /// Relative frequency (or indicator) of a single word.
    pub fn unigram_value(&self, word: &str) -> f64 {
        self.get(&NGramKey::unigram(word))
    }

    /// Deterministic (sorted) iteration over all entries.
    pub fn iter(&self) -> impl Iterator<Item = (&NGramKey, f64)> {
        self.entries.iter().map(|(k, v)| (k, *v))
    }

    /// Sorted iteration restricted to one order.
    pub fn iter_order(&self, order: usize) -> impl Iterator<Item = (&NGramKey, f64)> {
        self.iter().filter(move |(k, _)| k.order() == order)
    }

    /// Total occurrence count of order-n n-grams.
    pub fn total(&self, order: usize) -> u64 {
        self.totals[order - 1]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Compensated sum of all values of one order.
    pub fn order_sum(&self, order: usize) -> f64 {
        kahan_sum_iter(self.iter_order(order).map(|(_, v)| v))
    }

    /// The support indicator: same keys, every value 1.0.
    pub fn to_binary(&self) -> FeatureVector {
        FeatureVector {
            mode: FeatureMode::Binary,
            entries: self.entries.keys().cloned().map(|k| (k, 1.0)).collect(),
            totals: self.totals,
        }
    }
}

/// Extracts n-grams of orders `1..=max_order` over each utterance separately.
///
/// `max_order` is clamped to [`MAX_NGRAM_ORDER`]. Relative-frequency mode
/// normalizes each order by that order's own total count.
pub fn extract_ngrams(
    utterances: &[Vec<Token>],
    max_order: usize,
    mode: FeatureMode,
) -> FeatureVector {
    let max_order = max_order.clamp(1, MAX_NGRAM_ORDER);
    let mut counts: BTreeMap<NGramKey, u64> = BTreeMap::new();
    let mut totals = [0u64; MAX_NGRAM_ORDER];

    for tokens in utterances {
        for order in 1..=max_order {
            if tokens.len() < order {
                continue;
            }
            for window in tokens.windows(order) {
                *counts.entry(NGramKey::from_window(window)).or_insert(0) += 1;
                totals[order - 1] += 1;
            }
        }
    }

    let entries = counts
        .into_iter()
        .map(|(key, count)| {
            let value = match mode {
                FeatureMode::RelativeFrequency => count as f64 / totals[key.order() - 1] as f64,
                FeatureMode::Binary => 1.0,
            };
            (key, value)
        })
        .collect();

    FeatureVector {
        mode,
        entries,
        totals,
    }
}

/// Word count and mean word length for one responder's speech.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetaFeatures {
    pub word_count: u64,
    /// Mean characters per token; 0.0 when there are no tokens.
    pub avg_word_length: f64,
}

/// Optional export: delimited rows `responder_id,order,ngram,value` in
/// deterministic (sorted) key order. Tokens never contain commas, so the
/// space-joined n-gram needs no quoting.
pub fn write_feature_table<W: std::io::Write>(
    mut writer: W,
    responder_id: &str,
    features: &FeatureVector,
) -> std::io::Result<()> {
    for (key, value) in features.iter() {
        writeln!(
            writer,
            "{},{},{},{}",
            responder_id,
            key.order(),
            key.text(),
            value
        )?;
    }
    Ok(())
}

/// Computes meta features over a flat token stream (responder speech only).
pub fn meta_features(tokens: &[Token]) -> MetaFeatures {
    if tokens.is_empty() {
        return MetaFeatures {
            word_count: 0,
            avg_word_length: 0.0,
        };
    }
    let total_chars = kahan_sum_iter(tokens.iter().map(|t| t.char_len() as f64));
    MetaFeatures {
        word_count: tokens.len() as u64,
        avg_word_length: total_chars / tokens.len() as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> Vec<Token> {
        words.iter().map(|w| Token::new(*w).unwrap()).collect()
    }

    #[test]
    fn tokenize_casefolds_and_strips_punctuation() {
        let tokens = tokenize("We went DOWN there.");
        let surfaces: Vec<&str> = tokens.iter().map(Token::as_str).collect();
        assert_eq!(surfaces, ["we", "went", "down", "there"]);
    }

    #[test]
    fn tokenize_keeps_contractions() {
        let tokens = tokenize("don't");
        assert_eq!(tokens.len(), 1);
        assert_eq!(tokens[0].as_str(), "don't");
    }

    #[test]
    fn tokenize_keeps_slashes_drops_bare_punct_runs() {
        // "9/11" survives via the internal-slash rule; "--" strips to nothing.
        let tokens = tokenize("9/11 -- chaos");
        let surfaces: Vec<&str> = tokens.iter().map(Token::as_str).collect();
        assert_eq!(surfaces, ["9/11", "chaos"]);
    }

    #[test]
    fn tokenize_edge_punctuation_and_unicode() {
        let surfaces: Vec<String> = tokenize("'quoted' CafÉ end-of-day")
            .into_iter()
            .map(|t| t.as_str().to_string())
            .collect();
        assert_eq!(surfaces, ["quoted", "café", "end-of-day"]);
        assert!(tokenize("").is_empty());
        assert!(tokenize("  ...  !!").is_empty());
    }

    #[test]
    fn unigram_relative_frequencies() {
        let fv = extract_ngrams(&[toks(&["a", "b", "a"])], 1, FeatureMode::RelativeFrequency);
        assert!((fv.unigram_value("a") - 2.0 / 3.0).abs() < 1e-15);
        assert!((fv.unigram_value("b") - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(fv.total(1), 3);
    }

    #[test]
    fn bigram_relative_frequencies() {
        // [a,b,a] yields bigrams (a b) and (b a), each 1/2.
        let fv = extract_ngrams(&[toks(&["a", "b", "a"])], 2, FeatureMode::RelativeFrequency);
        let ab = NGramKey::parse("a b").unwrap();
        let ba = NGramKey::parse("b a").unwrap();
        assert!((fv.get(&ab) - 0.5).abs() < 1e-15);
        assert!((fv.get(&ba) - 0.5).abs() < 1e-15);
        assert_eq!(fv.total(2), 2);
    }

    #[test]
    fn binary_mode_lists_all_present_ngrams() {
        let fv = extract_ngrams(&[toks(&["a", "b", "a"])], 3, FeatureMode::Binary);
        for text in ["a", "b", "a b", "b a", "a b a"] {
            assert_eq!(fv.get(&NGramKey::parse(text).unwrap()), 1.0, "{text}");
        }
        assert_eq!(fv.len(), 5);
    }

    #[test]
    fn ngrams_do_not_cross_utterance_boundaries() {
        let split = extract_ngrams(&[toks(&["a", "b"]), toks(&["c"])], 2, FeatureMode::Binary);
        assert_eq!(split.get(&NGramKey::parse("b c").unwrap()), 0.0);
        assert_eq!(split.get(&NGramKey::parse("a b").unwrap()), 1.0);
    }

    #[test]
    fn binary_is_support_of_relative_frequency() {
        let utterances = vec![toks(&["x", "y", "x", "z"]), toks(&["y", "y"])];
        let rel = extract_ngrams(&utterances, 3, FeatureMode::RelativeFrequency);
        let bin = extract_ngrams(&utterances, 3, FeatureMode::Binary);
        assert_eq!(rel.to_binary(), bin);
    }

    #[test]
    fn feature_table_export_lists_sorted_rows() {
        let fv = extract_ngrams(&[toks(&["b", "a", "b"])], 2, FeatureMode::RelativeFrequency);
        let mut buf = Vec::new();
        write_feature_table(&mut buf, "r1", &fv).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines,
            [
                "r1,1,a,0.3333333333333333",
                "r1,1,b,0.6666666666666666",
                "r1,2,a b,0.5",
                "r1,2,b a,0.5",
            ]
        );
    }

    #[test]
    fn meta_features_hand_cases() {
        let mf = meta_features(&toks(&["the", "cat", "sat"]));
        assert_eq!(mf.word_count, 3);
        assert!((mf.avg_word_length - 3.0).abs() < 1e-15);

        let empty = meta_features(&[]);
        assert_eq!(empty.word_count, 0);
        assert_eq!(empty.avg_word_length, 0.0);

        // (1 + 10) / 2 = 5.5
        let mf = meta_features(&toks(&["a", "responders"]));
        assert_eq!(mf.word_count, 2);
        assert!((mf.avg_word_length - 5.5).abs() < 1e-15);
    }

    proptest::proptest! {
        /// Relative frequencies of each present order sum to one for any
        /// utterance structure.
        #[test]
        fn per_order_sums_are_one(
            utterance_sizes in proptest::collection::vec(0usize..12, 1..6),
            picks in proptest::collection::vec(0usize..5, 60),
        ) {
            let vocab = ["we", "went", "down", "dust", "smoke"];
            let mut cursor = 0;
            let utterances: Vec<Vec<Token>> = utterance_sizes
                .iter()
                .map(|&size| {
                    (0..size)
                        .map(|_| {
                            let w = vocab[picks[cursor % picks.len()]];
                            cursor += 1;
                            Token::new(w).unwrap()
                        })
                        .collect()
                })
                .collect();
            let fv = extract_ngrams(&utterances, 3, FeatureMode::RelativeFrequency);
            for order in 1..=3 {
                if fv.total(order) > 0 {
                    proptest::prop_assert!((fv.order_sum(order) - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn duplication_leaves_relative_frequencies_unchanged() {
        let utterances = vec![toks(&["we", "went", "down", "we"]), toks(&["the", "dust"])];
        let doubled: Vec<Vec<Token>> = utterances
            .iter()
            .chain(utterances.iter())
            .cloned()
            .collect();
        let once = extract_ngrams(&utterances, 3, FeatureMode::RelativeFrequency);
        let twice = extract_ngrams(&doubled, 3, FeatureMode::RelativeFrequency);
        for (key, value) in once.iter() {
            assert!((twice.get(key) - value).abs() < 1e-12, "{}", key.text());
        }
        assert_eq!(twice.total(1), 2 * once.total(1));
    }
}
