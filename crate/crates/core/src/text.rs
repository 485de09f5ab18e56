//! Sentence segmentation and the reference tokenizer.
//!
//! Both are deterministic, rule-based stand-ins for model-specific
//! preprocessing: downstream sentence indices and token counts must be
//! reproducible across runs and platforms, so nothing here consults a
//! learned model.

use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::Sentence;

/// Error for segmentation of whitespace-only input.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("input text is empty or whitespace-only")]
pub struct EmptyInput;

/// Abbreviations whose trailing period never ends a sentence.
///
/// Matching is case-sensitive and requires a word boundary before the
/// abbreviation, so "config." does not hit the "fig." entry. "al." covers
/// "et al." since entries are matched as single tokens.
pub const ABBREVIATIONS: [&str; 26] = [
    "e.g.", "i.e.", "cf.", "ca.", "al.", "etc.", "vs.", "Fig.", "fig.", "Figs.", "figs.", "Tab.",
    "tab.", "Tabs.", "Eq.", "Eqs.", "No.", "Nr.", "sp.", "spp.", "subsp.", "var.", "approx.",
    "Dr.", "Prof.", "St.",
];

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Punctuation for tokenization purposes: ASCII punctuation plus common
/// typographic characters that survive PDF text extraction.
pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}' | '\u{2019}' | '\u{201C}' | '\u{201D}' | '\u{2013}' | '\u{2014}'
                | '\u{2026}' | '\u{00AB}' | '\u{00BB}' | '\u{00A1}' | '\u{00BF}' | '\u{2039}'
                | '\u{203A}' | '\u{00B7}'
        )
}

/// Splits text into tokens: whitespace-separated words with leading and
/// trailing punctuation peeled off as standalone tokens.
///
/// Interior punctuation (hyphens, apostrophes in contractions) stays inside
/// its word, so joining the tokens with single spaces loses only the
/// original whitespace. Empty input yields an empty list.
pub fn reference_tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for word in text.split_whitespace() {
        let chars: Vec<char> = word.chars().collect();
        let mut start = 0;
        let mut end = chars.len();
        while start < end && is_punctuation(chars[start]) {
            start += 1;
        }
        while end > start && is_punctuation(chars[end - 1]) {
            end -= 1;
        }
        // Leading punctuation, each char its own token.
        for &c in &chars[..start] {
            tokens.push(String::from(c));
        }
        if start < end {
            tokens.push(chars[start..end].iter().collect());
        }
        for &c in &chars[end..] {
            tokens.push(String::from(c));
        }
    }
    tokens
}

/// Counts tokens without allocating per-token strings.
pub fn count_tokens(text: &str) -> usize {
    let mut count = 0;
    for word in text.split_whitespace() {
        let chars: Vec<char> = word.chars().collect();
        let mut start = 0;
        let mut end = chars.len();
        while start < end && is_punctuation(chars[start]) {
            start += 1;
        }
        while end > start && is_punctuation(chars[end - 1]) {
            end -= 1;
        }
        count += start + (chars.len() - end) + usize::from(start < end);
    }
    count
}

/// Splits raw text into sentences.
///
/// A boundary is a sentence-terminal character ('.', '!', '?') followed by
/// whitespace and then an uppercase letter or digit, unless the text up to
/// the terminal ends in one of [`ABBREVIATIONS`]. Whitespace runs inside a
/// sentence (including line breaks) collapse to single spaces, so sentence
/// texts never contain line-break characters. Every non-whitespace character
/// of the input lands in exactly one sentence.
pub fn segment_sentences(raw_text: &str) -> Result<Vec<Sentence>, EmptyInput> {
    if raw_text.trim().is_empty() {
        return Err(EmptyInput);
    }

    let chars: Vec<char> = raw_text.chars().collect();
    let mut sentences: Vec<String> = Vec::new();
    let mut current = String::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            if !current.is_empty() && !current.ends_with(' ') {
                current.push(' ');
            }
            i += 1;
            continue;
        }
        current.push(c);
        if is_terminal(c) && i + 1 < chars.len() && chars[i + 1].is_whitespace() {
            // Peek past the whitespace run at the sentence that would follow.
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_whitespace() {
                j += 1;
            }
            let starts_new = j < chars.len() && (chars[j].is_uppercase() || chars[j].is_ascii_digit());
            if starts_new && !ends_with_abbreviation(&current) {
                sentences.push(core::mem::take(&mut current));
                i = j;
                continue;
            }
        }
        i += 1;
    }
    if current.ends_with(' ') {
        current.pop();
    }
    if !current.is_empty() {
        sentences.push(current);
    }

    Ok(sentences
        .into_iter()
        .enumerate()
        .map(|(index, text)| {
            let token_count = count_tokens(&text);
            Sentence { index, text, token_count }
        })
        .collect())
}

fn ends_with_abbreviation(text: &str) -> bool {
    for abbr in ABBREVIATIONS {
        if text.ends_with(abbr) {
            let prefix_len = text.len() - abbr.len();
            let boundary = text[..prefix_len]
                .chars()
                .next_back()
                .is_none_or(|c| !c.is_alphanumeric());
            if boundary {
                return true;
            }
        }
    }
    false
}
