//! Text analysis for indexing and querying: lowercase, ASCII-fold, split on
//! non-alphanumeric characters, Porter-stem. No stopword removal, so every
//! term stays searchable. The same function runs at index and query time.

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use super::porter;

/// Fold one lowercase char toward ASCII: ligatures and crossed letters get
/// spelled out, accented letters lose their marks via canonical
/// decomposition, anything else (Cyrillic, CJK, ...) passes through.
fn fold_char(c: char, out: &mut String) {
    if c.is_ascii() {
        out.push(c);
        return;
    }
    match c {
        'æ' => out.push_str("ae"),
        'œ' => out.push_str("oe"),
        'ø' => out.push('o'),
        'ß' => out.push_str("ss"),
        'đ' | 'ð' => out.push('d'),
        'þ' => out.push_str("th"),
        'ł' => out.push('l'),
        'ħ' => out.push('h'),
        'ı' => out.push('i'),
        _ => out.extend(c.nfd().filter(|&d| !is_combining_mark(d))),
    }
}

/// Tokenize and stem. Tokens are maximal alphanumeric runs after folding;
/// purely alphabetic ASCII tokens are stemmed, mixed or non-ASCII tokens
/// are kept verbatim.
pub fn analyze(text: &str) -> Vec<String> {
    let mut folded = String::with_capacity(text.len());
    for c in text.chars().flat_map(char::to_lowercase) {
        fold_char(c, &mut folded);
    }
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in folded.chars() {
        if c.is_alphanumeric() {
            current.push(c);
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
        .into_iter()
        .map(|t| {
            if t.bytes().all(|b| b.is_ascii_lowercase()) {
                porter::stem(&t)
            } else {
                t
            }
        })
        .collect()
}
