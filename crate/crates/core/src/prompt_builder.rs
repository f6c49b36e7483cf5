//! Passage normalization and listwise prompt assembly.
//!
//! The prompt is a fixed two-part template (system sentence + user body)
//! stored under `resources/` so its bytes are versioned and testable. A
//! window of m candidates renders as numbered `[i] {passage}` lines; the
//! model is asked to emit the identifiers in relevance order.
//!
//! Passage text is cleaned first: mojibake re-decoding, control-character
//! stripping, whitespace collapsing, NFC normalization, and rewriting of
//! `[digits]` to `(digits)` so the only bracketed numbers a model ever sees
//! are the window markers it must echo back.

use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Fixed system sentence establishing the ranking role.
pub const SYSTEM_PROMPT: &str = include_str!("../resources/system_prompt_v1.txt");
/// User-turn template with `{num}`, `{query}`, `{passages}` slots.
pub const USER_TEMPLATE: &str = include_str!("../resources/user_prompt_v1.txt");

/// Per-passage overhead added to the token estimate: covers the `[i] `
/// marker, newline, and chat-encoding framing a backend may add per message.
const PER_PASSAGE_OVERHEAD: usize = 8;
/// Truncation never goes below this many words per passage.
const MIN_WORD_CAP: usize = 8;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("window must contain at least one passage")]
    EmptyWindow,
    #[error(
        "prompt exceeds token budget even at maximal truncation \
         (estimate {estimate}, budget {budget})"
    )]
    BudgetExceeded { estimate: usize, budget: usize },
}

/// One candidate inside a window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowPassage {
    /// 1-based position marker shown to the model.
    pub window_index: u32,
    pub doc_id: String,
    /// Normalized text (see [`normalize_passage`]).
    pub text: String,
}

/// An ordered window of candidates for one query, normalized and numbered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptWindow {
    pub qid: String,
    pub query_text: String,
    pub passages: Vec<WindowPassage>,
}

impl PromptWindow {
    /// Normalize query and passages and assign window indices 1..=m.
    pub fn new(
        qid: &str,
        query_text: &str,
        passages: Vec<(String, String)>,
    ) -> Result<Self, PromptError> {
        if passages.is_empty() {
            return Err(PromptError::EmptyWindow);
        }
        let passages = passages
            .into_iter()
            .enumerate()
            .map(|(i, (doc_id, text))| WindowPassage {
                window_index: i as u32 + 1,
                doc_id,
                text: normalize_passage(&text),
            })
            .collect();
        Ok(Self {
            qid: qid.to_string(),
            query_text: normalize_passage(query_text),
            passages,
        })
    }

    /// Window length m.
    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    pub fn doc_ids(&self) -> Vec<&str> {
        self.passages.iter().map(|p| p.doc_id.as_str()).collect()
    }
}

/// Rendering knobs. The budget bounds the whole prompt's token estimate;
/// the word cap bounds each passage before any budget pressure.
#[derive(Debug, Clone, Copy)]
pub struct RenderOptions {
    pub token_budget: usize,
    pub passage_word_cap: usize,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            token_budget: 4096,
            passage_word_cap: 120,
        }
    }
}

/// A prompt ready for a backend, with its budget-checked token estimate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub system_text: String,
    pub user_text: String,
    pub token_estimate: usize,
}

/// Clean passage text for prompting: re-decode whole-string mojibake,
/// replace control characters with spaces, collapse whitespace runs and
/// trim, apply unicode NFC, and rewrite `[digits]` as `(digits)`.
///
/// The cleanup runs until it stops changing the text (each step can expose
/// work for another, e.g. NFC composition can reveal mojibake), so the
/// result is a fixpoint and the function is idempotent.
pub fn normalize_passage(text: &str) -> String {
    let mut current = text.to_string();
    // In practice two passes suffice (one per layer of mis-encoding); the
    // bound only guards against pathological inputs.
    for _ in 0..16 {
        let next = normalize_once(&current);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

fn normalize_once(text: &str) -> String {
    let repaired = fix_mojibake_step(text);
    let no_controls: String = repaired
        .chars()
        .map(|c| if c.is_control() { ' ' } else { c })
        .collect();
    let collapsed = no_controls.split_whitespace().collect::<Vec<_>>().join(" ");
    let composed: String = collapsed.nfc().collect();
    replace_bracketed_numbers(&composed)
}

/// Undo one layer of the classic UTF-8-read-as-Latin-1/Windows-1252
/// corruption.
///
/// The candidate repair maps every char back to the single byte it decodes
/// from under Windows-1252 (falling back to Latin-1 for code points 1252
/// leaves undefined) and re-reads the bytes as UTF-8. The repair is
/// accepted only when that parse succeeds and strictly shortens the text,
/// which is true for real mojibake and false for ordinary text in any
/// script that doesn't fit the single-byte repertoire.
fn fix_mojibake_step(text: &str) -> String {
    let Some(bytes) = text
        .chars()
        .map(char_to_single_byte)
        .collect::<Option<Vec<u8>>>()
    else {
        return text.to_string();
    };
    match String::from_utf8(bytes) {
        Ok(redecoded) if redecoded.chars().count() < text.chars().count() => redecoded,
        _ => text.to_string(),
    }
}

/// The byte that decodes to `c` under Windows-1252, taking the Latin-1
/// value for code points 0x80-0x9F that Windows-1252 leaves undefined.
fn char_to_single_byte(c: char) -> Option<u8> {
    let cp = c as u32;
    Some(match cp {
        0x20AC => 0x80,
        0x201A => 0x82,
        0x0192 => 0x83,
        0x201E => 0x84,
        0x2026 => 0x85,
        0x2020 => 0x86,
        0x2021 => 0x87,
        0x02C6 => 0x88,
        0x2030 => 0x89,
        0x0160 => 0x8A,
        0x2039 => 0x8B,
        0x0152 => 0x8C,
        0x017D => 0x8E,
        0x2018 => 0x91,
        0x2019 => 0x92,
        0x201C => 0x93,
        0x201D => 0x94,
        0x2022 => 0x95,
        0x2013 => 0x96,
        0x2014 => 0x97,
        0x02DC => 0x98,
        0x2122 => 0x99,
        0x0161 => 0x9A,
        0x203A => 0x9B,
        0x0153 => 0x9C,
        0x017E => 0x9E,
        0x0178 => 0x9F,
        0..=0xFF => cp as u8,
        _ => return None,
    })
}

/// Rewrite every `[digits]` as `(digits)`; other brackets are untouched.
fn replace_bracketed_numbers(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'[' {
            let mut j = i + 1;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            if j > i + 1 && j < bytes.len() && bytes[j] == b']' {
                out.push('(');
                out.push_str(&text[i + 1..j]);
                out.push(')');
                i = j + 1;
                continue;
            }
        }
        // Advance one full char (the byte at i may start a multibyte char).
        let ch_len = text[i..].chars().next().map(char::len_utf8).unwrap_or(1);
        out.push_str(&text[i..i + ch_len]);
        i += ch_len;
    }
    out
}

/// Deterministic token overestimate for budget checks: one-and-a-half
/// tokens per whitespace word, rounded up. A heuristic, not a tokenizer;
/// passage framing overhead is added separately by [`render`].
pub fn estimate_tokens(text: &str) -> usize {
    let words = text.split_whitespace().count();
    (words * 3).div_ceil(2)
}

/// Fill the template. Only the template itself is scanned for slots, so
/// query or passage text containing literal `{num}`-like strings is safe.
fn fill_template(template: &str, num: &str, query: &str, passages: &str) -> String {
    let mut out = String::with_capacity(template.len() + passages.len() + query.len());
    let mut rest = template;
    while let Some(pos) = rest.find('{') {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        if let Some(r) = tail.strip_prefix("{num}") {
            out.push_str(num);
            rest = r;
        } else if let Some(r) = tail.strip_prefix("{query}") {
            out.push_str(query);
            rest = r;
        } else if let Some(r) = tail.strip_prefix("{passages}") {
            out.push_str(passages);
            rest = r;
        } else {
            out.push('{');
            rest = &rest[pos + 1..];
        }
    }
    out.push_str(rest);
    out
}

fn truncate_words(text: &str, cap: usize) -> String {
    let words: Vec<&str> = text.split_whitespace().collect();
    if words.len() <= cap {
        text.to_string()
    } else {
        words[..cap].join(" ")
    }
}

fn render_with_cap(window: &PromptWindow, cap: usize) -> RenderedPrompt {
    let lines: Vec<String> = window
        .passages
        .iter()
        .map(|p| format!("[{}] {}", p.window_index, truncate_words(&p.text, cap)))
        .collect();
    let user_text = fill_template(
        USER_TEMPLATE,
        &window.len().to_string(),
        &window.query_text,
        &lines.join("\n"),
    );
    let token_estimate = estimate_tokens(SYSTEM_PROMPT)
        + estimate_tokens(&user_text)
        + PER_PASSAGE_OVERHEAD * window.len();
    RenderedPrompt {
        system_text: SYSTEM_PROMPT.to_string(),
        user_text,
        token_estimate,
    }
}

/// Render the window against the template, shrinking the per-passage word
/// cap (by quarters, not below a small floor) until the estimate fits the
/// budget. Fails only if the floor still doesn't fit.
pub fn render(window: &PromptWindow, opts: &RenderOptions) -> Result<RenderedPrompt, PromptError> {
    if window.is_empty() {
        return Err(PromptError::EmptyWindow);
    }
    let mut cap = opts.passage_word_cap.max(MIN_WORD_CAP);
    loop {
        let rendered = render_with_cap(window, cap);
        if rendered.token_estimate <= opts.token_budget {
            return Ok(rendered);
        }
        if cap == MIN_WORD_CAP {
            return Err(PromptError::BudgetExceeded {
                estimate: rendered.token_estimate,
                budget: opts.token_budget,
            });
        }
        cap = (cap * 3 / 4).max(MIN_WORD_CAP);
    }
}
