//! Parsing, classification, and repair of ranking responses.
//!
//! A well-formed response lists every window index exactly once, like
//! `[3] > [1] > [2]`. Real model output strays from that in several ways;
//! this module classifies each response and deterministically repairs it
//! into a usable permutation, so a ranked list always comes out the other
//! end no matter what text went in.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

/// Classification of one response.
///
/// Exactly one status applies, chosen by priority: a grammar violation or an
/// out-of-range index is `WrongFormat` even if indices also repeat or are
/// absent; duplicates win over absences; `Missing` means well-formed,
/// in-range, duplicate-free, but not covering every index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResponseStatus {
    #[serde(rename = "ok")]
    Ok,
    #[serde(rename = "wrong_format")]
    WrongFormat,
    #[serde(rename = "repetition")]
    Repetition,
    #[serde(rename = "missing")]
    Missing,
}

impl ResponseStatus {
    pub fn label(self) -> &'static str {
        match self {
            Self::Ok => "OK",
            Self::WrongFormat => "Wrong Format",
            Self::Repetition => "Repetition",
            Self::Missing => "Missing",
        }
    }
}

/// A response after parsing: what was extracted, how it classified, and the
/// repaired permutation (1-based window indices, best first).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedRanking {
    pub raw: String,
    /// Every `[int]` value found in reading order, range-checked later.
    pub extracted: Vec<u32>,
    pub status: ResponseStatus,
    /// Bijection on 1..=m produced by [`repair`].
    pub permutation: Vec<u32>,
}

/// Parse and classify a response against window size `m`, then repair it.
///
/// Extraction scans the whole text for `[int]` substrings regardless of
/// whether the strict grammar holds, so partially usable responses still
/// contribute their order.
pub fn parse(raw: &str, m: usize) -> ParsedRanking {
    assert!(m >= 1, "window size must be at least 1");
    let extracted = extract_indices(raw);
    let grammatical = matches_strict_grammar(raw);
    let in_range = extracted.iter().all(|&v| v >= 1 && v as usize <= m);

    let status = if !grammatical || !in_range {
        ResponseStatus::WrongFormat
    } else {
        let mut seen = vec![false; m + 1];
        let mut duplicated = false;
        for &v in &extracted {
            if seen[v as usize] {
                duplicated = true;
                break;
            }
            seen[v as usize] = true;
        }
        if duplicated {
            ResponseStatus::Repetition
        } else if extracted.len() < m {
            ResponseStatus::Missing
        } else {
            ResponseStatus::Ok
        }
    };

    let permutation = repair(&extracted, m);
    ParsedRanking {
        raw: raw.to_string(),
        extracted,
        status,
        permutation,
    }
}

/// Strict response grammar: optional whitespace, `[int]` tokens joined by
/// `>` with optional whitespace around each token, nothing else. A single
/// token with no `>` is valid; an empty string is not.
fn matches_strict_grammar(raw: &str) -> bool {
    let mut rest = raw.trim_start();
    let mut first = true;
    loop {
        if !first {
            rest = rest.trim_start();
            match rest.strip_prefix('>') {
                Some(r) => rest = r.trim_start(),
                None => return rest.trim_start().is_empty() && !first,
            }
        }
        match strip_bracketed_int(rest) {
            Some(r) => rest = r,
            None => return false,
        }
        first = false;
        if rest.trim_start().is_empty() {
            return true;
        }
    }
}

/// Strip a leading `[digits]` token, returning the remainder.
fn strip_bracketed_int(s: &str) -> Option<&str> {
    let s = s.strip_prefix('[')?;
    let end = s.find(']')?;
    let digits = &s[..end];
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some(&s[end + 1..])
}

/// All `[int]` occurrences in reading order. Values too large for u32 are
/// clamped to u32::MAX, which is out of range for any real window and thus
/// classifies as WrongFormat.
fn extract_indices(raw: &str) -> Vec<u32> {
    let mut out = Vec::new();
    let bytes = raw.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'[' {
            let mut j = i + 1;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            if j > i + 1 && j < bytes.len() && bytes[j] == b']' {
                let digits = &raw[i + 1..j];
                out.push(digits.parse::<u32>().unwrap_or(u32::MAX));
                i = j + 1;
                continue;
            }
        }
        i += 1;
    }
    out
}

/// Deterministically turn any extracted index sequence into a permutation of
/// 1..=m: drop out-of-range values, keep the first occurrence of each index,
/// then append every absent index in ascending order (i.e. items the
/// response never ranked keep their original window order).
pub fn repair(extracted: &[u32], m: usize) -> Vec<u32> {
    assert!(m >= 1, "window size must be at least 1");
    let mut seen = vec![false; m + 1];
    let mut out = Vec::with_capacity(m);
    for &v in extracted {
        if v >= 1 && (v as usize) <= m && !seen[v as usize] {
            seen[v as usize] = true;
            out.push(v);
        }
    }
    for idx in 1..=m as u32 {
        if !seen[idx as usize] {
            out.push(idx);
        }
    }
    out
}

/// Render a permutation in the response syntax, e.g. `[2] > [1] > [3]`.
pub fn format_ranking(permutation: &[u32]) -> String {
    let parts: Vec<String> = permutation.iter().map(|i| format!("[{i}]")).collect();
    parts.join(" > ")
}

/// Thread-safe tally of response statuses across a run.
#[derive(Debug, Default)]
pub struct StatusTally {
    ok: AtomicU64,
    wrong_format: AtomicU64,
    repetition: AtomicU64,
    missing: AtomicU64,
}

impl StatusTally {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, status: ResponseStatus) {
        let counter = match status {
            ResponseStatus::Ok => &self.ok,
            ResponseStatus::WrongFormat => &self.wrong_format,
            ResponseStatus::Repetition => &self.repetition,
            ResponseStatus::Missing => &self.missing,
        };
        counter.fetch_add(1, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> MalformedStats {
        MalformedStats {
            ok: self.ok.load(Ordering::Relaxed),
            wrong_format: self.wrong_format.load(Ordering::Relaxed),
            repetition: self.repetition.load(Ordering::Relaxed),
            missing: self.missing.load(Ordering::Relaxed),
        }
    }
}

/// Final counts per status.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MalformedStats {
    pub ok: u64,
    pub wrong_format: u64,
    pub repetition: u64,
    pub missing: u64,
}

impl MalformedStats {
    pub fn total(&self) -> u64 {
        self.ok + self.wrong_format + self.repetition + self.missing
    }

    pub fn count(&self, status: ResponseStatus) -> u64 {
        match status {
            ResponseStatus::Ok => self.ok,
            ResponseStatus::WrongFormat => self.wrong_format,
            ResponseStatus::Repetition => self.repetition,
            ResponseStatus::Missing => self.missing,
        }
    }

    /// Percentage of responses with the given status (0 when empty).
    pub fn percent(&self, status: ResponseStatus) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            100.0 * self.count(status) as f64 / total as f64
        }
    }
}

/// Report layout: four percentage columns in a fixed order.
impl fmt::Display for MalformedStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>8} {:>12} {:>12} {:>8}",
            "OK", "Wrong Format", "Repetition", "Missing"
        )?;
        write!(
            f,
            "{:>7.2}% {:>11.2}% {:>11.2}% {:>7.2}%",
            self.percent(ResponseStatus::Ok),
            self.percent(ResponseStatus::WrongFormat),
            self.percent(ResponseStatus::Repetition),
            self.percent(ResponseStatus::Missing),
        )
    }
}

/// Tally a finished collection of parses.
pub fn tally<'a, I>(parses: I) -> MalformedStats
where
    I: IntoIterator<Item = &'a ParsedRanking>,
{
    let tally = StatusTally::new();
    for p in parses {
        tally.record(p.status);
    }
    tally.snapshot()
}
