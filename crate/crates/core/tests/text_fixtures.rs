//! Reference-table checks for passage normalization and the token estimate.
//!
//! Both tables live under `tests/fixtures/` and were produced outside this
//! codebase: the mojibake rows by actually encoding text as UTF-8 and
//! re-decoding the bytes as Windows-1252, the token counts by a real
//! cl100k_base tokenizer (see `tools/token_counts.py`). The tests hold the
//! library to those independently derived answers.

use std::fs;
use std::path::Path;

use listrank_core::prompt_builder::{
    estimate_tokens, normalize_passage, render, PromptWindow, RenderOptions,
};
use serde::Deserialize;
use sha2::{Digest, Sha256};

fn fixture(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name);
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

#[test]
fn mojibake_table_is_repaired_row_by_row() {
    let table = fixture("mojibake.tsv");
    let mut rows = 0;
    for line in table.lines() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let (garbled, expected) = line.split_once('\t').expect("two tab-separated columns");
        assert_eq!(normalize_passage(garbled), expected, "garbled {garbled:?}");
        // The clean side must already be a fixpoint.
        assert_eq!(
            normalize_passage(expected),
            expected,
            "unstable {expected:?}"
        );
        rows += 1;
    }
    assert!(rows >= 15, "table unexpectedly small: {rows} rows");
}

#[test]
fn estimate_dominates_true_token_counts() {
    let table = fixture("token_counts.tsv");
    let mut rows = 0;
    for line in table.lines() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let (count, text) = line.split_once('\t').expect("two tab-separated columns");
        let count: usize = count.parse().expect("count column");
        assert!(count > 0);
        let estimate = estimate_tokens(text);
        assert!(
            estimate >= count,
            "estimate {estimate} under true count {count} for {text:?}"
        );
        rows += 1;
    }
    assert!(rows >= 8, "table unexpectedly small: {rows} rows");
}

#[derive(Deserialize)]
struct PromptFixture {
    query: String,
    passages: Vec<String>,
    system_tokens: usize,
    user_tokens: usize,
    user_sha256: String,
}

#[test]
fn rendered_prompt_estimate_covers_true_token_count() {
    let fx: PromptFixture = serde_json::from_str(&fixture("rendered_prompt_tokens.json")).unwrap();
    let window = PromptWindow::new(
        "q1",
        &fx.query,
        fx.passages
            .iter()
            .enumerate()
            .map(|(i, p)| (format!("d{}", i + 1), p.clone()))
            .collect(),
    )
    .unwrap();
    let rendered = render(&window, &RenderOptions::default()).unwrap();

    // The recorded counts are for these exact bytes; if the templates
    // change, regenerate the fixture with tools/token_counts.py.
    let digest = format!("{:x}", Sha256::digest(rendered.user_text.as_bytes()));
    assert_eq!(
        digest, fx.user_sha256,
        "user prompt bytes drifted from the fixture"
    );

    let true_total = fx.system_tokens + fx.user_tokens;
    assert!(
        rendered.token_estimate >= true_total,
        "estimate {} under true prompt count {true_total}",
        rendered.token_estimate
    );
}
