//! `listrank`: command-line front end for the listwise reranking pipeline.
//!
//! Subcommands cover the full loop — `index`, `retrieve`, `rerank`, `eval`,
//! `distill`, `select-queries`, `shuffle-eval`. Global flags `--config`
//! (TOML defaults), `--seed`, and `--workers` apply everywhere; explicit
//! flags beat config-file values. Diagnostics go to stderr, data to files,
//! and every output file gets a `.manifest.json` sidecar describing exactly
//! how it was produced.

pub mod args;
pub mod commands;
pub mod config;
pub mod manifest;
