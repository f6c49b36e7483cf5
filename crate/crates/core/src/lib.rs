//! Listwise reranking pipeline: BM25 first-stage retrieval, sliding-window
//! reranking through pluggable backends, response parsing and repair,
//! distillation dataset generation, and TREC-style evaluation.
//!
//! The crate is organized by pipeline stage:
//!
//! - [`corpus_store`]: corpora, queries, qrels, run files, embeddings
//! - [`first_stage`]: analyzer, inverted index, BM25 search, imported runs
//! - [`prompt_builder`]: text normalization and prompt assembly
//! - [`response_codec`]: parsing/classifying/repairing ranking responses
//! - [`rerank_engine`]: sliding windows, progressive passes, backends
//! - [`distill_gen`]: training-set construction from teacher reorderings
//! - [`eval_metrics`]: nDCG/MAP/Judged, aggregation, confidence intervals
//!
//! Everything runs deterministically from a single seed (see [`seeds`]);
//! batch work is parallel over queries via [`parallel`], with a sequential
//! fallback when the `parallel` feature is disabled.

pub mod corpus_store;
pub mod distill_gen;
pub mod eval_metrics;
pub mod first_stage;
pub mod parallel;
pub mod prompt_builder;
pub mod rerank_engine;
pub mod response_codec;
pub mod seeds;
