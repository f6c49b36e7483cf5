//! BM25 scoring and top-k search over an [`InvertedIndex`].

use std::collections::HashMap;

use thiserror::Error;

use crate::corpus_store::{Query, RankedList};

use super::analyzer;
use super::index::InvertedIndex;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("k must be positive")]
    BadK,
}

/// BM25 free parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 0.9, b: 0.4 }
    }
}

/// `ln(1 + (N - df + 0.5) / (df + 0.5))`, floored at zero.
pub fn idf(doc_count: usize, df: usize) -> f64 {
    let n = doc_count as f64;
    let df = df as f64;
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln().max(0.0)
}

/// Score one document for one term occurrence.
fn term_score(idf: f64, tf: u32, doc_len: u32, avg_len: f64, params: &Bm25Params) -> f64 {
    let tf = tf as f64;
    let norm = if avg_len > 0.0 {
        1.0 - params.b + params.b * doc_len as f64 / avg_len
    } else {
        1.0
    };
    idf * tf * (params.k1 + 1.0) / (tf + params.k1 * norm)
}

/// Top-k documents by BM25 score.
///
/// The query runs through the same analyzer as the corpus; repeated query
/// terms contribute once per occurrence. Only documents containing at least
/// one query term are candidates, so the list may be shorter than `k`. Ties
/// break by doc_id ascending. A query that analyzes to zero terms returns
/// an empty list.
pub fn bm25_search(
    index: &InvertedIndex,
    query: &Query,
    k: usize,
    params: &Bm25Params,
    tag: &str,
) -> Result<RankedList, SearchError> {
    if k == 0 {
        return Err(SearchError::BadK);
    }
    let terms = analyzer::analyze(&query.text);
    let mut scores: HashMap<u32, f64> = HashMap::new();
    for term in &terms {
        let Some(postings) = index.postings(term) else {
            continue;
        };
        let idf = idf(index.doc_count(), postings.len());
        for &(doc, tf) in postings {
            *scores.entry(doc).or_insert(0.0) += term_score(
                idf,
                tf,
                index.doc_length(doc),
                index.avg_doc_length(),
                params,
            );
        }
    }
    let mut scored: Vec<(&str, f64)> = scores
        .into_iter()
        .map(|(doc, score)| (index.doc_id(doc), score))
        .collect();
    scored.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    scored.truncate(k);
    Ok(RankedList::from_scored(
        &query.qid,
        tag,
        scored
            .into_iter()
            .map(|(doc, score)| (doc.to_string(), score))
            .collect(),
    ))
}
