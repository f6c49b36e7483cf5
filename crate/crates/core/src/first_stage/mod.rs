//! First-stage candidate generation: a built-in BM25 retriever and a
//! pass-through over imported run files, behind one `retrieve` interface so
//! the reranker never cares where candidates came from.

pub mod analyzer;
mod bm25;
mod index;
pub mod porter;

pub use bm25::{bm25_search, idf, Bm25Params, SearchError};
pub use index::{IndexError, InvertedIndex, Posting, INDEX_FORMAT_VERSION};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::corpus_store::{Query, RankedList};

#[derive(Debug, Error)]
pub enum RetrieveError {
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("no candidates for qid {0:?} in imported run")]
    MissingQuery(String),
}

/// Where candidates come from.
pub enum RetrievalSource {
    Bm25 {
        index: InvertedIndex,
        params: Bm25Params,
        tag: String,
    },
    /// Pre-computed lists keyed by qid (an external retriever's run file).
    ImportedRun(BTreeMap<String, RankedList>),
}

impl RetrievalSource {
    pub fn from_run(lists: Vec<RankedList>) -> Self {
        Self::ImportedRun(lists.into_iter().map(|l| (l.qid.clone(), l)).collect())
    }

    /// Top-k candidates for one query. BM25 sources search the index;
    /// imported runs truncate their stored list. An imported run without
    /// the qid is an explicit error, never an empty list.
    pub fn retrieve(&self, query: &Query, k: usize) -> Result<RankedList, RetrieveError> {
        match self {
            Self::Bm25 { index, params, tag } => Ok(bm25_search(index, query, k, params, tag)?),
            Self::ImportedRun(lists) => {
                let list = lists
                    .get(&query.qid)
                    .ok_or_else(|| RetrieveError::MissingQuery(query.qid.clone()))?;
                let mut truncated = list.clone();
                truncated.items.truncate(k);
                Ok(truncated)
            }
        }
    }
}
