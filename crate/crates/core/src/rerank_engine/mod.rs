//! Listwise reranking over sliding windows.
//!
//! A query's candidate list is refined window by window, bottom of the list
//! first: each window of `w` passages is rendered into a prompt, the backend
//! returns a ranking, and the (repaired) permutation is applied in place.
//! Because consecutive windows overlap by `w - s`, a passage can climb into
//! the next window's territory and keep climbing all the way to rank 1 in a
//! single pass. Additional passes repeat the sweep over the updated list.
//!
//! Every window keeps a full record — raw response, parse status, repaired
//! permutation, retries — so a run can be audited, tallied, and replayed
//! byte for byte through [`ScriptedBackend`].

mod backend;
mod http;
mod schedule;
mod shuffle;

pub use backend::{
    Backend, BackendError, BackendRequest, BackendResponse, IdentityBackend, OracleBackend,
    ScriptedBackend,
};
pub use http::{HttpBackend, HttpBackendConfig};
pub use schedule::{window_schedule, ConfigError, WindowConfig};
pub use shuffle::{shuffle_harness, ShuffleError, ShuffleOptions, ShuffleReport};

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus_store::RankedList;
use crate::parallel;
use crate::prompt_builder::{render, PromptError, PromptWindow, RenderOptions};
use crate::response_codec::{parse, ParsedRanking, ResponseStatus, StatusTally};

#[derive(Debug, Error)]
pub enum RerankError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("query {qid}: {source}")]
    Prompt {
        qid: String,
        #[source]
        source: PromptError,
    },
    #[error("query {qid}: {message}")]
    Backend { qid: String, message: String },
}

/// How one query is reranked: window geometry, prompt rendering, and the
/// number of queries processed concurrently.
#[derive(Debug, Clone, Copy)]
pub struct RerankOptions {
    pub window: WindowConfig,
    pub render: RenderOptions,
    pub workers: usize,
}

impl Default for RerankOptions {
    fn default() -> Self {
        Self {
            window: WindowConfig::default(),
            render: RenderOptions::default(),
            workers: 1,
        }
    }
}

/// One backend call over one window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowRecord {
    /// 1-based pass number.
    pub pass: usize,
    pub window_start: usize,
    pub window_len: usize,
    /// `None` when transport failed and the window kept its order.
    pub response: Option<ParsedRanking>,
    pub retries: u32,
}

impl WindowRecord {
    pub fn is_fallback(&self) -> bool {
        self.response.is_none()
    }
}

/// One full sweep over the list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassTrace {
    /// 1-based pass number.
    pub pass: usize,
    /// Doc ids entering the pass, best-first.
    pub input: Vec<String>,
    /// Doc ids leaving the pass, best-first.
    pub output: Vec<String>,
    pub windows: Vec<WindowRecord>,
}

/// Complete audit trail for one query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RerankTrace {
    pub qid: String,
    pub passes: Vec<PassTrace>,
}

impl RerankTrace {
    /// Window records in processing order across all passes.
    pub fn windows(&self) -> impl Iterator<Item = &WindowRecord> {
        self.passes.iter().flat_map(|p| p.windows.iter())
    }

    /// Count each answered window's parse status (fallback windows are
    /// skipped: there was no response to classify).
    pub fn record_statuses(&self, tally: &StatusTally) {
        for record in self.windows() {
            if let Some(parsed) = &record.response {
                tally.record(parsed.status);
            }
        }
    }
}

/// Result of reranking one query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryRerank {
    pub qid: String,
    /// Doc ids best-first after all passes.
    pub ranking: Vec<String>,
    pub trace: RerankTrace,
}

impl QueryRerank {
    /// Final ranking as a run row set with synthetic descending scores
    /// (`n`, `n-1`, ..., `1`), so rank order survives score-sorted readers.
    pub fn to_ranked_list(&self, tag: &str) -> RankedList {
        let n = self.ranking.len();
        let scored = self
            .ranking
            .iter()
            .enumerate()
            .map(|(i, doc)| (doc.clone(), (n - i) as f64))
            .collect();
        RankedList::from_scored(&self.qid, tag, scored)
    }
}

/// One query's input to the reranker: its text and the candidates to
/// reorder, best-first, as `(doc_id, passage_text)` pairs.
#[derive(Debug, Clone)]
pub struct RerankTask {
    pub qid: String,
    pub query_text: String,
    pub candidates: Vec<(String, String)>,
}

fn apply_window(
    backend: &dyn Backend,
    task: &RerankTask,
    order: &mut [usize],
    range: std::ops::Range<usize>,
    pass: usize,
    opts: &RerankOptions,
) -> Result<WindowRecord, RerankError> {
    let slice: Vec<usize> = order[range.clone()].to_vec();
    let passages = slice
        .iter()
        .map(|&i| task.candidates[i].clone())
        .collect::<Vec<_>>();
    let window = PromptWindow::new(&task.qid, &task.query_text, passages).map_err(|source| {
        RerankError::Prompt {
            qid: task.qid.clone(),
            source,
        }
    })?;
    let prompt = render(&window, &opts.render).map_err(|source| RerankError::Prompt {
        qid: task.qid.clone(),
        source,
    })?;
    let request = BackendRequest {
        qid: &task.qid,
        window_start: range.start,
        prompt: &prompt,
        window: &window,
    };
    match backend.generate(&request) {
        Ok(response) => {
            let parsed = parse(&response.text, slice.len());
            for (j, &p) in parsed.permutation.iter().enumerate() {
                order[range.start + j] = slice[p as usize - 1];
            }
            Ok(WindowRecord {
                pass,
                window_start: range.start,
                window_len: slice.len(),
                response: Some(parsed),
                retries: response.retries,
            })
        }
        Err(BackendError::Transport(message)) => {
            log::warn!(
                "query {}: window [{}, {}) kept its order after transport failure: {}",
                task.qid,
                range.start,
                range.end,
                message
            );
            Ok(WindowRecord {
                pass,
                window_start: range.start,
                window_len: slice.len(),
                response: None,
                retries: 0,
            })
        }
        Err(BackendError::Fatal(message)) => Err(RerankError::Backend {
            qid: task.qid.clone(),
            message,
        }),
    }
}

fn pass_over(
    backend: &dyn Backend,
    task: &RerankTask,
    order: &mut [usize],
    pass: usize,
    opts: &RerankOptions,
) -> Result<PassTrace, RerankError> {
    let doc_at = |order: &[usize]| -> Vec<String> {
        order
            .iter()
            .map(|&i| task.candidates[i].0.clone())
            .collect()
    };
    let input = doc_at(order);
    let mut windows = Vec::new();
    for range in window_schedule(order.len(), &opts.window)? {
        windows.push(apply_window(backend, task, order, range, pass, opts)?);
    }
    Ok(PassTrace {
        pass,
        input,
        output: doc_at(order),
        windows,
    })
}

/// Rerank one query's candidates through every pass.
pub fn rerank_query(
    backend: &dyn Backend,
    task: &RerankTask,
    opts: &RerankOptions,
) -> Result<QueryRerank, RerankError> {
    opts.window.validate()?;
    if task.candidates.is_empty() {
        return Err(ConfigError::EmptyList.into());
    }
    let mut order: Vec<usize> = (0..task.candidates.len()).collect();
    let mut passes = Vec::with_capacity(opts.window.passes);
    for pass in 1..=opts.window.passes {
        passes.push(pass_over(backend, task, &mut order, pass, opts)?);
    }
    let ranking = order
        .iter()
        .map(|&i| task.candidates[i].0.clone())
        .collect();
    Ok(QueryRerank {
        qid: task.qid.clone(),
        ranking,
        trace: RerankTrace {
            qid: task.qid.clone(),
            passes,
        },
    })
}

/// Rerank many queries, up to `opts.workers` concurrently. Results come
/// back in task order regardless of worker count; the first fatal error
/// (by task order) aborts the batch.
pub fn rerank_batch(
    backend: &dyn Backend,
    tasks: Vec<RerankTask>,
    opts: &RerankOptions,
) -> Result<Vec<QueryRerank>, RerankError> {
    let results = parallel::map_limit(tasks, opts.workers, |task| {
        rerank_query(backend, &task, opts)
    });
    results.into_iter().collect()
}

/// One line of a replayable transcript: the raw response a backend gave
/// for one window, with its classification and repaired permutation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub qid: String,
    pub window_start: usize,
    pub raw: String,
    pub status: ResponseStatus,
    pub permutation: Vec<u32>,
}

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("transcript line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Answered windows of one query in processing order, ready to write.
/// Fallback windows are absent: a replay must re-fail or re-ask, not
/// pretend a response existed.
pub fn transcript_records(trace: &RerankTrace) -> Vec<TranscriptRecord> {
    trace
        .windows()
        .filter_map(|record| {
            record.response.as_ref().map(|parsed| TranscriptRecord {
                qid: trace.qid.clone(),
                window_start: record.window_start,
                raw: parsed.raw.clone(),
                status: parsed.status,
                permutation: parsed.permutation.clone(),
            })
        })
        .collect()
}

/// Write records as JSON lines. Callers group records by query in input
/// order so the bytes do not depend on worker count.
pub fn write_transcript<W: Write>(
    mut writer: W,
    records: &[TranscriptRecord],
) -> Result<(), TranscriptError> {
    for record in records {
        serde_json::to_writer(&mut writer, record)
            .map_err(|e| TranscriptError::Io(io::Error::new(io::ErrorKind::InvalidData, e)))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Read a JSON-lines transcript; blank lines are allowed and skipped.
pub fn load_transcript<R: BufRead>(reader: R) -> Result<Vec<TranscriptRecord>, TranscriptError> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TranscriptRecord =
            serde_json::from_str(&line).map_err(|source| TranscriptError::Parse {
                line: idx + 1,
                source,
            })?;
        records.push(record);
    }
    Ok(records)
}
