//! The backend contract and the deterministic backends: identity (echoes
//! input order), oracle (sorts by qrels grade), and scripted (replays a
//! recorded transcript).

use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus_store::QrelsTable;
use crate::prompt_builder::{PromptWindow, RenderedPrompt};
use crate::response_codec::format_ranking;

use super::TranscriptRecord;

#[derive(Debug, Error)]
pub enum BackendError {
    /// Retrying cannot help (bad credentials, exhausted transcript); the
    /// whole rerank aborts.
    #[error("backend failure: {0}")]
    Fatal(String),
    /// The request never completed after the backend's own retries; the
    /// engine keeps the window's current order and moves on.
    #[error("transport failure: {0}")]
    Transport(String),
}

/// Everything a backend may look at for one window.
pub struct BackendRequest<'a> {
    pub qid: &'a str,
    /// Start of the window within the working list (0-based).
    pub window_start: usize,
    pub prompt: &'a RenderedPrompt,
    pub window: &'a PromptWindow,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendResponse {
    pub text: String,
    /// Transport-level retries spent on this request.
    pub retries: u32,
}

/// A ranking model seen from the engine: opaque text in, opaque text out.
pub trait Backend: Send + Sync {
    /// Short stable name (appears in manifests and run tags).
    fn name(&self) -> &str;
    /// Digest of everything that shapes behavior (model, endpoint,
    /// transcript bytes, ...), so manifests can prove two runs used the
    /// same backend.
    fn config_digest(&self) -> String;
    fn generate(&self, request: &BackendRequest<'_>) -> Result<BackendResponse, BackendError>;
}

pub(crate) fn short_digest(parts: &[&[u8]]) -> String {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p);
        hasher.update([0u8]);
    }
    let hex = format!("{:x}", hasher.finalize());
    hex[..12].to_string()
}

/// Echoes the window order back: `[1] > [2] > ... > [m]`. Reranking with it
/// is a no-op, which makes it the fixed point for plumbing tests.
#[derive(Debug, Default)]
pub struct IdentityBackend;

impl Backend for IdentityBackend {
    fn name(&self) -> &str {
        "identity"
    }

    fn config_digest(&self) -> String {
        short_digest(&[b"identity"])
    }

    fn generate(&self, request: &BackendRequest<'_>) -> Result<BackendResponse, BackendError> {
        let m = request.window.len() as u32;
        Ok(BackendResponse {
            text: format_ranking(&(1..=m).collect::<Vec<_>>()),
            retries: 0,
        })
    }
}

/// Ranks a window by qrels grade, descending, stable (ties and unjudged
/// docs keep their current order; unjudged counts as grade 0). A perfectly
/// informed, deterministic reranker for tests and pipeline validation.
#[derive(Debug)]
pub struct OracleBackend {
    qrels: QrelsTable,
}

impl OracleBackend {
    pub fn new(qrels: QrelsTable) -> Self {
        Self { qrels }
    }
}

impl Backend for OracleBackend {
    fn name(&self) -> &str {
        "oracle"
    }

    fn config_digest(&self) -> String {
        // The digest covers the judgments the oracle ranks by.
        let mut rows = Vec::new();
        for qid in self.qrels.query_ids() {
            let mut docs: Vec<(&String, &i32)> =
                self.qrels.judgments(qid).into_iter().flatten().collect();
            docs.sort();
            for (doc, grade) in docs {
                rows.push(format!("{qid}\t{doc}\t{grade}"));
            }
        }
        short_digest(&[b"oracle", rows.join("\n").as_bytes()])
    }

    fn generate(&self, request: &BackendRequest<'_>) -> Result<BackendResponse, BackendError> {
        let mut indices: Vec<u32> = (1..=request.window.len() as u32).collect();
        let grade = |idx: u32| {
            let doc_id = &request.window.passages[idx as usize - 1].doc_id;
            self.qrels.grade(request.qid, doc_id).unwrap_or(0)
        };
        indices.sort_by_key(|&i| std::cmp::Reverse(grade(i)));
        Ok(BackendResponse {
            text: format_ranking(&indices),
            retries: 0,
        })
    }
}

/// Replays raw responses from a recorded transcript, in order, per query.
/// Each request must line up with the next record for its qid (same window
/// start); any divergence or exhaustion is fatal, so replays are exact.
#[derive(Debug)]
pub struct ScriptedBackend {
    queues: Mutex<HashMap<String, VecDeque<TranscriptRecord>>>,
    digest: String,
}

impl ScriptedBackend {
    pub fn new(records: Vec<TranscriptRecord>) -> Self {
        let mut serialized = String::new();
        let mut queues: HashMap<String, VecDeque<TranscriptRecord>> = HashMap::new();
        for rec in records {
            serialized.push_str(&serde_json::to_string(&rec).expect("record serializes"));
            serialized.push('\n');
            queues.entry(rec.qid.clone()).or_default().push_back(rec);
        }
        Self {
            queues: Mutex::new(queues),
            digest: short_digest(&[b"scripted", serialized.as_bytes()]),
        }
    }
}

impl Backend for ScriptedBackend {
    fn name(&self) -> &str {
        "scripted"
    }

    fn config_digest(&self) -> String {
        self.digest.clone()
    }

    fn generate(&self, request: &BackendRequest<'_>) -> Result<BackendResponse, BackendError> {
        let mut queues = self.queues.lock().expect("scripted backend poisoned");
        let queue = queues.get_mut(request.qid).ok_or_else(|| {
            BackendError::Fatal(format!("no transcript for qid {:?}", request.qid))
        })?;
        let record = queue.pop_front().ok_or_else(|| {
            BackendError::Fatal(format!("transcript exhausted for qid {:?}", request.qid))
        })?;
        if record.window_start != request.window_start {
            return Err(BackendError::Fatal(format!(
                "transcript out of step for qid {:?}: recorded window {} but engine asked for {}",
                request.qid, record.window_start, request.window_start
            )));
        }
        Ok(BackendResponse {
            text: record.raw,
            retries: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt_builder::{render, RenderOptions};
    use crate::response_codec::ResponseStatus;

    fn request<'a>(
        window: &'a PromptWindow,
        prompt: &'a RenderedPrompt,
        start: usize,
    ) -> BackendRequest<'a> {
        BackendRequest {
            qid: "q1",
            window_start: start,
            prompt,
            window,
        }
    }

    fn window(docs: &[&str]) -> (PromptWindow, RenderedPrompt) {
        let w = PromptWindow::new(
            "q1",
            "query",
            docs.iter()
                .map(|d| (d.to_string(), format!("text of {d}")))
                .collect(),
        )
        .unwrap();
        let p = render(&w, &RenderOptions::default()).unwrap();
        (w, p)
    }

    #[test]
    fn identity_echoes_window_order() {
        let (w, p) = window(&["a", "b", "c"]);
        let resp = IdentityBackend.generate(&request(&w, &p, 0)).unwrap();
        assert_eq!(resp.text, "[1] > [2] > [3]");
    }

    #[test]
    fn oracle_sorts_by_grade_stable() {
        let mut qrels = QrelsTable::default();
        qrels.insert("q1", "a", 1);
        qrels.insert("q1", "b", 3);
        qrels.insert("q1", "d", 1);
        // c unjudged → grade 0; a and d tie → keep window order.
        let (w, p) = window(&["a", "b", "c", "d"]);
        let oracle = OracleBackend::new(qrels);
        let resp = oracle.generate(&request(&w, &p, 0)).unwrap();
        assert_eq!(resp.text, "[2] > [1] > [4] > [3]");
    }

    #[test]
    fn scripted_replays_in_order_and_checks_window() {
        let records = vec![
            TranscriptRecord {
                qid: "q1".into(),
                window_start: 2,
                raw: "[2] > [1]".into(),
                status: ResponseStatus::Ok,
                permutation: vec![2, 1],
            },
            TranscriptRecord {
                qid: "q1".into(),
                window_start: 0,
                raw: "[1] > [2]".into(),
                status: ResponseStatus::Ok,
                permutation: vec![1, 2],
            },
        ];
        let backend = ScriptedBackend::new(records);
        let (w, p) = window(&["a", "b"]);
        let first = backend.generate(&request(&w, &p, 2)).unwrap();
        assert_eq!(first.text, "[2] > [1]");
        // Window mismatch after the first pop: engine asks 2 again.
        let err = backend.generate(&request(&w, &p, 2)).unwrap_err();
        assert!(matches!(err, BackendError::Fatal(_)));
    }

    #[test]
    fn scripted_exhaustion_is_fatal() {
        let backend = ScriptedBackend::new(vec![]);
        let (w, p) = window(&["a"]);
        assert!(matches!(
            backend.generate(&request(&w, &p, 0)),
            Err(BackendError::Fatal(_))
        ));
    }

    #[test]
    fn digests_distinguish_configurations() {
        let mut q1 = QrelsTable::default();
        q1.insert("q1", "a", 1);
        let mut q2 = QrelsTable::default();
        q2.insert("q1", "a", 2);
        assert_ne!(
            OracleBackend::new(q1).config_digest(),
            OracleBackend::new(q2).config_digest()
        );
        assert_eq!(
            IdentityBackend.config_digest(),
            IdentityBackend.config_digest()
        );
    }
}
