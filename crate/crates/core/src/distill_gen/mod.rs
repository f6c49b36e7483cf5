//! Training-set construction from teacher reorderings.
//!
//! A stronger model ("teacher") has already reranked candidate windows; its
//! raw responses arrive as JSONL records. This module turns them into
//! prompt/target training pairs: responses that do not parse cleanly are
//! dropped (with a taxonomy breakdown), clean ones are augmented with
//! shuffled input orders and randomly sampled sub-windows — re-indexing the
//! target each time so it always denotes the teacher's document ordering —
//! and query-selection helpers pick which queries feed the set, either
//! uniformly or by spreading out in embedding space.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus_store::EmbeddingTable;
use crate::parallel;
use crate::prompt_builder::{render, PromptError, PromptWindow, RenderOptions};
use crate::response_codec::{format_ranking, parse, MalformedStats, ResponseStatus, StatusTally};
use crate::seeds::{derived_seed, rng_from_derived};

/// Teacher windows never exceed this many passages.
pub const MAX_TEACHER_WINDOW: usize = 20;

#[derive(Debug, Error)]
pub enum DistillError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("teacher record line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("record {qid}: empty input order")]
    EmptyWindow { qid: String },
    #[error("record {qid}: {len} docs exceeds the window cap of {MAX_TEACHER_WINDOW}")]
    WindowTooLarge { qid: String, len: usize },
    #[error("record {qid}: doc {doc_id} appears twice in the input order")]
    DuplicateDoc { qid: String, doc_id: String },
    #[error("record {qid}: expected {expected} passage texts, got {got}")]
    TextsMismatch {
        qid: String,
        expected: usize,
        got: usize,
    },
    #[error("record {qid}: teacher response classified {status:?}, only OK records train")]
    NotOk { qid: String, status: ResponseStatus },
    #[error("record {qid}: {source}")]
    Prompt {
        qid: String,
        #[source]
        source: PromptError,
    },
    #[error("query {0} has no embedding")]
    MissingEmbedding(String),
    #[error("asked for {count} queries but the pool holds {pool}")]
    CountExceedsPool { count: usize, pool: usize },
    #[error("selection count must be at least 1")]
    InvalidCount,
}

/// Which first stage produced the candidate list the teacher saw.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceTag {
    Bm25,
    Ada2,
    #[default]
    Other,
}

/// One teacher interaction as it arrives on disk: the candidate order the
/// teacher was shown and its verbatim response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeacherRecord {
    pub qid: String,
    pub input_order: Vec<String>,
    pub teacher_raw: String,
    #[serde(default)]
    pub source_tag: SourceTag,
}

impl TeacherRecord {
    pub fn window_size(&self) -> usize {
        self.input_order.len()
    }

    pub fn validate(&self) -> Result<(), DistillError> {
        if self.input_order.is_empty() {
            return Err(DistillError::EmptyWindow {
                qid: self.qid.clone(),
            });
        }
        if self.input_order.len() > MAX_TEACHER_WINDOW {
            return Err(DistillError::WindowTooLarge {
                qid: self.qid.clone(),
                len: self.input_order.len(),
            });
        }
        let mut seen = HashMap::new();
        for doc in &self.input_order {
            if seen.insert(doc.as_str(), ()).is_some() {
                return Err(DistillError::DuplicateDoc {
                    qid: self.qid.clone(),
                    doc_id: doc.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Read teacher records from JSONL; blank lines are skipped.
pub fn load_teacher_records<R: BufRead>(reader: R) -> Result<Vec<TeacherRecord>, DistillError> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TeacherRecord =
            serde_json::from_str(&line).map_err(|source| DistillError::Parse {
                line: idx + 1,
                source,
            })?;
        record.validate()?;
        records.push(record);
    }
    Ok(records)
}

/// Keep only records whose teacher response parses clean (status OK) for
/// its own window size; report how the rest break down.
pub fn filter_malformed(
    records: Vec<TeacherRecord>,
) -> Result<(Vec<TeacherRecord>, MalformedStats), DistillError> {
    let tally = StatusTally::new();
    let mut kept = Vec::new();
    for record in records {
        record.validate()?;
        let parsed = parse(&record.teacher_raw, record.window_size());
        tally.record(parsed.status);
        if parsed.status == ResponseStatus::Ok {
            kept.push(record);
        }
    }
    Ok((kept, tally.snapshot()))
}

/// A clean teacher record joined with the texts needed to render prompts.
/// Construction re-parses the response and refuses anything but OK.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedRecord {
    pub record: TeacherRecord,
    pub query_text: String,
    /// Passage texts aligned with `record.input_order`.
    pub texts: Vec<String>,
    /// Teacher ranking as 1-based indices into `input_order`, best first.
    pub teacher_permutation: Vec<u32>,
}

impl ResolvedRecord {
    pub fn new(
        record: TeacherRecord,
        query_text: String,
        texts: Vec<String>,
    ) -> Result<Self, DistillError> {
        record.validate()?;
        if texts.len() != record.input_order.len() {
            return Err(DistillError::TextsMismatch {
                qid: record.qid.clone(),
                expected: record.input_order.len(),
                got: texts.len(),
            });
        }
        let parsed = parse(&record.teacher_raw, record.window_size());
        if parsed.status != ResponseStatus::Ok {
            return Err(DistillError::NotOk {
                qid: record.qid.clone(),
                status: parsed.status,
            });
        }
        Ok(Self {
            record,
            query_text,
            texts,
            teacher_permutation: parsed.permutation,
        })
    }

    pub fn window_size(&self) -> usize {
        self.record.input_order.len()
    }

    /// Teacher's ranking as doc ids, best first.
    pub fn teacher_doc_order(&self) -> Vec<&str> {
        self.teacher_permutation
            .iter()
            .map(|&i| self.record.input_order[i as usize - 1].as_str())
            .collect()
    }

    /// Render one example whose window shows the original passages at
    /// `positions` (0-based into `input_order`), in that order. The target
    /// is the teacher ordering restricted to those passages, re-indexed to
    /// the new window numbering.
    fn example(
        &self,
        positions: &[usize],
        provenance: Provenance,
        opts: &RenderOptions,
    ) -> Result<TrainingExample, DistillError> {
        let passages: Vec<(String, String)> = positions
            .iter()
            .map(|&p| (self.record.input_order[p].clone(), self.texts[p].clone()))
            .collect();
        let mut old_to_new = HashMap::new();
        for (new_idx, &old_pos) in positions.iter().enumerate() {
            old_to_new.insert(old_pos, new_idx as u32 + 1);
        }
        let target: Vec<u32> = self
            .teacher_permutation
            .iter()
            .filter_map(|&i| old_to_new.get(&(i as usize - 1)).copied())
            .collect();
        let window =
            PromptWindow::new(&self.record.qid, &self.query_text, passages).map_err(|source| {
                DistillError::Prompt {
                    qid: self.record.qid.clone(),
                    source,
                }
            })?;
        let rendered = render(&window, opts).map_err(|source| DistillError::Prompt {
            qid: self.record.qid.clone(),
            source,
        })?;
        Ok(TrainingExample {
            system: rendered.system_text,
            user: rendered.user_text,
            target: format_ranking(&target),
            provenance,
        })
    }
}

/// How an example came to be; `seed` values are the per-example derived
/// seeds, so one artifact can be regenerated via
/// [`crate::seeds::rng_from_derived`] without replaying the batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Original,
    Shuffled { seed: u64 },
    Subset { p: usize, seed: u64 },
}

/// One prompt/target pair, serialized one-per-line for a fine-tuning stack.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub system: String,
    pub user: String,
    pub target: String,
    pub provenance: Provenance,
}

/// The original-order example plus `n_shuffles` copies whose windows are
/// seeded shuffles of the input, each target re-indexed so it denotes the
/// same document ordering under the new numbering.
pub fn augment_shuffled(
    record: &ResolvedRecord,
    n_shuffles: usize,
    seed: u64,
    opts: &RenderOptions,
) -> Result<Vec<TrainingExample>, DistillError> {
    let m = record.window_size();
    let identity: Vec<usize> = (0..m).collect();
    let mut out = vec![record.example(&identity, Provenance::Original, opts)?];
    for i in 0..n_shuffles {
        let derived = derived_seed(seed, "distill-shuffle", i as u64);
        let mut positions = identity.clone();
        positions.shuffle(&mut rng_from_derived(derived));
        out.push(record.example(&positions, Provenance::Shuffled { seed: derived }, opts)?);
    }
    Ok(out)
}

/// Rebuild the window positions a `Shuffled { seed }` example was rendered
/// with. Auditing hook: lets a checker verify an emitted example against
/// its record without trusting the emitter.
pub fn replay_shuffle(m: usize, derived: u64) -> Vec<usize> {
    let mut positions: Vec<usize> = (0..m).collect();
    positions.shuffle(&mut rng_from_derived(derived));
    positions
}

/// `n_subsets` examples over sub-windows: each picks a size `p` uniformly
/// from `[2, m]`, then `p` passages uniformly without replacement, shown in
/// their original relative order and re-indexed `1..=p`. Windows of one
/// passage can't rank anything, so `m < 2` emits nothing.
pub fn sample_subsets(
    record: &ResolvedRecord,
    n_subsets: usize,
    seed: u64,
    opts: &RenderOptions,
) -> Result<Vec<TrainingExample>, DistillError> {
    let m = record.window_size();
    if m < 2 {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(n_subsets);
    for j in 0..n_subsets {
        let derived = derived_seed(seed, "distill-subset", j as u64);
        let (p, positions) = draw_subset(m, derived);
        out.push(record.example(&positions, Provenance::Subset { p, seed: derived }, opts)?);
    }
    Ok(out)
}

/// Rebuild the (size, positions) a `Subset { seed }` example used.
pub fn replay_subset(m: usize, derived: u64) -> (usize, Vec<usize>) {
    draw_subset(m, derived)
}

fn draw_subset(m: usize, derived: u64) -> (usize, Vec<usize>) {
    let mut rng = rng_from_derived(derived);
    let p = rng.gen_range(2..=m);
    let mut positions = rand::seq::index::sample(&mut rng, m, p).into_vec();
    positions.sort_unstable();
    (p, positions)
}

#[derive(Debug, Clone, Copy)]
pub struct DistillOptions {
    /// Shuffled copies per record (the original is always emitted).
    pub n_shuffles: usize,
    /// Sub-window samples per record.
    pub n_subsets: usize,
    pub seed: u64,
    pub render: RenderOptions,
    pub workers: usize,
}

impl Default for DistillOptions {
    fn default() -> Self {
        Self {
            n_shuffles: 1,
            n_subsets: 3,
            seed: 0,
            render: RenderOptions::default(),
            workers: 1,
        }
    }
}

/// Expand every resolved record into its training examples. Record order is
/// preserved and each record's randomness depends only on the seed and its
/// position, so output is identical across worker counts.
pub fn build_dataset(
    records: Vec<ResolvedRecord>,
    opts: &DistillOptions,
) -> Result<Vec<TrainingExample>, DistillError> {
    let render = opts.render;
    let (n_shuffles, n_subsets, seed) = (opts.n_shuffles, opts.n_subsets, opts.seed);
    let per_record = parallel::map_limit(
        records.into_iter().enumerate().collect(),
        opts.workers,
        move |(idx, record)| -> Result<Vec<TrainingExample>, DistillError> {
            let record_seed = derived_seed(seed, "distill-record", idx as u64);
            let mut examples = augment_shuffled(&record, n_shuffles, record_seed, &render)?;
            examples.extend(sample_subsets(&record, n_subsets, record_seed, &render)?);
            Ok(examples)
        },
    );
    let mut out = Vec::new();
    for result in per_record {
        out.extend(result?);
    }
    Ok(out)
}

/// Write examples as JSONL, one per line.
pub fn write_examples<W: Write>(
    mut writer: W,
    examples: &[TrainingExample],
) -> Result<(), DistillError> {
    for example in examples {
        serde_json::to_writer(&mut writer, example)
            .map_err(|e| DistillError::Io(io::Error::new(io::ErrorKind::InvalidData, e)))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Seeded uniform sample of `count` qids without replacement. The result
/// order is the shuffle order; the same seed always returns the same list
/// regardless of how the pool was ordered.
pub fn select_queries_random(
    pool: &[String],
    count: usize,
    seed: u64,
) -> Result<Vec<String>, DistillError> {
    let mut sorted: Vec<&String> = pool.iter().collect();
    sorted.sort();
    sorted.dedup();
    if count > sorted.len() {
        return Err(DistillError::CountExceedsPool {
            count,
            pool: sorted.len(),
        });
    }
    let mut rng = crate::seeds::rng_for(seed, "query-select-random");
    sorted.shuffle(&mut rng);
    Ok(sorted.into_iter().take(count).cloned().collect())
}

/// Greedy spread in embedding space: the first pick is seeded-random, then
/// each step adds the remaining query whose worst-case similarity — the
/// maximum inner product against everything already selected — is smallest.
/// Ties prefer the lexicographically smaller qid, which (with the sorted
/// candidate walk) makes the outcome independent of pool order. Returns
/// qids in selection order.
pub fn select_queries_discriminative(
    pool: &[String],
    embeddings: &EmbeddingTable,
    count: usize,
    seed: u64,
) -> Result<Vec<String>, DistillError> {
    if count == 0 {
        return Err(DistillError::InvalidCount);
    }
    let mut candidates: Vec<&String> = pool.iter().collect();
    candidates.sort();
    candidates.dedup();
    for qid in &candidates {
        if !embeddings.contains(qid) {
            return Err(DistillError::MissingEmbedding((*qid).clone()));
        }
    }
    if count > candidates.len() {
        return Err(DistillError::CountExceedsPool {
            count,
            pool: candidates.len(),
        });
    }
    let mut rng = crate::seeds::rng_for(seed, "query-select-first");
    let first = rng.gen_range(0..candidates.len());
    let mut selected: Vec<&String> = vec![candidates.remove(first)];
    while selected.len() < count {
        let mut best: Option<(usize, f64)> = None;
        for (ci, candidate) in candidates.iter().enumerate() {
            let worst = selected
                .iter()
                .map(|s| {
                    embeddings
                        .inner_product(candidate, s)
                        .expect("presence checked above")
                })
                .fold(f64::NEG_INFINITY, f64::max);
            // Strict < keeps the earliest (smallest qid) among ties.
            if best.is_none_or(|(_, b)| worst < b) {
                best = Some((ci, worst));
            }
        }
        let (ci, _) = best.expect("count <= pool guarantees a candidate");
        selected.push(candidates.remove(ci));
    }
    Ok(selected.into_iter().cloned().collect())
}
