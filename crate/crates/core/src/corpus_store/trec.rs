//! TREC run and qrels files.
//!
//! Run rows are `qid Q0 doc_id rank score tag`; qrels rows are
//! `qid 0 doc_id grade`. Both use ASCII whitespace separation and are
//! interoperable with `trec_eval` and the usual IR tooling.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::CorpusError;

/// One row of a ranked result list.
#[derive(Debug, Clone, PartialEq)]
pub struct RunItem {
    pub doc_id: String,
    /// 1-based position within the query's list.
    pub rank: u32,
    pub score: f64,
}

/// A single query's ranked documents, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub qid: String,
    pub tag: String,
    pub items: Vec<RunItem>,
}

impl RankedList {
    /// Build a list from `(doc_id, score)` pairs already in rank order;
    /// ranks are assigned 1..=len as given (no re-sorting).
    pub fn from_scored(qid: &str, tag: &str, scored: Vec<(String, f64)>) -> Self {
        let items = scored
            .into_iter()
            .enumerate()
            .map(|(i, (doc_id, score))| RunItem {
                doc_id,
                rank: i as u32 + 1,
                score,
            })
            .collect();
        Self {
            qid: qid.to_string(),
            tag: tag.to_string(),
            items,
        }
    }

    pub fn doc_ids(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.doc_id.as_str()).collect()
    }
}

/// Relevance judgments: qid → doc_id → graded relevance.
#[derive(Debug, Clone, Default)]
pub struct QrelsTable {
    by_query: BTreeMap<String, HashMap<String, i32>>,
    /// Rows whose (qid, doc_id) repeated an earlier row; last grade wins.
    pub duplicate_rows: usize,
}

impl QrelsTable {
    pub fn grade(&self, qid: &str, doc_id: &str) -> Option<i32> {
        self.by_query.get(qid).and_then(|m| m.get(doc_id)).copied()
    }

    /// Whether the query has any judgment rows at all (regardless of grade).
    pub fn has_query(&self, qid: &str) -> bool {
        self.by_query.contains_key(qid)
    }

    pub fn judgments(&self, qid: &str) -> Option<&HashMap<String, i32>> {
        self.by_query.get(qid)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.by_query.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.by_query.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_query.is_empty()
    }

    pub fn insert(&mut self, qid: &str, doc_id: &str, grade: i32) {
        let m = self.by_query.entry(qid.to_string()).or_default();
        if m.insert(doc_id.to_string(), grade).is_some() {
            self.duplicate_rows += 1;
        }
    }
}

/// Parse a qrels file. Duplicate (qid, doc_id) rows are counted and the
/// later grade overwrites the earlier one.
pub fn load_qrels(path: &Path) -> Result<QrelsTable, CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut table = QrelsTable::default();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_ascii_whitespace().collect();
        if fields.len() != 4 {
            return Err(parse_err(
                path,
                line_no,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let grade: i32 = fields[3]
            .parse()
            .map_err(|e| parse_err(path, line_no, format!("bad grade: {e}")))?;
        if grade < 0 {
            return Err(parse_err(path, line_no, format!("negative grade {grade}")));
        }
        table.insert(fields[0], fields[2], grade);
    }
    if table.duplicate_rows > 0 {
        log::warn!(
            "{}: {} duplicate qrels rows overwritten",
            path.display(),
            table.duplicate_rows
        );
    }
    Ok(table)
}

/// Parse a run file into per-query lists.
///
/// Rows are grouped by qid; within a query they are re-sorted by score
/// descending (stable, so file order breaks ties), truncated to `max_k`
/// when given, and re-ranked 1..=len. File rank values are ignored on read.
pub fn load_run(path: &Path, max_k: Option<usize>) -> Result<Vec<RankedList>, CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    // BTreeMap so output order is deterministic (qid ascending).
    let mut by_query: BTreeMap<String, (String, Vec<(String, f64)>)> = BTreeMap::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_ascii_whitespace().collect();
        if fields.len() != 6 {
            return Err(parse_err(
                path,
                line_no,
                format!("expected 6 fields, found {}", fields.len()),
            ));
        }
        let score: f64 = fields[4]
            .parse()
            .map_err(|e| parse_err(path, line_no, format!("bad score: {e}")))?;
        match by_query.entry(fields[0].to_string()) {
            Entry::Vacant(v) => {
                v.insert((fields[5].to_string(), vec![(fields[2].to_string(), score)]));
            }
            Entry::Occupied(mut o) => o.get_mut().1.push((fields[2].to_string(), score)),
        }
    }
    let mut lists = Vec::with_capacity(by_query.len());
    for (qid, (tag, mut scored)) in by_query {
        scored.sort_by(|a, b| b.1.total_cmp(&a.1));
        if let Some(k) = max_k {
            scored.truncate(k);
        }
        lists.push(RankedList::from_scored(&qid, &tag, scored));
    }
    Ok(lists)
}

/// Write ranked lists in run format. Scores are printed with six decimal
/// places so identical inputs produce byte-identical files.
pub fn write_run<'a, I>(path: &Path, lists: I) -> Result<(), CorpusError>
where
    I: IntoIterator<Item = &'a RankedList>,
{
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    write_run_to(&mut out, lists).map_err(io_err)?;
    out.flush().map_err(io_err)
}

/// Like [`write_run`] but to any writer.
pub fn write_run_to<'a, W, I>(out: &mut W, lists: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a RankedList>,
{
    for list in lists {
        for item in &list.items {
            writeln!(
                out,
                "{} Q0 {} {} {:.6} {}",
                list.qid, item.doc_id, item.rank, item.score, list.tag
            )?;
        }
    }
    Ok(())
}

fn parse_err(path: &Path, line_no: usize, msg: String) -> CorpusError {
    CorpusError::Parse {
        path: path.to_path_buf(),
        line: line_no + 1,
        msg,
    }
}

#[allow(unused)]
fn _path_buf(p: &Path) -> PathBuf {
    p.to_path_buf()
}
