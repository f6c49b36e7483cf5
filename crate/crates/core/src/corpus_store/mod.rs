//! Corpora, queries, qrels, run files, and query-embedding tables.
//!
//! Everything here is read-only after load and safe to share across threads.
//! Corpus text stays on disk; only an id → byte-span index is held in memory,
//! so passage lookup works at MS MARCO scale without loading the collection.

mod embedding;
mod trec;

pub use embedding::EmbeddingTable;
pub use trec::{load_qrels, load_run, write_run, write_run_to, QrelsTable, RankedList, RunItem};

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

/// A corpus passage with a stable identifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
}

/// A search query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub qid: String,
    pub text: String,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("duplicate doc_id {id:?} at {path}:{line}")]
    DuplicateId {
        path: PathBuf,
        line: usize,
        id: String,
    },
    #[error("empty corpus file {path}")]
    Empty { path: PathBuf },
    #[error("unknown doc_id {0:?}")]
    UnknownDoc(String),
    #[error("unknown qid {0:?}")]
    UnknownQuery(String),
}

/// On-disk corpus input formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One JSON object per line with keys `"id"` and `"contents"`.
    Jsonl,
    /// Two tab-separated columns: id, text.
    Tsv,
}

impl CorpusFormat {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "jsonl" => Some(Self::Jsonl),
            "tsv" => Some(Self::Tsv),
            _ => None,
        }
    }
}

#[derive(Debug)]
enum TextSource {
    /// Byte spans into the original jsonl/tsv file; the span covers the whole line.
    File {
        path: PathBuf,
        file: File,
        format: CorpusFormat,
    },
    /// Byte spans into an append log holding raw passage text (see [`DocLog`]).
    Log { path: PathBuf, file: File },
    /// Everything in memory; spans index into the vector.
    Memory(Vec<String>),
}

/// Byte span of one document's record.
#[derive(Debug, Clone, Copy)]
struct Span {
    offset: u64,
    len: u32,
}

/// Keyed, read-only access to a loaded corpus.
///
/// Holds doc ids and byte offsets in memory; text is fetched from disk on
/// demand via positioned reads, so concurrent readers need no locking.
#[derive(Debug)]
pub struct Corpus {
    ids: Vec<String>,
    index: HashMap<String, (u32, Span)>,
    source: TextSource,
}

#[derive(Deserialize)]
struct JsonlRecord {
    id: String,
    contents: String,
}

impl Corpus {
    /// Scan a jsonl/tsv corpus file, validating records and building the
    /// id → offset index. Text is not retained in memory.
    pub fn load(path: &Path, format: CorpusFormat) -> Result<Self, CorpusError> {
        let io_err = |source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = File::open(path).map_err(io_err)?;
        let mut reader = BufReader::new(file);

        let mut ids = Vec::new();
        let mut index = HashMap::new();
        let mut offset = 0u64;
        let mut line_no = 0usize;
        let mut buf = String::new();
        loop {
            buf.clear();
            let n = reader.read_line(&mut buf).map_err(io_err)?;
            if n == 0 {
                break;
            }
            line_no += 1;
            let line = buf.trim_end_matches(['\n', '\r']);
            if line.is_empty() {
                offset += n as u64;
                continue;
            }
            let (id, text) = parse_record(line, format).map_err(|msg| CorpusError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                msg,
            })?;
            if id.is_empty() {
                return Err(CorpusError::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    msg: "empty doc_id".into(),
                });
            }
            if text.trim().is_empty() {
                return Err(CorpusError::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    msg: format!("doc {id:?} has empty text"),
                });
            }
            let span = Span {
                offset,
                len: line.len() as u32,
            };
            if index.insert(id.clone(), (ids.len() as u32, span)).is_some() {
                return Err(CorpusError::DuplicateId {
                    path: path.to_path_buf(),
                    line: line_no,
                    id,
                });
            }
            ids.push(id);
            offset += n as u64;
        }
        if ids.is_empty() {
            return Err(CorpusError::Empty {
                path: path.to_path_buf(),
            });
        }
        Ok(Self {
            ids,
            index,
            source: TextSource::File {
                path: path.to_path_buf(),
                file: File::open(path).map_err(io_err)?,
                format,
            },
        })
    }

    /// Build an in-memory corpus. Ids must be unique and non-empty; text is
    /// taken as given (degenerate texts are allowed here so downstream edge
    /// cases stay testable).
    pub fn from_documents(docs: Vec<Document>) -> Result<Self, CorpusError> {
        let mut ids = Vec::with_capacity(docs.len());
        let mut texts = Vec::with_capacity(docs.len());
        let mut index = HashMap::new();
        for (i, doc) in docs.into_iter().enumerate() {
            if doc.doc_id.is_empty() {
                return Err(CorpusError::Parse {
                    path: PathBuf::from("<memory>"),
                    line: i + 1,
                    msg: "empty doc_id".into(),
                });
            }
            let span = Span {
                offset: i as u64,
                len: 0,
            };
            if index.insert(doc.doc_id.clone(), (i as u32, span)).is_some() {
                return Err(CorpusError::DuplicateId {
                    path: PathBuf::from("<memory>"),
                    line: i + 1,
                    id: doc.doc_id,
                });
            }
            ids.push(doc.doc_id);
            texts.push(doc.text);
        }
        Ok(Self {
            ids,
            index,
            source: TextSource::Memory(texts),
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Doc ids in corpus order (the order internal ids were assigned).
    pub fn doc_ids(&self) -> &[String] {
        &self.ids
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.index.contains_key(doc_id)
    }

    /// Dense 0-based id assigned in load order.
    pub fn internal_id(&self, doc_id: &str) -> Option<u32> {
        self.index.get(doc_id).map(|(i, _)| *i)
    }

    /// Fetch a document's text from the backing store.
    pub fn text(&self, doc_id: &str) -> Result<String, CorpusError> {
        let (_, span) = self
            .index
            .get(doc_id)
            .ok_or_else(|| CorpusError::UnknownDoc(doc_id.to_string()))?;
        self.read_span(*span)
    }

    /// Text of the document with the given internal id.
    pub fn text_at(&self, internal: u32) -> Result<String, CorpusError> {
        let id = self
            .ids
            .get(internal as usize)
            .ok_or_else(|| CorpusError::UnknownDoc(format!("#{internal}")))?;
        self.text(id)
    }

    fn read_span(&self, span: Span) -> Result<String, CorpusError> {
        match &self.source {
            TextSource::Memory(texts) => Ok(texts[span.offset as usize].clone()),
            TextSource::File { path, file, format } => {
                let mut buf = vec![0u8; span.len as usize];
                file.read_exact_at(&mut buf, span.offset)
                    .map_err(|source| CorpusError::Io {
                        path: path.clone(),
                        source,
                    })?;
                let line = String::from_utf8_lossy(&buf);
                let (_, text) = parse_record(&line, *format).map_err(|msg| CorpusError::Parse {
                    path: path.clone(),
                    line: 0,
                    msg,
                })?;
                Ok(text)
            }
            TextSource::Log { path, file } => {
                let mut buf = vec![0u8; span.len as usize];
                file.read_exact_at(&mut buf, span.offset)
                    .map_err(|source| CorpusError::Io {
                        path: path.clone(),
                        source,
                    })?;
                Ok(String::from_utf8_lossy(&buf).into_owned())
            }
        }
    }

    /// Stream `(doc_id, text)` pairs in corpus order.
    pub fn iter(&self) -> impl Iterator<Item = Result<Document, CorpusError>> + '_ {
        self.ids.iter().map(move |id| {
            Ok(Document {
                doc_id: id.clone(),
                text: self.text(id)?,
            })
        })
    }

    /// Check that every doc_id referenced by the given runs resolves in this
    /// corpus; misses are collected into one summary instead of failing per
    /// lookup.
    pub fn check_run_coverage<'a, I>(&self, runs: I) -> MissingDocsSummary
    where
        I: IntoIterator<Item = &'a RankedList>,
    {
        let mut summary = MissingDocsSummary::default();
        for run in runs {
            for item in &run.items {
                summary.total_refs += 1;
                if !self.contains(&item.doc_id) {
                    *summary.missing.entry(item.doc_id.clone()).or_insert(0) += 1;
                }
            }
        }
        summary
    }
}

/// Aggregated report of run doc_ids absent from a corpus.
#[derive(Debug, Default, Clone)]
pub struct MissingDocsSummary {
    pub total_refs: usize,
    /// Missing doc_id → number of run rows referencing it.
    pub missing: BTreeMap<String, usize>,
}

impl MissingDocsSummary {
    pub fn all_present(&self) -> bool {
        self.missing.is_empty()
    }
}

fn parse_record(line: &str, format: CorpusFormat) -> Result<(String, String), String> {
    match format {
        CorpusFormat::Jsonl => {
            let rec: JsonlRecord =
                serde_json::from_str(line).map_err(|e| format!("bad json record: {e}"))?;
            Ok((rec.id, rec.contents))
        }
        CorpusFormat::Tsv => {
            let (id, text) = line
                .split_once('\t')
                .ok_or_else(|| "expected two tab-separated columns".to_string())?;
            Ok((id.to_string(), text.to_string()))
        }
    }
}

/// Append log of passage text plus a sidecar offset table, written inside a
/// persisted index directory so reranking can fetch passages without the
/// original corpus file.
///
/// `docs.dat` holds the concatenated passage bytes; `docs.idx` is a text file
/// with one `doc_id\toffset\tlen` row per document in corpus order.
pub struct DocLog;

impl DocLog {
    pub const DATA_FILE: &'static str = "docs.dat";
    pub const INDEX_FILE: &'static str = "docs.idx";

    /// Write the corpus into `dir` as an append log.
    pub fn write(dir: &Path, corpus: &Corpus) -> Result<(), CorpusError> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CorpusError::Io { path, source }
        };
        let data_path = dir.join(Self::DATA_FILE);
        let idx_path = dir.join(Self::INDEX_FILE);
        let mut data =
            std::io::BufWriter::new(File::create(&data_path).map_err(io_err(&data_path))?);
        let mut idx = std::io::BufWriter::new(File::create(&idx_path).map_err(io_err(&idx_path))?);
        let mut offset = 0u64;
        for doc in corpus.iter() {
            let doc = doc?;
            let bytes = doc.text.as_bytes();
            data.write_all(bytes).map_err(io_err(&data_path))?;
            writeln!(idx, "{}\t{}\t{}", doc.doc_id, offset, bytes.len())
                .map_err(io_err(&idx_path))?;
            offset += bytes.len() as u64;
        }
        data.flush().map_err(io_err(&data_path))?;
        idx.flush().map_err(io_err(&idx_path))?;
        Ok(())
    }

    /// Open a previously written log as a corpus handle.
    pub fn open(dir: &Path) -> Result<Corpus, CorpusError> {
        let data_path = dir.join(Self::DATA_FILE);
        let idx_path = dir.join(Self::INDEX_FILE);
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CorpusError::Io { path, source }
        };
        let idx = BufReader::new(File::open(&idx_path).map_err(io_err(&idx_path))?);
        let mut ids = Vec::new();
        let mut index = HashMap::new();
        for (line_no, line) in idx.lines().enumerate() {
            let line = line.map_err(io_err(&idx_path))?;
            if line.is_empty() {
                continue;
            }
            let bad_row = |msg: String| CorpusError::Parse {
                path: idx_path.clone(),
                line: line_no + 1,
                msg,
            };
            let mut parts = line.split('\t');
            let (Some(id), Some(offset), Some(len)) = (parts.next(), parts.next(), parts.next())
            else {
                return Err(bad_row("expected doc_id\\toffset\\tlen".into()));
            };
            let id = id.to_string();
            let offset: u64 = offset
                .parse()
                .map_err(|e| bad_row(format!("bad offset: {e}")))?;
            let len: u32 = len.parse().map_err(|e| bad_row(format!("bad len: {e}")))?;
            if index
                .insert(id.clone(), (ids.len() as u32, Span { offset, len }))
                .is_some()
            {
                return Err(CorpusError::DuplicateId {
                    path: idx_path.clone(),
                    line: line_no + 1,
                    id,
                });
            }
            ids.push(id);
        }
        if ids.is_empty() {
            return Err(CorpusError::Empty { path: idx_path });
        }
        Ok(Corpus {
            ids,
            index,
            source: TextSource::Log {
                path: data_path.clone(),
                file: File::open(&data_path).map_err(io_err(&data_path))?,
            },
        })
    }
}

/// Load queries from a two-column tsv (`qid\ttext`).
pub fn load_queries(path: &Path) -> Result<Vec<Query>, CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut queries = Vec::new();
    let mut seen = HashMap::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let (qid, text) = line.split_once('\t').ok_or_else(|| CorpusError::Parse {
            path: path.to_path_buf(),
            line: line_no + 1,
            msg: "expected two tab-separated columns".into(),
        })?;
        if seen.insert(qid.to_string(), ()).is_some() {
            return Err(CorpusError::DuplicateId {
                path: path.to_path_buf(),
                line: line_no + 1,
                id: qid.to_string(),
            });
        }
        queries.push(Query {
            qid: qid.to_string(),
            text: text.to_string(),
        });
    }
    if queries.is_empty() {
        return Err(CorpusError::Empty {
            path: path.to_path_buf(),
        });
    }
    Ok(queries)
}
