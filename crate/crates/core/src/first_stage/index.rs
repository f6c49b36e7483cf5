//! Inverted index: term → postings, plus the per-document statistics BM25
//! needs. Immutable once built; persisted as a small versioned directory
//! (see `docs/FORMATS.md` at the repo root).

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus_store::{Corpus, CorpusError};

use super::analyzer;

/// Bump when the on-disk layout changes; loaders reject other versions.
pub const INDEX_FORMAT_VERSION: u32 = 1;

const META_FILE: &str = "meta.json";
const DOCIDS_FILE: &str = "docids.txt";
const DOCLENS_FILE: &str = "doclens.bin";
const POSTINGS_FILE: &str = "postings.bin";

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus error: {0}")]
    Corpus(#[from] CorpusError),
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error("index format version {found} unsupported (expected {INDEX_FORMAT_VERSION})")]
    Version { found: u32 },
}

/// One posting: internal doc id and term frequency.
pub type Posting = (u32, u32);

#[derive(Debug)]
pub struct InvertedIndex {
    /// term → postings sorted by internal doc id.
    postings: HashMap<String, Vec<Posting>>,
    /// Token count per document, indexed by internal id.
    doc_lengths: Vec<u32>,
    /// internal id → external doc_id.
    doc_ids: Vec<String>,
    avg_doc_length: f64,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    format_version: u32,
    doc_count: usize,
    term_count: usize,
    avg_doc_length: f64,
    analyzer: String,
}

impl InvertedIndex {
    /// Analyze every document and accumulate postings. Documents appear in
    /// corpus order; their positions become internal ids.
    pub fn build(corpus: &Corpus) -> Result<Self, IndexError> {
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_lengths = Vec::with_capacity(corpus.len());
        let mut doc_ids = Vec::with_capacity(corpus.len());
        for doc in corpus.iter() {
            let doc = doc?;
            let internal = doc_ids.len() as u32;
            let tokens = analyzer::analyze(&doc.text);
            doc_lengths.push(tokens.len() as u32);
            let mut counts: BTreeMap<String, u32> = BTreeMap::new();
            for t in tokens {
                *counts.entry(t).or_insert(0) += 1;
            }
            for (term, tf) in counts {
                postings.entry(term).or_default().push((internal, tf));
            }
            doc_ids.push(doc.doc_id);
        }
        let avg_doc_length = if doc_lengths.is_empty() {
            0.0
        } else {
            doc_lengths.iter().map(|&l| l as f64).sum::<f64>() / doc_lengths.len() as f64
        };
        Ok(Self {
            postings: postings.into_iter().collect(),
            doc_lengths,
            doc_ids,
            avg_doc_length,
        })
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn term_count(&self) -> usize {
        self.postings.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_length(&self, internal: u32) -> u32 {
        self.doc_lengths[internal as usize]
    }

    pub fn doc_id(&self, internal: u32) -> &str {
        &self.doc_ids[internal as usize]
    }

    pub fn postings(&self, term: &str) -> Option<&[Posting]> {
        self.postings.get(term).map(Vec::as_slice)
    }

    /// Document frequency of a term.
    pub fn df(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    /// Persist to a directory (created if absent).
    pub fn save(&self, dir: &Path) -> Result<(), IndexError> {
        std::fs::create_dir_all(dir).map_err(|source| IndexError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let io_err = |p: &Path| {
            let p = p.to_path_buf();
            move |source| IndexError::Io { path: p, source }
        };

        let meta = Meta {
            format_version: INDEX_FORMAT_VERSION,
            doc_count: self.doc_count(),
            term_count: self.term_count(),
            avg_doc_length: self.avg_doc_length,
            analyzer: "lowercase-asciifold-porter".into(),
        };
        let meta_path = dir.join(META_FILE);
        let meta_json = serde_json::to_string_pretty(&meta).expect("meta serializes");
        std::fs::write(&meta_path, meta_json).map_err(io_err(&meta_path))?;

        let ids_path = dir.join(DOCIDS_FILE);
        let mut out = BufWriter::new(File::create(&ids_path).map_err(io_err(&ids_path))?);
        for id in &self.doc_ids {
            writeln!(out, "{id}").map_err(io_err(&ids_path))?;
        }
        out.flush().map_err(io_err(&ids_path))?;

        let lens_path = dir.join(DOCLENS_FILE);
        let mut out = BufWriter::new(File::create(&lens_path).map_err(io_err(&lens_path))?);
        for &len in &self.doc_lengths {
            out.write_all(&len.to_le_bytes())
                .map_err(io_err(&lens_path))?;
        }
        out.flush().map_err(io_err(&lens_path))?;

        // Terms sorted so the file is deterministic for identical inputs.
        let post_path = dir.join(POSTINGS_FILE);
        let mut out = BufWriter::new(File::create(&post_path).map_err(io_err(&post_path))?);
        let mut terms: Vec<&String> = self.postings.keys().collect();
        terms.sort_unstable();
        for term in terms {
            let list = &self.postings[term];
            out.write_all(&(term.len() as u32).to_le_bytes())
                .map_err(io_err(&post_path))?;
            out.write_all(term.as_bytes()).map_err(io_err(&post_path))?;
            out.write_all(&(list.len() as u32).to_le_bytes())
                .map_err(io_err(&post_path))?;
            for &(doc, tf) in list {
                out.write_all(&doc.to_le_bytes())
                    .map_err(io_err(&post_path))?;
                out.write_all(&tf.to_le_bytes())
                    .map_err(io_err(&post_path))?;
            }
        }
        out.flush().map_err(io_err(&post_path))
    }

    /// Load an index persisted with [`InvertedIndex::save`].
    pub fn load(dir: &Path) -> Result<Self, IndexError> {
        let io_err = |p: &Path| {
            let p = p.to_path_buf();
            move |source| IndexError::Io { path: p, source }
        };
        let meta_path = dir.join(META_FILE);
        let meta: Meta =
            serde_json::from_str(&std::fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?)
                .map_err(|e| IndexError::Format {
                    path: meta_path.clone(),
                    msg: e.to_string(),
                })?;
        if meta.format_version != INDEX_FORMAT_VERSION {
            return Err(IndexError::Version {
                found: meta.format_version,
            });
        }

        let ids_path = dir.join(DOCIDS_FILE);
        let ids_text = std::fs::read_to_string(&ids_path).map_err(io_err(&ids_path))?;
        let doc_ids: Vec<String> = ids_text.lines().map(str::to_string).collect();

        let lens_path = dir.join(DOCLENS_FILE);
        let lens_bytes = std::fs::read(&lens_path).map_err(io_err(&lens_path))?;
        if lens_bytes.len() != doc_ids.len() * 4 {
            return Err(IndexError::Format {
                path: lens_path,
                msg: format!(
                    "expected {} doc lengths, file holds {} bytes",
                    doc_ids.len(),
                    lens_bytes.len()
                ),
            });
        }
        let doc_lengths: Vec<u32> = lens_bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();

        let post_path = dir.join(POSTINGS_FILE);
        let mut reader = BufReader::new(File::open(&post_path).map_err(io_err(&post_path))?);
        let mut postings = HashMap::new();
        loop {
            let mut lenbuf = [0u8; 4];
            match reader.read_exact(&mut lenbuf) {
                Ok(()) => {}
                Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
                Err(source) => {
                    return Err(IndexError::Io {
                        path: post_path,
                        source,
                    })
                }
            }
            let term_len = u32::from_le_bytes(lenbuf) as usize;
            let mut term_bytes = vec![0u8; term_len];
            reader
                .read_exact(&mut term_bytes)
                .map_err(io_err(&post_path))?;
            let term = String::from_utf8(term_bytes).map_err(|e| IndexError::Format {
                path: post_path.clone(),
                msg: format!("non-utf8 term: {e}"),
            })?;
            reader.read_exact(&mut lenbuf).map_err(io_err(&post_path))?;
            let df = u32::from_le_bytes(lenbuf) as usize;
            let mut list = Vec::with_capacity(df);
            let mut pair = [0u8; 8];
            for _ in 0..df {
                reader.read_exact(&mut pair).map_err(io_err(&post_path))?;
                let doc = u32::from_le_bytes([pair[0], pair[1], pair[2], pair[3]]);
                let tf = u32::from_le_bytes([pair[4], pair[5], pair[6], pair[7]]);
                list.push((doc, tf));
            }
            postings.insert(term, list);
        }

        if meta.doc_count != doc_ids.len() || meta.term_count != postings.len() {
            return Err(IndexError::Format {
                path: meta_path,
                msg: format!(
                    "meta says {} docs / {} terms, files hold {} / {}",
                    meta.doc_count,
                    meta.term_count,
                    doc_ids.len(),
                    postings.len()
                ),
            });
        }
        Ok(Self {
            postings,
            doc_lengths,
            doc_ids,
            avg_doc_length: meta.avg_doc_length,
        })
    }
}
