//! Query-embedding tables for discriminative query selection.
//!
//! File layout: a single ASCII header line `dim <d> count <n>\n` followed by
//! `n * d` little-endian float32 values, row per query. Query ids live in a
//! sidecar file at `<path>.qids`, one id per line, in row order.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error("vector for {qid:?} has length {got}, table dim is {dim}")]
    DimMismatch { qid: String, got: usize, dim: usize },
    #[error("vector for {qid:?} contains a non-finite value")]
    NonFinite { qid: String },
    #[error("duplicate qid {0:?}")]
    DuplicateQid(String),
    #[error("no embedding for qid {0:?}")]
    MissingQid(String),
}

/// Dense per-query vectors, all of one dimension, keyed by qid.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    qids: Vec<String>,
    index: HashMap<String, usize>,
    /// Row-major storage, `qids.len() * dim` values.
    data: Vec<f32>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            qids: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.qids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qids.is_empty()
    }

    pub fn qids(&self) -> &[String] {
        &self.qids
    }

    pub fn contains(&self, qid: &str) -> bool {
        self.index.contains_key(qid)
    }

    pub fn vector(&self, qid: &str) -> Option<&[f32]> {
        self.index
            .get(qid)
            .map(|&row| &self.data[row * self.dim..(row + 1) * self.dim])
    }

    pub fn insert(&mut self, qid: &str, vector: &[f32]) -> Result<(), EmbeddingError> {
        if vector.len() != self.dim {
            return Err(EmbeddingError::DimMismatch {
                qid: qid.to_string(),
                got: vector.len(),
                dim: self.dim,
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite {
                qid: qid.to_string(),
            });
        }
        if self.index.contains_key(qid) {
            return Err(EmbeddingError::DuplicateQid(qid.to_string()));
        }
        self.index.insert(qid.to_string(), self.qids.len());
        self.qids.push(qid.to_string());
        self.data.extend_from_slice(vector);
        Ok(())
    }

    /// Dot product of two stored vectors.
    pub fn inner_product(&self, a: &str, b: &str) -> Result<f64, EmbeddingError> {
        let va = self
            .vector(a)
            .ok_or_else(|| EmbeddingError::MissingQid(a.to_string()))?;
        let vb = self
            .vector(b)
            .ok_or_else(|| EmbeddingError::MissingQid(b.to_string()))?;
        Ok(va.iter().zip(vb).map(|(x, y)| *x as f64 * *y as f64).sum())
    }

    fn sidecar(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_os_string();
        s.push(".qids");
        PathBuf::from(s)
    }

    /// Write the table to `path` plus the `<path>.qids` sidecar.
    pub fn save(&self, path: &Path) -> Result<(), EmbeddingError> {
        let io_err = |p: &Path| {
            let p = p.to_path_buf();
            move |source| EmbeddingError::Io { path: p, source }
        };
        let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
        writeln!(out, "dim {} count {}", self.dim, self.qids.len()).map_err(io_err(path))?;
        for v in &self.data {
            out.write_all(&v.to_le_bytes()).map_err(io_err(path))?;
        }
        out.flush().map_err(io_err(path))?;
        let qids_path = Self::sidecar(path);
        let mut out = BufWriter::new(File::create(&qids_path).map_err(io_err(&qids_path))?);
        for qid in &self.qids {
            writeln!(out, "{qid}").map_err(io_err(&qids_path))?;
        }
        out.flush().map_err(io_err(&qids_path))
    }

    /// Load a table written by [`EmbeddingTable::save`].
    pub fn load(path: &Path) -> Result<Self, EmbeddingError> {
        let io_err = |p: &Path| {
            let p = p.to_path_buf();
            move |source| EmbeddingError::Io { path: p, source }
        };
        let fmt_err = |msg: String| EmbeddingError::Format {
            path: path.to_path_buf(),
            msg,
        };
        let mut reader = BufReader::new(File::open(path).map_err(io_err(path))?);
        let mut header = String::new();
        reader.read_line(&mut header).map_err(io_err(path))?;
        let fields: Vec<&str> = header.split_ascii_whitespace().collect();
        let (dim, count) = match fields.as_slice() {
            ["dim", d, "count", c] => {
                let dim: usize = d.parse().map_err(|e| fmt_err(format!("bad dim: {e}")))?;
                let count: usize = c.parse().map_err(|e| fmt_err(format!("bad count: {e}")))?;
                (dim, count)
            }
            _ => return Err(fmt_err(format!("bad header {header:?}"))),
        };
        if dim == 0 {
            return Err(fmt_err("dim must be positive".into()));
        }
        let mut raw = vec![0u8; dim * count * 4];
        reader.read_exact(&mut raw).map_err(io_err(path))?;
        let mut trailing = [0u8; 1];
        if reader.read(&mut trailing).map_err(io_err(path))? != 0 {
            return Err(fmt_err("trailing bytes after vector data".into()));
        }
        let data: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();

        let qids_path = Self::sidecar(path);
        let qreader = BufReader::new(File::open(&qids_path).map_err(io_err(&qids_path))?);
        let mut table = Self::new(dim);
        table.data.reserve(dim * count);
        for line in qreader.lines() {
            let qid = line.map_err(io_err(&qids_path))?;
            if qid.is_empty() {
                continue;
            }
            if table.index.contains_key(&qid) {
                return Err(EmbeddingError::DuplicateQid(qid));
            }
            table.index.insert(qid.clone(), table.qids.len());
            table.qids.push(qid);
        }
        if table.qids.len() != count {
            return Err(fmt_err(format!(
                "header count {} but sidecar has {} qids",
                count,
                table.qids.len()
            )));
        }
        for (row, qid) in table.qids.iter().enumerate() {
            let v = &data[row * dim..(row + 1) * dim];
            if v.iter().any(|x| !x.is_finite()) {
                return Err(EmbeddingError::NonFinite { qid: qid.clone() });
            }
        }
        table.data = data;
        Ok(table)
    }
}
