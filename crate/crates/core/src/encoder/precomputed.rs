use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::Deserialize;

use super::{Embedding, EmbeddingSource};
use crate::error::{Error, Result};

#[derive(Deserialize)]
struct Row {
    id: String,
    dim: usize,
    values: Vec<f64>,
}

/// Embeddings exported by an external model, keyed by sentence id.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecomputedEmbeddings {
    dim: usize,
    ids: Vec<String>,
    by_id: HashMap<String, Vec<f64>>,
}

impl PrecomputedEmbeddings {
    pub fn new(rows: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let mut out = PrecomputedEmbeddings {
            dim: rows.first().map(|r| r.1.len()).unwrap_or(0),
            ids: Vec::with_capacity(rows.len()),
            by_id: HashMap::with_capacity(rows.len()),
        };
        for (id, values) in rows {
            out.insert(id, values)?;
        }
        Ok(out)
    }

    fn insert(&mut self, id: String, values: Vec<f64>) -> Result<()> {
        if values.len() != self.dim {
            return Err(Error::invalid(format!(
                "embedding for {id} has dimension {}, expected {}",
                values.len(),
                self.dim
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("embedding for {id}")));
        }
        if self.by_id.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        self.ids.push(id.clone());
        self.by_id.insert(id, values);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Ids in file order.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, id: &str) -> Result<Embedding> {
        self.by_id
            .get(id)
            .map(|v| Embedding {
                values: v.clone(),
                source: EmbeddingSource::Precomputed,
            })
            .ok_or_else(|| Error::MissingEmbedding(id.to_string()))
    }
}

/// Reads the JSONL format `{"id": ..., "dim": ..., "values": [...]}`, one
/// object per line. All rows must share one dimension and ids must be unique.
pub fn load_precomputed(path: impl AsRef<Path>) -> Result<PrecomputedEmbeddings> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out: Option<PrecomputedEmbeddings> = None;
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::MalformedLine {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let row: Row = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        if row.dim != row.values.len() {
            return Err(bad(format!(
                "declared dim {} but {} values",
                row.dim,
                row.values.len()
            )));
        }
        let emb = out.get_or_insert_with(|| PrecomputedEmbeddings {
            dim: row.dim,
            ids: Vec::new(),
            by_id: HashMap::new(),
        });
        emb.insert(row.id, row.values).map_err(|e| match e {
            Error::DuplicateId(_) => e,
            other => bad(other.to_string()),
        })?;
    }
    Ok(out.unwrap_or(PrecomputedEmbeddings {
        dim: 0,
        ids: Vec::new(),
        by_id: HashMap::new(),
    }))
}

/// Writes embeddings in the format read by [`load_precomputed`], values with
/// 17 significant digits so they reload bit-exactly.
pub fn store_precomputed(path: impl AsRef<Path>, embeddings: &PrecomputedEmbeddings) -> Result<()> {
    let path = path.as_ref();
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    let mut line = String::new();
    for id in &embeddings.ids {
        line.clear();
        let values = &embeddings.by_id[id];
        write!(
            line,
            "{{\"id\":{},\"dim\":{},\"values\":[",
            serde_json::to_string(id)?,
            values.len()
        )
        .expect("writing to a String cannot fail");
        for (j, v) in values.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            write!(line, "{v:.16e}").expect("writing to a String cannot fail");
        }
        line.push_str("]}\n");
        w.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
