//! Labeled sentence corpus: CSV ingestion with quote cleanup, deterministic
//! cross-validation / early-stopping splits, and the word-level vocabulary
//! used by the desk-scale encoders.

mod split;
mod vocab;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use split::{carve_early_stop, carve_final_split, make_cv_splits, FoldSplit};
pub use vocab::{build_vocab, SpecialToken, TokenSequence, Vocabulary, DEFAULT_MAX_LEN};

pub const MOS_MIN: f64 = 1.0;
pub const MOS_MAX: f64 = 7.0;

/// A sentence with its complexity Mean Opinion Score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatedSentence {
    pub id: String,
    pub text: String,
    pub mos: f64,
}

/// A sentence without a label, as fed to prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub id: String,
    pub text: String,
}

impl RatedSentence {
    pub fn new(id: impl Into<String>, text: impl Into<String>, mos: f64) -> Result<Self> {
        let s = RatedSentence {
            id: id.into(),
            text: text.into(),
            mos,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.text.trim().is_empty() {
            return Err(Error::EmptyText { id: self.id.clone() });
        }
        if !(MOS_MIN..=MOS_MAX).contains(&self.mos) {
            return Err(Error::MosOutOfRange {
                id: self.id.clone(),
                mos: self.mos,
            });
        }
        Ok(())
    }

    pub fn as_sentence(&self) -> Sentence {
        Sentence {
            id: self.id.clone(),
            text: self.text.clone(),
        }
    }
}

fn wrapped_in_quotes(text: &str) -> bool {
    text.len() >= 2 && text.starts_with('"') && text.ends_with('"')
}

/// Removes one leading and one trailing double quote when both are present.
pub fn strip_quotes(text: &str) -> &str {
    if wrapped_in_quotes(text) {
        &text[1..text.len() - 1]
    } else {
        text
    }
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(file))
}

fn row_error(path: &Path, row: usize, message: impl Into<String>) -> Error {
    Error::MalformedRow {
        path: path.to_path_buf(),
        row,
        message: message.into(),
    }
}

fn csv_row_error(path: &Path, err: csv::Error) -> Error {
    let row = err.position().map(|p| p.line() as usize).unwrap_or(0);
    row_error(path, row, err.to_string())
}

/// Reads a corpus CSV with the exact header `id,sentence,mos`.
///
/// Rows are returned in file order. Row numbers in errors are 1-based file
/// lines (the header is line 1).
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<RatedSentence>> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| csv_row_error(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != ["id", "sentence", "mos"] {
        return Err(row_error(path, 1, "header must be exactly `id,sentence,mos`"));
    }
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_row_error(path, e))?;
        let row = rec.position().map(|p| p.line() as usize).unwrap_or(i + 2);
        let id = rec[0].to_string();
        let mos: f64 = rec[2]
            .trim()
            .parse()
            .map_err(|_| row_error(path, row, format!("cannot parse MOS `{}`", &rec[2])))?;
        let sentence = RatedSentence {
            id: id.clone(),
            text: strip_quotes(&rec[1]).to_string(),
            mos,
        };
        sentence.validate()?;
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        out.push(sentence);
    }
    Ok(out)
}

/// Reads sentences for prediction. The header must start with `id,sentence`;
/// any further columns (such as `mos`) are ignored.
pub fn load_sentences(path: impl AsRef<Path>) -> Result<Vec<Sentence>> {
    let path = path.as_ref();
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| csv_row_error(path, e))?.clone();
    if header.len() < 2 || &header[0] != "id" || &header[1] != "sentence" {
        return Err(row_error(path, 1, "header must start with `id,sentence`"));
    }
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_row_error(path, e))?;
        let id = rec[0].to_string();
        let text = strip_quotes(&rec[1]).to_string();
        if text.trim().is_empty() {
            return Err(Error::EmptyText { id });
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        out.push(Sentence { id, text });
    }
    Ok(out)
}

/// Writes a corpus in the format read by [`load_corpus`]. Text that would
/// otherwise lose a quote pair on reload is wrapped in one extra pair.
pub fn write_corpus(path: impl AsRef<Path>, corpus: &[RatedSentence]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["id", "sentence", "mos"])?;
    for s in corpus {
        let text = if wrapped_in_quotes(&s.text) {
            format!("\"{}\"", s.text)
        } else {
            s.text.clone()
        };
        w.write_record([s.id.as_str(), text.as_str(), s.mos.to_string().as_str()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
