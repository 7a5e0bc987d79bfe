use std::collections::HashMap;
use std::path::Path;

use super::{ensemble_predict, Family, PoolFold, PoolMember, PredictionPool};
use crate::corpus::load_corpus;
use crate::error::{Error, Result};

/// Contents of a predictions CSV: `id,member_0,…,member_{n-1},ensemble`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTable {
    pub ids: Vec<String>,
    /// One column per member.
    pub members: Vec<Vec<f64>>,
    pub ensemble: Vec<f64>,
}

/// Writes member scores and their filtered ensemble mean.
pub fn write_predictions(path: impl AsRef<Path>, ids: &[String], members: &[Vec<f64>], floor: f64) -> Result<PredictionTable> {
    let path = path.as_ref();
    if members.is_empty() {
        return Err(Error::invalid("no member predictions to write"));
    }
    for m in members {
        crate::error::check_len(ids.len(), m.len())?;
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["id".to_string()];
    header.extend((0..members.len()).map(|i| format!("member_{i}")));
    header.push("ensemble".into());
    w.write_record(&header)?;
    let mut ensemble = Vec::with_capacity(ids.len());
    let mut row_scores = Vec::with_capacity(members.len());
    for (i, id) in ids.iter().enumerate() {
        row_scores.clear();
        row_scores.extend(members.iter().map(|m| m[i]));
        let e = ensemble_predict(&row_scores, floor)?;
        ensemble.push(e);
        let mut record = vec![id.clone()];
        record.extend(row_scores.iter().map(f64::to_string));
        record.push(e.to_string());
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(PredictionTable {
        ids: ids.to_vec(),
        members: members.to_vec(),
        ensemble,
    })
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<PredictionTable> {
    let path = path.as_ref();
    let bad = |row: usize, message: String| Error::MalformedRow {
        path: path.to_path_buf(),
        row,
        message,
    };
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header = r.headers()?.clone();
    let n = header.len();
    let expected: Vec<String> = std::iter::once("id".to_string())
        .chain((0..n.saturating_sub(2)).map(|i| format!("member_{i}")))
        .chain(std::iter::once("ensemble".to_string()))
        .collect();
    if n < 3 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(bad(1, format!("header must be `{}`", expected.join(","))));
    }
    let mut table = PredictionTable {
        ids: Vec::new(),
        members: vec![Vec::new(); n - 2],
        ensemble: Vec::new(),
    };
    for (i, record) in r.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| bad(row, e.to_string()))?;
        if record.len() != n {
            return Err(bad(row, format!("expected {n} fields, found {}", record.len())));
        }
        let num = |j: usize| -> Result<f64> {
            let v: f64 = record[j].trim().parse().map_err(|_| bad(row, format!("`{}` is not a number", &record[j])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(row, format!("non-finite score `{}`", &record[j])))
            }
        };
        table.ids.push(record[0].to_string());
        for (j, col) in table.members.iter_mut().enumerate() {
            col.push(num(j + 1)?);
        }
        table.ensemble.push(num(n - 1)?);
    }
    Ok(table)
}

/// Loads a study pool laid out as `labels.csv` (corpus format) plus
/// `fold_<k>/a.csv` and `fold_<k>/b.csv` predictions for `k = 0, 1, …`.
///
/// Either family file may be missing for a fold. Ensemble columns are
/// ignored. Returns the pool and the labels of each fold in its sentence
/// order.
pub fn load_pool_dir(dir: impl AsRef<Path>) -> Result<(PredictionPool, Vec<Vec<f64>>)> {
    let dir = dir.as_ref();
    let label_of: HashMap<String, f64> = load_corpus(dir.join("labels.csv"))?
        .into_iter()
        .map(|s| (s.id, s.mos))
        .collect();
    let mut folds = Vec::new();
    let mut labels = Vec::new();
    for k in 0.. {
        let fold_dir = dir.join(format!("fold_{k}"));
        if !fold_dir.is_dir() {
            break;
        }
        let mut ids: Option<Vec<String>> = None;
        let mut members = Vec::new();
        for (family, file) in [(Family::A, "a.csv"), (Family::B, "b.csv")] {
            let path = fold_dir.join(file);
            if !path.exists() {
                continue;
            }
            let table = read_predictions(&path)?;
            let position: HashMap<&str, usize> = table.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
            if position.len() != table.ids.len() {
                return Err(Error::invalid(format!("{} repeats a sentence id", path.display())));
            }
            let order = ids.get_or_insert_with(|| table.ids.clone());
            if order.len() != table.ids.len() || order.iter().any(|id| !position.contains_key(id.as_str())) {
                return Err(Error::invalid(format!(
                    "{} does not cover the same sentences as the other family of fold {k}",
                    path.display()
                )));
            }
            for (m, col) in table.members.iter().enumerate() {
                members.push(PoolMember {
                    member_id: format!("fold_{k}/{file}/member_{m}"),
                    family,
                    predictions: order.iter().map(|id| col[position[id.as_str()]]).collect(),
                });
            }
        }
        let ids = ids.ok_or_else(|| Error::invalid(format!("{} contains neither a.csv nor b.csv", fold_dir.display())))?;
        labels.push(
            ids.iter()
                .map(|id| {
                    label_of
                        .get(id)
                        .copied()
                        .ok_or_else(|| Error::invalid(format!("sentence {id} of fold {k} has no label")))
                })
                .collect::<Result<Vec<f64>>>()?,
        );
        folds.push(PoolFold {
            sentence_ids: ids,
            members,
        });
    }
    if folds.is_empty() {
        return Err(Error::invalid(format!("{} contains no fold_0 directory", dir.display())));
    }
    Ok((PredictionPool::new(folds)?, labels))
}
