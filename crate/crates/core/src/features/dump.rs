use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{FeatureCatalog, FeatureVector};
use crate::error::{check_len, Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    catalog_version: String,
    feature_names: Vec<String>,
}

fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Feature rows read back from a dump. `names` lists every CSV column after
/// `id`, which may include externally added columns beyond the catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub catalog_version: String,
    pub catalog_names: Vec<String>,
    pub names: Vec<String>,
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureTable {
    /// Catalog features only, in catalog order.
    pub fn catalog_vectors(&self) -> Vec<FeatureVector> {
        let cols: Vec<usize> = self
            .catalog_names
            .iter()
            .map(|n| self.names.iter().position(|m| m == n).expect("checked on read"))
            .collect();
        self.rows
            .iter()
            .map(|r| FeatureVector {
                values: cols.iter().map(|&c| r[c]).collect(),
                catalog_version: self.catalog_version.clone(),
            })
            .collect()
    }
}

/// Writes `<path>` (CSV: `id` then one column per feature) and the
/// `<path>.json` sidecar describing the catalog.
pub fn write_feature_dump(
    path: impl AsRef<Path>,
    catalog: &FeatureCatalog,
    ids: &[String],
    vectors: &[FeatureVector],
) -> Result<()> {
    let path = path.as_ref();
    check_len(ids.len(), vectors.len())?;
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["id".to_string()];
    header.extend(catalog.names().into_iter().map(str::to_string));
    w.write_record(&header)?;
    for (id, v) in ids.iter().zip(vectors) {
        check_len(catalog.len(), v.len())?;
        if v.catalog_version != catalog.version() {
            return Err(Error::invalid(format!("vector for {id} has a different catalog version")));
        }
        let mut rec = vec![id.clone()];
        rec.extend(v.values.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let sidecar = Sidecar {
        catalog_version: catalog.version().to_string(),
        feature_names: catalog.names().into_iter().map(str::to_string).collect(),
    };
    let side = sidecar_path(path);
    std::fs::write(&side, serde_json::to_string_pretty(&sidecar)? + "\n")
        .map_err(|e| Error::io(side, e))
}

pub fn read_feature_dump(path: impl AsRef<Path>) -> Result<FeatureTable> {
    let path = path.as_ref();
    let side = sidecar_path(path);
    let sidecar: Sidecar = serde_json::from_str(
        &std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?,
    )?;
    let mut rdr = csv::Reader::from_path(path)?;
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("id") {
        return Err(Error::MalformedRow {
            path: path.to_path_buf(),
            row: 1,
            message: "first column must be `id`".into(),
        });
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    for n in &sidecar.feature_names {
        if !names.contains(n) {
            return Err(Error::invalid(format!("feature dump lacks catalog column `{n}`")));
        }
    }
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        ids.push(rec[0].to_string());
        let values = rec
            .iter()
            .skip(1)
            .map(|s| {
                s.parse::<f64>().map_err(|_| Error::MalformedRow {
                    path: path.to_path_buf(),
                    row,
                    message: format!("cannot parse `{s}`"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(values);
    }
    Ok(FeatureTable {
        catalog_version: sidecar.catalog_version,
        catalog_names: sidecar.feature_names,
        names,
        ids,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{extract_features, FrequencyLexicon};

    #[test]
    fn dump_round_trip_with_extra_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.csv");
        let catalog = FeatureCatalog::default();
        let lex = FrequencyLexicon::default();
        let texts = ["Der Hund bellt.", "Für die Union resultiert daraus ein Akzeptanzproblem."];
        let ids: Vec<String> = vec!["a".into(), "b".into()];
        let vecs: Vec<FeatureVector> = texts
            .iter()
            .map(|t| extract_features(t, &lex, &catalog).unwrap())
            .collect();
        write_feature_dump(&path, &catalog, &ids, &vecs).unwrap();

        let table = read_feature_dump(&path).unwrap();
        assert_eq!(table.ids, ids);
        assert_eq!(table.catalog_version, catalog.version());
        assert_eq!(table.catalog_vectors(), vecs);

        // An externally appended column survives and does not disturb the
        // catalog view.
        let csv = std::fs::read_to_string(&path).unwrap();
        let extended: String = csv
            .lines()
            .enumerate()
            .map(|(i, l)| if i == 0 { format!("{l},en_token_count\n") } else { format!("{l},{i}\n") })
            .collect();
        std::fs::write(&path, extended).unwrap();
        let table = read_feature_dump(&path).unwrap();
        assert_eq!(table.names.last().unwrap(), "en_token_count");
        assert_eq!(table.catalog_vectors(), vecs);
    }
}
