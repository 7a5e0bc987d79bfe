use serde::{Deserialize, Serialize};

use super::FeatureVector;
use crate::error::{check_len, Error, Result};

/// Columns whose standard deviation falls below this map to zero.
const MIN_STD: f64 = 1e-12;

/// Per-feature standardization fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub std: Vec<f64>,
    pub catalog_version: String,
}

impl FeatureScaler {
    pub fn fit(vectors: &[FeatureVector]) -> Result<Self> {
        let first = vectors
            .first()
            .ok_or_else(|| Error::invalid("cannot fit a scaler on zero vectors"))?;
        let dim = first.len();
        for v in vectors {
            check_len(dim, v.len())?;
            if v.catalog_version != first.catalog_version {
                return Err(Error::invalid("feature vectors come from different catalogs"));
            }
        }
        let n = vectors.len() as f64;
        let mut mean = vec![0.0; dim];
        for v in vectors {
            for (m, x) in mean.iter_mut().zip(&v.values) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for v in vectors {
            for ((s, x), m) in var.iter_mut().zip(&v.values).zip(&mean) {
                *s += (x - m) * (x - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Ok(FeatureScaler {
            mean,
            std,
            catalog_version: first.catalog_version.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `(x - mean) / std` per feature; near-constant features become 0.
    pub fn apply(&self, v: &FeatureVector) -> Result<FeatureVector> {
        if v.catalog_version != self.catalog_version {
            return Err(Error::invalid(format!(
                "scaler fitted on catalog {} applied to {}",
                self.catalog_version, v.catalog_version
            )));
        }
        Ok(FeatureVector {
            values: self.apply_values(&v.values)?,
            catalog_version: v.catalog_version.clone(),
        })
    }

    pub fn apply_values(&self, values: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), values.len())?;
        Ok(values
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| if *s < MIN_STD { 0.0 } else { (x - m) / s })
            .collect())
    }
}
