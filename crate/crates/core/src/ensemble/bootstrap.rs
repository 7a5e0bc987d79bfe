use std::io::Write;
use std::path::Path;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ensemble_predict, EnsembleComposition, Family, PredictionPool};
use crate::error::{check_len, Error, Result};
use crate::metrics::{cv_average, rmse};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapRow {
    pub size: usize,
    pub composition: EnsembleComposition,
    /// Mean over resamples of the fold-averaged RMSE.
    pub mean_rmse: f64,
    /// Population standard deviation over resamples.
    pub std_rmse: f64,
    pub n_resamples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub rows: Vec<BootstrapRow>,
}

/// Fold-averaged RMSE of one random ensemble.
fn resample_rmse(
    pool: &PredictionPool,
    labels: &[Vec<f64>],
    draws: (usize, usize),
    floor: f64,
    rng: &mut rng::Rng,
) -> Result<f64> {
    let mut per_fold = Vec::with_capacity(labels.len());
    let mut scores = Vec::with_capacity(draws.0 + draws.1);
    for (f, y) in labels.iter().enumerate() {
        let mut chosen: Vec<&[f64]> = Vec::with_capacity(draws.0 + draws.1);
        for (family, k) in [(Family::A, draws.0), (Family::B, draws.1)] {
            let members = pool.family(f, family);
            for _ in 0..k {
                chosen.push(members[rng.random_range(0..members.len())]);
            }
        }
        let mut pred = Vec::with_capacity(y.len());
        for i in 0..y.len() {
            scores.clear();
            scores.extend(chosen.iter().map(|m| m[i]));
            pred.push(ensemble_predict(&scores, floor)?);
        }
        per_fold.push(rmse(y, &pred)?);
    }
    cv_average(&per_fold)
}

/// Resamples ensembles with replacement for every `(size, composition)`.
///
/// Each row draws from its own derived seed, so adding sizes or
/// compositions leaves the other rows unchanged. Resamples run in parallel
/// on the current rayon pool; the result does not depend on thread count.
pub fn bootstrap_study(
    pool: &PredictionPool,
    labels: &[Vec<f64>],
    sizes: &[usize],
    compositions: &[EnsembleComposition],
    n_resamples: usize,
    seed: u64,
    floor: f64,
) -> Result<BootstrapReport> {
    if n_resamples == 0 {
        return Err(Error::invalid("n_resamples must be positive"));
    }
    check_len(pool.folds().len(), labels.len())?;
    for (f, (fold, y)) in pool.folds().iter().zip(labels).enumerate() {
        check_len(fold.sentence_ids.len(), y.len())?;
        if y.is_empty() {
            return Err(Error::invalid(format!("fold {f} has no sentences")));
        }
    }
    let mut rows = Vec::new();
    for &composition in compositions {
        for &size in sizes {
            let draws = composition.draws(size)?;
            for f in 0..labels.len() {
                for (family, k) in [(Family::A, draws.0), (Family::B, draws.1)] {
                    if k > 0 && pool.family(f, family).is_empty() {
                        return Err(Error::invalid(format!(
                            "fold {f} has no family-{family:?} members for composition {composition}"
                        )));
                    }
                }
            }
            let row_seed = rng::derive_seed(seed, &format!("bootstrap/{composition}/{size}"));
            let values = (0..n_resamples)
                .into_par_iter()
                .map(|r| {
                    let mut g = rng::stream(row_seed, &format!("resample/{r}"));
                    resample_rmse(pool, labels, draws, floor, &mut g)
                })
                .collect::<Result<Vec<f64>>>()?;
            let n = n_resamples as f64;
            let rough = values.iter().sum::<f64>() / n;
            // One correction pass makes the mean exact for constant samples.
            let mean = rough + values.iter().map(|v| v - rough).sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            rows.push(BootstrapRow {
                size,
                composition,
                mean_rmse: mean,
                std_rmse: var.sqrt(),
                n_resamples,
            });
        }
    }
    Ok(BootstrapReport { rows })
}

impl BootstrapReport {
    pub fn row(&self, size: usize, composition: EnsembleComposition) -> Option<&BootstrapRow> {
        self.rows.iter().find(|r| r.size == size && r.composition == composition)
    }

    /// CSV with header `size,composition,mean_rmse,std_rmse,n_resamples`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["size", "composition", "mean_rmse", "std_rmse", "n_resamples"])?;
        for r in &self.rows {
            w.write_record([
                r.size.to_string(),
                r.composition.to_string(),
                r.mean_rmse.to_string(),
                r.std_rmse.to_string(),
                r.n_resamples.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Whitespace-separated table, one line per size with mean and std
    /// columns per composition; `NaN` marks missing cells.
    pub fn write_curves(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut comps: Vec<EnsembleComposition> = Vec::new();
        let mut sizes: Vec<usize> = Vec::new();
        for r in &self.rows {
            if !comps.contains(&r.composition) {
                comps.push(r.composition);
            }
            if !sizes.contains(&r.size) {
                sizes.push(r.size);
            }
        }
        sizes.sort_unstable();
        let mut out = String::from("# size");
        for c in &comps {
            out.push_str(&format!(" {c}_mean {c}_std"));
        }
        out.push('\n');
        for s in sizes {
            out.push_str(&s.to_string());
            for &c in &comps {
                match self.row(s, c) {
                    Some(r) => out.push_str(&format!(" {} {}", r.mean_rmse, r.std_rmse)),
                    None => out.push_str(" NaN NaN"),
                }
            }
            out.push('\n');
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}
