use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::RatedSentence;
use crate::error::{Error, Result};
use crate::rng;

/// One cross-validation fold. Id lists are kept in corpus order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold: usize,
    pub train: Vec<String>,
    pub early_stop: Vec<String>,
    pub validation: Vec<String>,
    pub seed: u64,
}

impl FoldSplit {
    /// Training plus early-stopping ids, i.e. everything outside the
    /// validation fold.
    pub fn training_pool(&self) -> Vec<String> {
        let mut pool: Vec<String> = self.train.iter().chain(&self.early_stop).cloned().collect();
        pool.sort();
        pool
    }
}

fn check_fraction(es_fraction: f64) -> Result<()> {
    if es_fraction > 0.0 && es_fraction < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "early-stop fraction must lie in (0, 1), got {es_fraction}"
        )))
    }
}

fn early_stop_count(pool: usize, es_fraction: f64) -> Result<usize> {
    if pool < 2 {
        return Err(Error::invalid(format!(
            "cannot carve an early-stop set from {pool} sentence(s)"
        )));
    }
    let n = (es_fraction * pool as f64).round() as usize;
    Ok(n.clamp(1, pool - 1))
}

/// Seeded `k`-fold split with an early-stopping carve inside each training
/// part.
///
/// Fold sizes differ by at most one; the first `n % k` folds take the extra
/// sentence.
pub fn make_cv_splits(
    corpus: &[RatedSentence],
    k: usize,
    es_fraction: f64,
    seed: u64,
) -> Result<Vec<FoldSplit>> {
    if k < 2 {
        return Err(Error::invalid(format!("k must be at least 2, got {k}")));
    }
    check_fraction(es_fraction)?;
    let n = corpus.len();
    if k > n {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the corpus size {n}"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, "cv/shuffle"));

    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        let validation: Vec<usize> = order[start..start + size].to_vec();
        let mut rest: Vec<usize> = order[..start]
            .iter()
            .chain(&order[start + size..])
            .copied()
            .collect();
        start += size;

        let n_es = early_stop_count(rest.len(), es_fraction)?;
        rest.shuffle(&mut rng::stream(seed, &format!("cv/fold/{fold}/early-stop")));
        let (es, train) = rest.split_at(n_es);

        folds.push(FoldSplit {
            fold,
            train: ids_in_corpus_order(corpus, train),
            early_stop: ids_in_corpus_order(corpus, es),
            validation: ids_in_corpus_order(corpus, &validation),
            seed,
        });
    }
    Ok(folds)
}

fn ids_in_corpus_order(corpus: &[RatedSentence], idx: &[usize]) -> Vec<String> {
    let mut idx = idx.to_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| corpus[i].id.clone()).collect()
}

/// Splits `ids` into `(train, early_stop)` with the stream `label` under
/// `seed`. Both outputs keep the input order.
pub fn carve_early_stop(
    ids: &[String],
    es_fraction: f64,
    seed: u64,
    label: &str,
) -> Result<(Vec<String>, Vec<String>)> {
    check_fraction(es_fraction)?;
    let n_es = early_stop_count(ids.len(), es_fraction)?;
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.shuffle(&mut rng::stream(seed, label));
    let mut is_es = vec![false; ids.len()];
    for &i in &order[..n_es] {
        is_es[i] = true;
    }
    let (es, train): (Vec<_>, Vec<_>) = ids.iter().zip(&is_es).partition(|(_, &e)| e);
    Ok((
        train.into_iter().map(|(id, _)| id.clone()).collect(),
        es.into_iter().map(|(id, _)| id.clone()).collect(),
    ))
}

/// Train / early-stop split over the whole corpus for final (non-CV) models.
pub fn carve_final_split(
    corpus: &[RatedSentence],
    es_fraction: f64,
    seed: u64,
) -> Result<(Vec<String>, Vec<String>)> {
    if corpus.is_empty() {
        return Err(Error::invalid("corpus is empty"));
    }
    let ids: Vec<String> = corpus.iter().map(|s| s.id.clone()).collect();
    carve_early_stop(&ids, es_fraction, seed, "final/early-stop")
}
