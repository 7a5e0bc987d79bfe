//! Ensemble scoring with the validity filter and the bootstrap study of
//! ensemble size and composition.

mod bootstrap;
mod io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bootstrap::{bootstrap_study, BootstrapReport, BootstrapRow};
pub use io::{load_pool_dir, read_predictions, write_predictions, PredictionTable};

/// Lowest valid score on the label scale.
pub const DEFAULT_FLOOR: f64 = 1.0;

/// Mean of the member scores strictly above `floor`; `floor` itself when no
/// score qualifies.
pub fn ensemble_predict(scores: &[f64], floor: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::invalid("ensemble of zero members"));
    }
    let (sum, n) = scores
        .iter()
        .filter(|&&s| s > floor)
        .fold((0.0, 0usize), |(s, n), &x| (s + x, n + 1));
    Ok(if n == 0 { floor } else { sum / n as f64 })
}

/// Model family of a pool member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleComposition {
    /// Members of family A only.
    #[value(name = "a")]
    #[serde(rename = "a")]
    FamilyA,
    /// Members of family B only.
    #[value(name = "b")]
    #[serde(rename = "b")]
    FamilyB,
    /// Half of the members from each family; even sizes only.
    Mixed,
}

impl EnsembleComposition {
    pub const ALL: [EnsembleComposition; 3] = [
        EnsembleComposition::FamilyA,
        EnsembleComposition::FamilyB,
        EnsembleComposition::Mixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnsembleComposition::FamilyA => "a",
            EnsembleComposition::FamilyB => "b",
            EnsembleComposition::Mixed => "mixed",
        }
    }

    /// How many members each family contributes to an ensemble of `size`.
    pub fn draws(self, size: usize) -> Result<(usize, usize)> {
        if size == 0 {
            return Err(Error::invalid("ensemble size must be positive"));
        }
        match self {
            EnsembleComposition::FamilyA => Ok((size, 0)),
            EnsembleComposition::FamilyB => Ok((0, size)),
            EnsembleComposition::Mixed if size % 2 == 1 => Err(Error::invalid(format!(
                "mixed ensembles need an even size, got {size}"
            ))),
            EnsembleComposition::Mixed => Ok((size / 2, size / 2)),
        }
    }
}

impl std::fmt::Display for EnsembleComposition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolMember {
    pub member_id: String,
    pub family: Family,
    /// One score per sentence, in the fold's sentence order.
    pub predictions: Vec<f64>,
}

/// Member predictions for one validation fold.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolFold {
    pub sentence_ids: Vec<String>,
    pub members: Vec<PoolMember>,
}

/// Out-of-fold predictions of many models, grouped by fold.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionPool {
    folds: Vec<PoolFold>,
}

impl PredictionPool {
    pub fn new(folds: Vec<PoolFold>) -> Result<Self> {
        if folds.is_empty() {
            return Err(Error::invalid("prediction pool has no folds"));
        }
        for (f, fold) in folds.iter().enumerate() {
            for m in &fold.members {
                if m.predictions.len() != fold.sentence_ids.len() {
                    return Err(Error::invalid(format!(
                        "member {} of fold {f} has {} predictions for {} sentences",
                        m.member_id,
                        m.predictions.len(),
                        fold.sentence_ids.len()
                    )));
                }
                if m.predictions.iter().any(|p| !p.is_finite()) {
                    return Err(Error::NonFinite(format!("predictions of member {} in fold {f}", m.member_id)));
                }
            }
        }
        Ok(PredictionPool { folds })
    }

    pub fn folds(&self) -> &[PoolFold] {
        &self.folds
    }

    /// Prediction vectors of one family in one fold.
    pub fn family(&self, fold: usize, family: Family) -> Vec<&[f64]> {
        self.folds[fold]
            .members
            .iter()
            .filter(|m| m.family == family)
            .map(|m| m.predictions.as_slice())
            .collect()
    }
}
