//! Run configuration read from a TOML file.
//!
//! ```toml
//! seed = 42
//! jobs = 4
//!
//! [paths]
//! corpus = "data/train.csv"
//! lexicon = "data/frequencies.tsv"
//! splits = "runs/splits"
//! output = "runs/fold0"
//!
//! [split]
//! folds = 5
//! early_stop_fraction = 0.1
//! final_early_stop_fraction = 0.075
//!
//! [member]
//! encoder = "transformer"
//! pooling = "cls"
//! model_dim = 64
//!
//! [training]
//! phase1_lr = 1e-3
//!
//! [ensemble]
//! members = 5
//! sizes = "1..60"
//! resamples = 1000
//! compositions = ["a", "b", "mixed"]
//! ```
//!
//! Relative paths are resolved against the directory of the config file.
//! Every table and key is optional; command-line flags take precedence.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::ensemble::{EnsembleComposition, DEFAULT_FLOOR};
use crate::features::{FeatureCatalog, DEFAULT_LONG_WORD_THRESHOLDS};
use crate::pipeline::MemberSpec;
use crate::training::TrainingConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub paths: PathsConfig,
    pub split: SplitConfig,
    pub features: FeaturesConfig,
    pub member: MemberSpec,
    pub training: TrainingConfig,
    pub ensemble: EnsembleConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub corpus: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub splits: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub folds: usize,
    pub early_stop_fraction: f64,
    pub final_early_stop_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            folds: 5,
            early_stop_fraction: 0.1,
            final_early_stop_fraction: 0.075,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesConfig {
    pub long_word_thresholds: Vec<usize>,
    /// Frequency assigned to words missing from the lexicon.
    pub lexicon_floor: Option<f64>,
}

impl Default for FeaturesConfig {
    fn default() -> Self {
        FeaturesConfig {
            long_word_thresholds: DEFAULT_LONG_WORD_THRESHOLDS.to_vec(),
            lexicon_floor: None,
        }
    }
}

impl FeaturesConfig {
    pub fn catalog(&self) -> FeatureCatalog {
        FeatureCatalog::with_long_word_thresholds(&self.long_word_thresholds)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub members: usize,
    pub floor: f64,
    pub sizes: String,
    pub resamples: usize,
    pub compositions: Vec<EnsembleComposition>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            members: 5,
            floor: DEFAULT_FLOOR,
            sizes: "1..60".into(),
            resamples: 1000,
            compositions: EnsembleComposition::ALL.to_vec(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let p = &mut config.paths;
        for slot in [&mut p.corpus, &mut p.lexicon, &mut p.embeddings, &mut p.splits, &mut p.output] {
            if let Some(rel) = slot.as_ref().filter(|r| r.is_relative()) {
                *slot = Some(base.join(rel));
            }
        }
        Ok(config)
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::usage("a seed is required: set `seed` in the config or pass --seed"))
    }
}

/// Parses sizes such as `1..60`, `1,5,20,60` or `1..10,20,40`; ranges are
/// inclusive. The result is sorted and free of duplicates.
pub fn parse_sizes(spec: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::usage(format!("invalid sizes `{spec}`; expected e.g. `1..60` or `1,5,20`"));
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim) {
        if let Some((lo, hi)) = part.split_once("..") {
            let lo: usize = lo.trim().parse().map_err(|_| bad())?;
            let hi: usize = hi.trim().parse().map_err(|_| bad())?;
            if lo > hi {
                return Err(bad());
            }
            out.extend(lo..=hi);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() || out[0] == 0 {
        return Err(bad());
    }
    Ok(out)
}
