use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{EncoderKind, EncoderProvider, MLPWeights, TrainedModel, TrainingConfig};
use crate::corpus::Vocabulary;
use crate::encoder::{EncoderConfig, PrecomputedEmbeddings, Pooling, TransformerEncoder};
use crate::error::{Error, Result};
use crate::features::{FeatureCatalog, FeatureScaler};
use crate::params::{ParamSet, TensorSpec};

/// Everything except the tensors needed to rebuild a member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemberConfig {
    pub encoder: EncoderKind,
    pub embedding_dim: usize,
    pub pooling: Pooling,
    pub max_len: usize,
    pub transformer: Option<EncoderConfig>,
    pub projection_seed: Option<u64>,
    pub vocabulary: Option<Vocabulary>,
    pub mlp_hidden: usize,
    pub training: TrainingConfig,
    pub scaler: FeatureScaler,
    pub catalog: FeatureCatalog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointManifest {
    pub config: MemberConfig,
    pub catalog_version: String,
    /// Offsets count 32-bit values into the companion `.bin` file.
    pub tensor_index: Vec<TensorSpec>,
}

fn paths(dir: &Path, index: usize) -> (PathBuf, PathBuf) {
    (dir.join(format!("member_{index}.json")), dir.join(format!("member_{index}.bin")))
}

/// Writes `member_{index}.json` and `member_{index}.bin` into `dir`.
///
/// Tensors are stored as little-endian `f32` in name order.
pub fn write_checkpoint(dir: impl AsRef<Path>, index: usize, model: &TrainedModel, training: &TrainingConfig) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let (json_path, bin_path) = paths(dir, index);
    let collect = |p: &ParamSet| -> Vec<(TensorSpec, Vec<f64>)> {
        p.specs().iter().map(|s| (s.clone(), p.data()[s.range()].to_vec())).collect()
    };
    let mut tensors = collect(model.mlp.params());
    let (mut transformer, mut projection_seed, mut vocabulary) = (None, None, None);
    let (pooling, max_len) = match &model.provider {
        EncoderProvider::Transformer { encoder, vocab } => {
            tensors.extend(collect(encoder.params()));
            transformer = Some(encoder.config().clone());
            vocabulary = Some(vocab.clone());
            (encoder.config().pooling, encoder.config().max_len)
        }
        EncoderProvider::RandomProjection {
            vocab,
            pooling,
            max_len,
            seed,
            ..
        } => {
            projection_seed = Some(*seed);
            vocabulary = Some(vocab.clone());
            (*pooling, *max_len)
        }
        EncoderProvider::Precomputed(_) => (Pooling::Cls, 0),
    };
    tensors.sort_by(|a, b| a.0.name.cmp(&b.0.name));

    let mut index_out = Vec::with_capacity(tensors.len());
    let mut bytes = Vec::new();
    for (spec, data) in &tensors {
        index_out.push(TensorSpec {
            name: spec.name.clone(),
            shape: spec.shape.clone(),
            offset: bytes.len() / 4,
        });
        for &v in data {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let manifest = CheckpointManifest {
        config: MemberConfig {
            encoder: model.provider.kind(),
            embedding_dim: model.provider.dim(),
            pooling,
            max_len,
            transformer,
            projection_seed,
            vocabulary,
            mlp_hidden: model.mlp.hidden(),
            training: training.clone(),
            scaler: model.scaler.clone(),
            catalog: model.catalog.clone(),
        },
        catalog_version: model.catalog_version().to_string(),
        tensor_index: index_out,
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    std::fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;
    let mut f = std::fs::File::create(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(&bin_path, e))?;
    Ok(json_path)
}

/// Reads a member written by [`write_checkpoint`]. Members trained on
/// precomputed embeddings need the same embedding table again.
pub fn read_checkpoint(
    dir: impl AsRef<Path>,
    index: usize,
    embeddings: Option<Arc<PrecomputedEmbeddings>>,
) -> Result<(TrainedModel, CheckpointManifest)> {
    let (json_path, bin_path) = paths(dir.as_ref(), index);
    let text = std::fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
    let manifest: CheckpointManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Checkpoint(format!("{}: {e}", json_path.display())))?;
    let bytes = std::fs::read(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Checkpoint(format!("{} is not a whole number of f32 values", bin_path.display())));
    }
    let data: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let params = ParamSet::from_parts(manifest.tensor_index.clone(), data)?;

    let c = &manifest.config;
    if c.catalog.version() != manifest.catalog_version {
        return Err(Error::Checkpoint(format!(
            "catalog hashes to {} but manifest records {}",
            c.catalog.version(),
            manifest.catalog_version
        )));
    }
    let need_vocab = || {
        c.vocabulary
            .clone()
            .ok_or_else(|| Error::Checkpoint("manifest lacks a vocabulary".into()))
    };
    let provider = match c.encoder {
        EncoderKind::Transformer => {
            let config = c
                .transformer
                .clone()
                .ok_or_else(|| Error::Checkpoint("manifest lacks the transformer config".into()))?;
            EncoderProvider::Transformer {
                encoder: TransformerEncoder::from_params(config, &params)?,
                vocab: need_vocab()?,
            }
        }
        EncoderKind::RandomProjection => EncoderProvider::RandomProjection {
            vocab: need_vocab()?,
            pooling: c.pooling,
            max_len: c.max_len,
            dim: c.embedding_dim,
            seed: c
                .projection_seed
                .ok_or_else(|| Error::Checkpoint("manifest lacks the projection seed".into()))?,
        },
        EncoderKind::Precomputed => {
            let e = embeddings.ok_or_else(|| {
                Error::invalid("member was trained on precomputed embeddings; an embedding file is required")
            })?;
            if e.dim() != c.embedding_dim {
                return Err(Error::invalid(format!(
                    "embedding file has dimension {}, member expects {}",
                    e.dim(),
                    c.embedding_dim
                )));
            }
            EncoderProvider::Precomputed(e)
        }
    };
    let mlp = MLPWeights::from_params(c.embedding_dim + c.catalog.len(), c.mlp_hidden, &params)?;
    let model = TrainedModel::new(provider, mlp, c.scaler.clone(), c.catalog.clone())?;
    Ok((model, manifest))
}
