use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{mlp_input, MLPWeights};
use crate::corpus::{Sentence, TokenSequence, Vocabulary};
use crate::encoder::{random_projection_encode, Embedding, PrecomputedEmbeddings, Pooling, TransformerEncoder};
use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureCatalog, FeatureScaler, FrequencyLexicon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderKind {
    Transformer,
    RandomProjection,
    Precomputed,
}

impl std::fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EncoderKind::Transformer => "transformer",
            EncoderKind::RandomProjection => "random-projection",
            EncoderKind::Precomputed => "precomputed",
        })
    }
}

/// Source of sentence embeddings for a trained model.
#[derive(Debug, Clone)]
pub enum EncoderProvider {
    Transformer {
        encoder: TransformerEncoder,
        vocab: Vocabulary,
    },
    RandomProjection {
        vocab: Vocabulary,
        pooling: Pooling,
        max_len: usize,
        dim: usize,
        seed: u64,
    },
    Precomputed(Arc<PrecomputedEmbeddings>),
}

impl EncoderProvider {
    pub fn kind(&self) -> EncoderKind {
        match self {
            EncoderProvider::Transformer { .. } => EncoderKind::Transformer,
            EncoderProvider::RandomProjection { .. } => EncoderKind::RandomProjection,
            EncoderProvider::Precomputed(_) => EncoderKind::Precomputed,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            EncoderProvider::Transformer { encoder, .. } => encoder.dim(),
            EncoderProvider::RandomProjection { dim, .. } => *dim,
            EncoderProvider::Precomputed(e) => e.dim(),
        }
    }

    /// Token ids as seen by the encoder; `None` for precomputed embeddings.
    pub fn tokenize(&self, text: &str) -> Result<Option<TokenSequence>> {
        match self {
            EncoderProvider::Transformer { encoder, vocab } => {
                let c = encoder.config();
                c.pooling.encode(vocab, text, c.max_len).map(Some)
            }
            EncoderProvider::RandomProjection {
                vocab, pooling, max_len, ..
            } => pooling.encode(vocab, text, *max_len).map(Some),
            EncoderProvider::Precomputed(_) => Ok(None),
        }
    }

    pub fn embed(&self, sentence: &Sentence) -> Result<Embedding> {
        match self {
            EncoderProvider::Transformer { encoder, .. } => {
                let tokens = self.tokenize(&sentence.text)?.expect("transformer tokenizes");
                encoder.embed(&tokens)
            }
            EncoderProvider::RandomProjection { dim, seed, .. } => {
                let tokens = self.tokenize(&sentence.text)?.expect("projection tokenizes");
                random_projection_encode(&tokens, *seed, *dim)
            }
            EncoderProvider::Precomputed(e) => e.get(&sentence.id),
        }
    }
}

/// Encoder, feature scaler and regressor of one ensemble member.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub provider: EncoderProvider,
    pub mlp: MLPWeights,
    pub scaler: FeatureScaler,
    pub catalog: FeatureCatalog,
}

impl TrainedModel {
    pub fn new(provider: EncoderProvider, mlp: MLPWeights, scaler: FeatureScaler, catalog: FeatureCatalog) -> Result<Self> {
        if scaler.catalog_version != catalog.version() {
            return Err(Error::invalid(format!(
                "scaler fitted on catalog {} but model uses {}",
                scaler.catalog_version,
                catalog.version()
            )));
        }
        if scaler.dim() != catalog.len() {
            return Err(Error::LengthMismatch {
                expected: catalog.len(),
                actual: scaler.dim(),
            });
        }
        if provider.dim() + catalog.len() != mlp.input_dim() {
            return Err(Error::invalid(format!(
                "embedding dim {} plus {} features does not match MLP input dim {}",
                provider.dim(),
                catalog.len(),
                mlp.input_dim()
            )));
        }
        Ok(TrainedModel {
            provider,
            mlp,
            scaler,
            catalog,
        })
    }

    pub fn catalog_version(&self) -> &str {
        self.catalog.version()
    }
}

/// Raw (unclamped) readability score of one sentence.
pub fn predict(sentence: &Sentence, model: &TrainedModel, lexicon: &FrequencyLexicon) -> Result<f64> {
    let embedding = model.provider.embed(sentence)?;
    let features = extract_features(&sentence.text, lexicon, &model.catalog)?;
    let scaled = model.scaler.apply(&features)?;
    Ok(model.mlp.forward(&mlp_input(&embedding.values, &scaled.values))?.score)
}
