//! Training a single ensemble member from labelled sentences.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{build_vocab, RatedSentence, DEFAULT_MAX_LEN};
use crate::encoder::{EncoderConfig, PrecomputedEmbeddings, Pooling, TransformerEncoder};
use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureCatalog, FrequencyLexicon};
use crate::rng;
use crate::training::{
    train_phase1, train_phase2, EncoderKind, EncoderProvider, Phase1Example, Phase2Data, TrainedModel,
    TrainingConfig, TrainingHistory,
};

/// Architecture of one member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MemberSpec {
    pub encoder: EncoderKind,
    pub pooling: Pooling,
    pub max_len: usize,
    /// Regular (non-special) vocabulary entries kept.
    pub vocab_size: usize,
    pub model_dim: usize,
    pub num_layers: usize,
    pub num_heads: usize,
    pub ff_dim: usize,
    pub projection_dim: usize,
}

impl Default for MemberSpec {
    fn default() -> Self {
        let t = EncoderConfig::bidirectional(0);
        MemberSpec {
            encoder: EncoderKind::Transformer,
            pooling: Pooling::Cls,
            max_len: DEFAULT_MAX_LEN,
            vocab_size: 8000,
            model_dim: t.model_dim,
            num_layers: t.num_layers,
            num_heads: t.num_heads,
            ff_dim: t.ff_dim,
            projection_dim: 64,
        }
    }
}

impl MemberSpec {
    pub fn encoder_config(&self, vocab_size: usize) -> EncoderConfig {
        EncoderConfig {
            vocab_size,
            max_len: self.max_len,
            model_dim: self.model_dim,
            num_layers: self.num_layers,
            num_heads: self.num_heads,
            ff_dim: self.ff_dim,
            pooling: self.pooling,
            causal: self.pooling == Pooling::Eos,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.projection_dim == 0 {
            return Err(Error::invalid("projection_dim must be positive"));
        }
        self.encoder_config(crate::corpus::SpecialToken::ALL.len()).validate()
    }
}

#[derive(Debug, Clone)]
pub struct MemberOutcome {
    pub model: TrainedModel,
    pub phase1: Option<TrainingHistory>,
    pub phase2: TrainingHistory,
}

/// Runs phase 1 (transformer only) and phase 2 for one member.
///
/// `training.seed` seeds everything random in the member. The vocabulary
/// comes from `train` only.
pub fn train_member(
    train: &[RatedSentence],
    early_stop: &[RatedSentence],
    spec: &MemberSpec,
    training: &TrainingConfig,
    lexicon: &FrequencyLexicon,
    catalog: &FeatureCatalog,
    embeddings: Option<Arc<PrecomputedEmbeddings>>,
) -> Result<MemberOutcome> {
    spec.validate()?;
    training.validate()?;
    if train.is_empty() || early_stop.is_empty() {
        return Err(Error::invalid("member training needs non-empty training and early-stop sets"));
    }
    let seed = training.seed;
    let vocab = || build_vocab(train.iter().map(|s| s.text.as_str()), spec.vocab_size);
    let mut phase1 = None;
    let provider = match spec.encoder {
        EncoderKind::Transformer => {
            let vocab = vocab();
            let config = spec.encoder_config(vocab.len());
            let examples = |set: &[RatedSentence]| -> Result<Vec<Phase1Example>> {
                set.iter()
                    .map(|s| {
                        Ok(Phase1Example {
                            tokens: spec.pooling.encode(&vocab, &s.text, spec.max_len)?,
                            label: s.mos,
                        })
                    })
                    .collect()
            };
            let (tr, es) = (examples(train)?, examples(early_stop)?);
            let encoder = TransformerEncoder::new(config, rng::derive_seed(seed, "member/encoder"))?;
            let outcome = train_phase1(encoder, &tr, &es, training)?;
            phase1 = Some(outcome.history);
            EncoderProvider::Transformer {
                encoder: outcome.encoder,
                vocab,
            }
        }
        EncoderKind::RandomProjection => EncoderProvider::RandomProjection {
            vocab: vocab(),
            pooling: spec.pooling,
            max_len: spec.max_len,
            dim: spec.projection_dim,
            seed: rng::derive_seed(seed, "member/projection"),
        },
        EncoderKind::Precomputed => EncoderProvider::Precomputed(
            embeddings.ok_or_else(|| Error::invalid("the precomputed encoder needs an embedding file"))?,
        ),
    };

    let data = |set: &[RatedSentence]| -> Result<Phase2Data> {
        let mut d = Phase2Data::default();
        for s in set {
            d.embeddings.push(provider.embed(&s.as_sentence())?.values);
            d.features.push(extract_features(&s.text, lexicon, catalog)?);
            d.labels.push(s.mos);
        }
        Ok(d)
    };
    let outcome = train_phase2(&data(train)?, &data(early_stop)?, training)?;
    let model = TrainedModel::new(provider, outcome.mlp, outcome.scaler, catalog.clone())?;
    Ok(MemberOutcome {
        model,
        phase1,
        phase2: outcome.history,
    })
}
