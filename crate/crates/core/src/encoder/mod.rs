//! Sentence encoders.
//!
//! Three interchangeable providers produce a fixed-size [`Embedding`] per
//! sentence: a compact trainable [`TransformerEncoder`], a deterministic
//! bag-of-hashed-vectors [`random_projection_encode`], and embeddings
//! precomputed by an external model ([`PrecomputedEmbeddings`]).

pub(crate) mod ops;
mod precomputed;
mod projection;
mod transformer;

use serde::{Deserialize, Serialize};

use crate::corpus::{TokenSequence, Vocabulary, DEFAULT_MAX_LEN};
use crate::error::{Error, Result};

pub use precomputed::{load_precomputed, store_precomputed, PrecomputedEmbeddings};
pub use projection::random_projection_encode;
pub use transformer::{EncoderTrace, TransformerEncoder};

/// Which hidden state represents the sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    /// Hidden state of the prepended classification token (bidirectional).
    Cls,
    /// Hidden state of the final end-of-sequence token (causal).
    Eos,
}

impl Pooling {
    /// Tokenizes `text` in the layout matching this pooling mode.
    pub fn encode(self, vocab: &Vocabulary, text: &str, max_len: usize) -> Result<TokenSequence> {
        match self {
            Pooling::Cls => vocab.encode_bert_style(text, max_len),
            Pooling::Eos => vocab.encode_gpt_style(text, max_len),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub vocab_size: usize,
    pub max_len: usize,
    pub model_dim: usize,
    pub num_layers: usize,
    pub num_heads: usize,
    pub ff_dim: usize,
    pub pooling: Pooling,
    pub causal: bool,
}

impl EncoderConfig {
    /// Desk-scale bidirectional encoder with CLS pooling.
    pub fn bidirectional(vocab_size: usize) -> Self {
        EncoderConfig {
            vocab_size,
            max_len: DEFAULT_MAX_LEN,
            model_dim: 64,
            num_layers: 2,
            num_heads: 4,
            ff_dim: 128,
            pooling: Pooling::Cls,
            causal: false,
        }
    }

    /// Desk-scale causal encoder with EOS pooling.
    pub fn causal(vocab_size: usize) -> Self {
        EncoderConfig {
            pooling: Pooling::Eos,
            causal: true,
            ..EncoderConfig::bidirectional(vocab_size)
        }
    }

    pub fn for_pooling(pooling: Pooling, vocab_size: usize) -> Self {
        match pooling {
            Pooling::Cls => EncoderConfig::bidirectional(vocab_size),
            Pooling::Eos => EncoderConfig::causal(vocab_size),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("vocab_size", self.vocab_size),
            ("max_len", self.max_len),
            ("model_dim", self.model_dim),
            ("num_layers", self.num_layers),
            ("num_heads", self.num_heads),
            ("ff_dim", self.ff_dim),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::invalid(format!("encoder {name} must be positive")));
            }
        }
        if self.max_len < 2 {
            return Err(Error::invalid("encoder max_len must be at least 2"));
        }
        if !self.model_dim.is_multiple_of(self.num_heads) {
            return Err(Error::invalid(format!(
                "model_dim {} is not divisible by num_heads {}",
                self.model_dim, self.num_heads
            )));
        }
        match (self.pooling, self.causal) {
            (Pooling::Cls, false) | (Pooling::Eos, true) => Ok(()),
            _ => Err(Error::invalid(
                "CLS pooling requires a bidirectional encoder and EOS pooling a causal one",
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingSource {
    Transformer,
    RandomProjection,
    Precomputed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub values: Vec<f64>,
    pub source: EmbeddingSource,
}

impl Embedding {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}
