use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::tokenize;

pub const DEFAULT_MAX_LEN: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecialToken {
    Pad,
    Unk,
    Cls,
    Bos,
    Eos,
}

impl SpecialToken {
    pub const ALL: [SpecialToken; 5] = [
        SpecialToken::Pad,
        SpecialToken::Unk,
        SpecialToken::Cls,
        SpecialToken::Bos,
        SpecialToken::Eos,
    ];

    pub fn id(self) -> usize {
        self as usize
    }

    pub fn symbol(self) -> &'static str {
        match self {
            SpecialToken::Pad => "[PAD]",
            SpecialToken::Unk => "[UNK]",
            SpecialToken::Cls => "[CLS]",
            SpecialToken::Bos => "[BOS]",
            SpecialToken::Eos => "[EOS]",
        }
    }
}

/// Word-level vocabulary. Ids `0..5` are the special tokens in
/// [`SpecialToken::ALL`] order; regular tokens follow by descending training
/// frequency.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = Error;

    fn try_from(tokens: Vec<String>) -> Result<Self> {
        Vocabulary::from_tokens(tokens)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

impl Vocabulary {
    /// Rebuilds a vocabulary from its full token list (specials first).
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        for special in SpecialToken::ALL {
            if tokens.get(special.id()).map(String::as_str) != Some(special.symbol()) {
                return Err(Error::invalid(format!(
                    "vocabulary must start with {} at id {}",
                    special.symbol(),
                    special.id()
                )));
            }
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::DuplicateId(t.clone()));
            }
        }
        Ok(Vocabulary { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> usize {
        self.index
            .get(token)
            .copied()
            .unwrap_or(SpecialToken::Unk.id())
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    fn token_ids(&self, text: &str) -> Vec<usize> {
        tokenize(text).iter().map(|t| self.id(t.text)).collect()
    }

    /// `[CLS] tokens… [PAD]…`, tail-truncated to `max_len`.
    pub fn encode_bert_style(&self, text: &str, max_len: usize) -> Result<TokenSequence> {
        check_max_len(max_len)?;
        let mut ids = self.token_ids(text);
        ids.truncate(max_len - 1);
        ids.insert(0, SpecialToken::Cls.id());
        Ok(TokenSequence::padded(ids, max_len))
    }

    /// `[BOS] tokens… [EOS] [PAD]…`; when truncating, tokens are dropped from
    /// the tail so that `[EOS]` always ends the unpadded part.
    pub fn encode_gpt_style(&self, text: &str, max_len: usize) -> Result<TokenSequence> {
        check_max_len(max_len)?;
        let mut ids = self.token_ids(text);
        ids.truncate(max_len - 2);
        ids.insert(0, SpecialToken::Bos.id());
        ids.push(SpecialToken::Eos.id());
        Ok(TokenSequence::padded(ids, max_len))
    }
}

fn check_max_len(max_len: usize) -> Result<()> {
    if max_len < 2 {
        return Err(Error::invalid(format!(
            "maximum sequence length must be at least 2, got {max_len}"
        )));
    }
    Ok(())
}

/// Builds a vocabulary from training sentences, keeping the `max_size` most
/// frequent tokens. Frequency ties are broken lexicographically.
pub fn build_vocab<'a, I>(sentences: I, max_size: usize) -> Vocabulary
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for s in sentences {
        for t in tokenize(s) {
            *counts.entry(t.text).or_default() += 1;
        }
    }
    let specials: Vec<&str> = SpecialToken::ALL.iter().map(|s| s.symbol()).collect();
    let mut ranked: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|(t, _)| !specials.contains(t))
        .collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(max_size);

    let tokens = specials
        .into_iter()
        .chain(ranked.into_iter().map(|(t, _)| t))
        .map(str::to_string)
        .collect();
    Vocabulary::from_tokens(tokens).expect("specials are placed first and tokens are unique")
}

/// Fixed-length id sequence with contiguous tail padding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub ids: Vec<usize>,
    pub attention_mask: Vec<u8>,
}

impl TokenSequence {
    fn padded(mut ids: Vec<usize>, max_len: usize) -> Self {
        let real = ids.len();
        ids.resize(max_len, SpecialToken::Pad.id());
        let mut attention_mask = vec![1; real];
        attention_mask.resize(max_len, 0);
        TokenSequence {
            ids,
            attention_mask,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Number of unpadded positions.
    pub fn real_len(&self) -> usize {
        self.attention_mask.iter().take_while(|&&m| m == 1).count()
    }

    /// Ids at unpadded positions.
    pub fn real_ids(&self) -> &[usize] {
        &self.ids[..self.real_len()]
    }

    /// Re-pads to a different total length without touching the real tokens.
    pub fn with_len(&self, max_len: usize) -> Result<Self> {
        let real = self.real_ids().to_vec();
        if real.len() > max_len {
            return Err(Error::invalid(format!(
                "{} real tokens do not fit into length {max_len}",
                real.len()
            )));
        }
        Ok(TokenSequence::padded(real, max_len))
    }
}
