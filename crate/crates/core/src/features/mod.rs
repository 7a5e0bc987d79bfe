//! Surface, lexical and word-rarity readability features.
//!
//! A [`FeatureCatalog`] fixes the order and extraction rule of every feature.
//! Its version string is a fingerprint of the descriptor list, so any change
//! in order, parameters or rule revision yields a different version and stale
//! scalers, checkpoints or dumps are detected on load.

mod dump;
mod lexicon;
mod scaler;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::fingerprint;
use crate::text::{tokenize, TokenKind};

pub use dump::{read_feature_dump, write_feature_dump, FeatureTable};
pub use lexicon::{load_frequency_lexicon, FrequencyLexicon, DEFAULT_FLOOR_FREQUENCY};
pub use scaler::FeatureScaler;

/// Bump when the meaning of any [`FeatureRule`] changes.
const RULES_REVISION: u32 = 1;

pub const DEFAULT_LONG_WORD_THRESHOLDS: [usize; 4] = [6, 8, 10, 13];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum FeatureRule {
    TokenCount,
    CharCount,
    MeanWordLength,
    MaxWordLength,
    WordLengthStd,
    /// Words with more than `min_chars` characters.
    LongWordCount { min_chars: usize },
    LongWordRatio { min_chars: usize },
    PunctuationCount,
    /// Punctuation tokens over all tokens.
    PunctuationRatio,
    CommaCount,
    DigitCount,
    TypeTokenRatio,
    MeanLogFrequency,
    MinLogFrequency,
    OutOfLexiconCount,
    OutOfLexiconRatio,
    MeanSyllables,
    MaxSyllables,
    SyllableCount,
    /// Words with at least `min_syllables` syllables, over all words.
    PolysyllabicRatio { min_syllables: usize },
    MonosyllabicRatio,
    UppercaseInitialRatio,
    /// First Wiener Sachtextformel, a German readability grade.
    WienerSachtextformel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Count,
    Ratio,
    Real,
}

impl FeatureRule {
    pub fn kind(self) -> FeatureKind {
        use FeatureRule::*;
        match self {
            TokenCount | CharCount | MaxWordLength | LongWordCount { .. } | PunctuationCount
            | CommaCount | DigitCount | OutOfLexiconCount | MaxSyllables | SyllableCount => {
                FeatureKind::Count
            }
            LongWordRatio { .. } | PunctuationRatio | TypeTokenRatio | OutOfLexiconRatio
            | PolysyllabicRatio { .. } | MonosyllabicRatio | UppercaseInitialRatio => {
                FeatureKind::Ratio
            }
            MeanWordLength | WordLengthStd | MeanLogFrequency | MinLogFrequency
            | MeanSyllables | WienerSachtextformel => FeatureKind::Real,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub name: String,
    #[serde(flatten)]
    pub rule: FeatureRule,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<FeatureDescriptor>", into = "Vec<FeatureDescriptor>")]
pub struct FeatureCatalog {
    descriptors: Vec<FeatureDescriptor>,
    version: String,
}

impl TryFrom<Vec<FeatureDescriptor>> for FeatureCatalog {
    type Error = Error;

    fn try_from(d: Vec<FeatureDescriptor>) -> Result<Self> {
        FeatureCatalog::new(d)
    }
}

impl From<FeatureCatalog> for Vec<FeatureDescriptor> {
    fn from(c: FeatureCatalog) -> Self {
        c.descriptors
    }
}

impl Default for FeatureCatalog {
    fn default() -> Self {
        FeatureCatalog::with_long_word_thresholds(&DEFAULT_LONG_WORD_THRESHOLDS)
    }
}

impl FeatureCatalog {
    pub fn new(descriptors: Vec<FeatureDescriptor>) -> Result<Self> {
        let mut names = std::collections::HashSet::new();
        for d in &descriptors {
            if !names.insert(d.name.as_str()) {
                return Err(Error::invalid(format!("duplicate feature name `{}`", d.name)));
            }
        }
        let canonical = serde_json::to_string(&descriptors)?;
        let version = format!(
            "fc{RULES_REVISION}-{:016x}",
            fingerprint(canonical.as_bytes())
        );
        Ok(FeatureCatalog {
            descriptors,
            version,
        })
    }

    /// The standard catalog, with long-word features at the given character
    /// thresholds.
    pub fn with_long_word_thresholds(thresholds: &[usize]) -> Self {
        use FeatureRule::*;
        let d = |name: &str, rule| FeatureDescriptor {
            name: name.to_string(),
            rule,
        };
        let mut v = vec![
            d("token_count", TokenCount),
            d("char_count", CharCount),
            d("mean_word_length", MeanWordLength),
            d("max_word_length", MaxWordLength),
            d("word_length_std", WordLengthStd),
        ];
        for &c in thresholds {
            v.push(d(&format!("words_gt{c}_count"), LongWordCount { min_chars: c }));
            v.push(d(&format!("words_gt{c}_ratio"), LongWordRatio { min_chars: c }));
        }
        v.extend([
            d("punctuation_count", PunctuationCount),
            d("punctuation_ratio", PunctuationRatio),
            d("comma_count", CommaCount),
            d("digit_count", DigitCount),
            d("type_token_ratio", TypeTokenRatio),
            d("mean_log_frequency", MeanLogFrequency),
            d("min_log_frequency", MinLogFrequency),
            d("out_of_lexicon_count", OutOfLexiconCount),
            d("out_of_lexicon_ratio", OutOfLexiconRatio),
            d("mean_syllables", MeanSyllables),
            d("max_syllables", MaxSyllables),
            d("syllable_count", SyllableCount),
            d("polysyllabic_ratio", PolysyllabicRatio { min_syllables: 3 }),
            d("monosyllabic_ratio", MonosyllabicRatio),
            d("uppercase_initial_ratio", UppercaseInitialRatio),
            d("wiener_sachtextformel", WienerSachtextformel),
        ]);
        FeatureCatalog::new(v).expect("standard names are unique")
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn descriptors(&self) -> &[FeatureDescriptor] {
        &self.descriptors
    }

    pub fn names(&self) -> Vec<&str> {
        self.descriptors.iter().map(|d| d.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.descriptors.iter().position(|d| d.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub catalog_version: String,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn is_vowel(c: char) -> bool {
    matches!(
        c.to_lowercase().next().unwrap_or(c),
        'a' | 'e' | 'i' | 'o' | 'u' | 'y' | 'ä' | 'ö' | 'ü' | 'á' | 'à' | 'â' | 'é' | 'è' | 'ê'
            | 'í' | 'î' | 'ó' | 'ô' | 'ú' | 'û'
    )
}

/// Approximate syllable count: one nucleus per run of consecutive vowels,
/// at least one per word.
pub fn estimate_syllables(word: &str) -> usize {
    let mut groups = 0;
    let mut in_vowel = false;
    for c in word.chars() {
        let v = is_vowel(c);
        if v && !in_vowel {
            groups += 1;
        }
        in_vowel = v;
    }
    groups.max(1)
}

struct WordStats {
    lengths: Vec<usize>,
    syllables: Vec<usize>,
    log_freqs: Vec<f64>,
    oov: usize,
    types: usize,
    uppercase_initial: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn mean<T: Copy + Into<f64>>(xs: &[T]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().map(|&x| x.into()).sum::<f64>() / xs.len() as f64
    }
}

fn lengths_as_f64(v: &[usize]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

/// Computes the catalog's features for one sentence.
pub fn extract_features(
    text: &str,
    lexicon: &FrequencyLexicon,
    catalog: &FeatureCatalog,
) -> Result<FeatureVector> {
    if text.trim().is_empty() {
        return Err(Error::invalid("cannot extract features from empty text"));
    }
    let tokens = tokenize(text);
    let words: Vec<&str> = tokens
        .iter()
        .filter(|t| t.kind == TokenKind::Word)
        .map(|t| t.text)
        .collect();
    let n_punct = tokens.len() - words.len();

    let mut types = std::collections::HashSet::new();
    let mut stats = WordStats {
        lengths: Vec::with_capacity(words.len()),
        syllables: Vec::with_capacity(words.len()),
        log_freqs: Vec::with_capacity(words.len()),
        oov: 0,
        types: 0,
        uppercase_initial: 0,
    };
    for w in &words {
        stats.lengths.push(w.chars().count());
        stats.syllables.push(estimate_syllables(w));
        let key = lexicon::normalize(w);
        if !lexicon.contains(&key) {
            stats.oov += 1;
        }
        stats.log_freqs.push(lexicon.lookup(&key).log10());
        if w.chars().next().is_some_and(char::is_uppercase) {
            stats.uppercase_initial += 1;
        }
        types.insert(key);
    }
    stats.types = types.len();

    let n_words = words.len();
    let lens = lengths_as_f64(&stats.lengths);
    let values: Vec<f64> = catalog
        .descriptors()
        .iter()
        .map(|d| feature_value(d.rule, text, n_words, n_punct, &tokens, &stats, &lens))
        .collect();

    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "feature `{}` for text {text:?}",
            catalog.descriptors()[i].name
        )));
    }
    Ok(FeatureVector {
        values,
        catalog_version: catalog.version().to_string(),
    })
}

fn feature_value(
    rule: FeatureRule,
    text: &str,
    n_words: usize,
    n_punct: usize,
    tokens: &[crate::text::Token<'_>],
    s: &WordStats,
    lens: &[f64],
) -> f64 {
    use FeatureRule::*;
    let long = |c: usize| s.lengths.iter().filter(|&&l| l > c).count();
    let poly = |k: usize| s.syllables.iter().filter(|&&n| n >= k).count();
    match rule {
        TokenCount => n_words as f64,
        CharCount => text.chars().count() as f64,
        MeanWordLength => mean(lens),
        MaxWordLength => s.lengths.iter().copied().max().unwrap_or(0) as f64,
        WordLengthStd => {
            let m = mean(lens);
            if lens.is_empty() {
                0.0
            } else {
                (lens.iter().map(|l| (l - m).powi(2)).sum::<f64>() / lens.len() as f64).sqrt()
            }
        }
        LongWordCount { min_chars } => long(min_chars) as f64,
        LongWordRatio { min_chars } => ratio(long(min_chars), n_words),
        PunctuationCount => n_punct as f64,
        PunctuationRatio => ratio(n_punct, tokens.len()),
        CommaCount => text.chars().filter(|&c| c == ',').count() as f64,
        DigitCount => text.chars().filter(char::is_ascii_digit).count() as f64,
        TypeTokenRatio => ratio(s.types, n_words),
        MeanLogFrequency => mean(&s.log_freqs),
        MinLogFrequency => s.log_freqs.iter().copied().reduce(f64::min).unwrap_or(0.0),
        OutOfLexiconCount => s.oov as f64,
        OutOfLexiconRatio => ratio(s.oov, n_words),
        MeanSyllables => mean(&lengths_as_f64(&s.syllables)),
        MaxSyllables => s.syllables.iter().copied().max().unwrap_or(0) as f64,
        SyllableCount => s.syllables.iter().sum::<usize>() as f64,
        PolysyllabicRatio { min_syllables } => ratio(poly(min_syllables), n_words),
        MonosyllabicRatio => ratio(s.syllables.iter().filter(|&&n| n == 1).count(), n_words),
        UppercaseInitialRatio => ratio(s.uppercase_initial, n_words),
        WienerSachtextformel => {
            if n_words == 0 {
                0.0
            } else {
                let pct = |k: usize| 100.0 * ratio(k, n_words);
                0.1935 * pct(poly(3)) + 0.1672 * n_words as f64 + 0.1297 * pct(long(6))
                    - 0.0327 * pct(s.syllables.iter().filter(|&&n| n == 1).count())
                    - 0.875
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn value(fv: &FeatureVector, catalog: &FeatureCatalog, name: &str) -> f64 {
        fv.values[catalog.index_of(name).unwrap()]
    }

    #[test]
    fn default_catalog_covers_required_families() {
        let c = FeatureCatalog::default();
        for name in [
            "token_count",
            "char_count",
            "mean_word_length",
            "max_word_length",
            "words_gt6_count",
            "words_gt8_ratio",
            "words_gt10_count",
            "words_gt13_ratio",
            "punctuation_count",
            "comma_count",
            "digit_count",
            "type_token_ratio",
            "mean_log_frequency",
            "min_log_frequency",
            "out_of_lexicon_count",
            "mean_syllables",
            "uppercase_initial_ratio",
        ] {
            assert!(c.index_of(name).is_some(), "{name}");
        }
        assert_eq!(c.len(), 29);
    }

    #[test]
    fn short_sentence_counts() {
        let c = FeatureCatalog::default();
        let fv = extract_features("Der Hund bellt.", &FrequencyLexicon::default(), &c).unwrap();
        assert_eq!(value(&fv, &c, "token_count"), 3.0);
        assert_eq!(value(&fv, &c, "punctuation_count"), 1.0);
        assert_eq!(value(&fv, &c, "words_gt6_count"), 0.0);
        assert_eq!(value(&fv, &c, "char_count"), 15.0);
        assert_eq!(value(&fv, &c, "max_word_length"), 5.0);
        assert_eq!(value(&fv, &c, "syllable_count"), 3.0);
        assert_eq!(value(&fv, &c, "uppercase_initial_ratio"), 2.0 / 3.0);
        assert_eq!(fv.catalog_version, c.version());
    }

    #[test]
    fn long_compound_word() {
        let c = FeatureCatalog::default();
        let fv =
            extract_features("Durchschnittsgeschwindigkeit", &FrequencyLexicon::default(), &c)
                .unwrap();
        assert_eq!(value(&fv, &c, "words_gt13_count"), 1.0);
        assert_eq!(value(&fv, &c, "words_gt13_ratio"), 1.0);
        assert_eq!(value(&fv, &c, "max_word_length"), 28.0);
        // Durch-schnitts-ge-schwin-dig-keit
        assert_eq!(value(&fv, &c, "syllable_count"), 6.0);
    }

    #[test]
    fn rarity_features_use_lexicon_and_floor() {
        let lex = FrequencyLexicon::from_entries([("der", 1000.0), ("hund", 10.0)], 0.01).unwrap();
        let c = FeatureCatalog::default();
        let fv = extract_features("Der Hund bellt", &lex, &c).unwrap();
        assert_eq!(value(&fv, &c, "out_of_lexicon_count"), 1.0);
        assert_eq!(value(&fv, &c, "min_log_frequency"), -2.0);
        assert!((value(&fv, &c, "mean_log_frequency") - (3.0 + 1.0 - 2.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn punctuation_digits_and_types() {
        let c = FeatureCatalog::default();
        let fv = extract_features("Er, er sagte 41 km/h.", &FrequencyLexicon::default(), &c).unwrap();
        assert_eq!(value(&fv, &c, "comma_count"), 1.0);
        assert_eq!(value(&fv, &c, "digit_count"), 2.0);
        assert_eq!(value(&fv, &c, "punctuation_count"), 3.0);
        // er/Er collapse to one type: {er, sagte, 41, km, h}
        assert_eq!(value(&fv, &c, "type_token_ratio"), 5.0 / 6.0);
    }

    #[test]
    fn punctuation_only_text_is_finite() {
        let c = FeatureCatalog::default();
        let fv = extract_features("?!", &FrequencyLexicon::default(), &c).unwrap();
        assert!(fv.values.iter().all(|v| v.is_finite()));
        assert_eq!(value(&fv, &c, "token_count"), 0.0);
    }

    #[test]
    fn empty_text_is_an_error() {
        let c = FeatureCatalog::default();
        assert!(extract_features("  ", &FrequencyLexicon::default(), &c).is_err());
    }

    #[test]
    fn syllable_heuristic() {
        assert_eq!(estimate_syllables("Hund"), 1);
        assert_eq!(estimate_syllables("Katze"), 2);
        // a-u-e is one run of vowels
        assert_eq!(estimate_syllables("Bauer"), 1);
        assert_eq!(estimate_syllables("Größe"), 2);
        assert_eq!(estimate_syllables("km"), 1);
    }

    #[test]
    fn version_tracks_catalog_contents() {
        let a = FeatureCatalog::default();
        let b = FeatureCatalog::with_long_word_thresholds(&[6, 8, 10, 12]);
        let c = FeatureCatalog::with_long_word_thresholds(&[8, 6, 10, 13]);
        assert_ne!(a.version(), b.version());
        assert_ne!(a.version(), c.version());
        assert_eq!(a.version(), FeatureCatalog::default().version());
    }

    #[test]
    fn catalog_serde_round_trip_and_duplicate_rejection() {
        let c = FeatureCatalog::default();
        let json = serde_json::to_string(&c).unwrap();
        let back: FeatureCatalog = serde_json::from_str(&json).unwrap();
        assert_eq!(back.version(), c.version());
        let dup = vec![
            FeatureDescriptor { name: "x".into(), rule: FeatureRule::TokenCount },
            FeatureDescriptor { name: "x".into(), rule: FeatureRule::CharCount },
        ];
        assert!(FeatureCatalog::new(dup).is_err());
    }

    proptest! {
        #[test]
        fn ratios_in_unit_interval_and_counts_integral(text in "[A-Za-zäöüß0-9 ,.;!?-]{1,120}") {
            prop_assume!(!text.trim().is_empty());
            let lex = FrequencyLexicon::from_entries([("der", 50.0), ("a", 2.0)], 0.01).unwrap();
            let c = FeatureCatalog::default();
            let fv = extract_features(&text, &lex, &c).unwrap();
            prop_assert_eq!(fv.len(), c.len());
            for (d, &v) in c.descriptors().iter().zip(&fv.values) {
                prop_assert!(v.is_finite());
                match d.rule.kind() {
                    FeatureKind::Ratio => prop_assert!((0.0..=1.0).contains(&v), "{} = {}", d.name, v),
                    FeatureKind::Count => prop_assert!(v >= 0.0 && v.fract() == 0.0, "{} = {}", d.name, v),
                    FeatureKind::Real => {}
                }
            }
            prop_assert_eq!(&fv, &extract_features(&text, &lex, &c).unwrap());
        }
    }
}
