//! Synthetic German-like corpora with known label functions.

use ara_core::corpus::RatedSentence;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

pub const SHORT: &[&str] = &[
    "der", "die", "das", "und", "ist", "ein", "eine", "mit", "auf", "im", "Hund", "Haus", "Katze", "gut", "sehr",
    "heute", "wir", "sie", "er", "es", "nicht", "auch", "Ball", "Baum", "klein", "groß", "rot", "spielt", "liest",
    "Buch", "Tag", "Weg", "alt", "neu", "hat", "war", "Kind", "Zeit", "dort", "hier",
];

pub const LONG: &[&str] = &[
    "Durchschnittsgeschwindigkeit", "Verwaltungsvorschrift", "Bundesverfassungsgericht", "Wahrscheinlichkeitsrechnung",
    "Rechtsschutzversicherung", "Arbeitsunfähigkeitsbescheinigung", "Gesundheitsministerium", "Verantwortungsbewusstsein",
    "Grundstücksverkehrsgenehmigung", "Lebensmittelüberwachung", "Umweltverträglichkeitsprüfung", "Kraftfahrzeughaftpflicht",
    "Steuerhinterziehung", "Forschungsergebnisse", "Infrastrukturmaßnahmen", "Entscheidungsfindung",
    "Zusammenarbeit", "Beschäftigungsverhältnis", "Einkommensteuererklärung", "Sicherheitsvorkehrungen",
];

pub struct Sentence {
    pub text: String,
    pub tokens: usize,
    pub long_ratio: f64,
}

pub fn sentence(rng: &mut impl Rng, min_words: usize, max_words: usize) -> Sentence {
    let n = rng.random_range(min_words..=max_words);
    let p_long: f64 = rng.random_range(0.0..0.6);
    let mut words = Vec::with_capacity(n);
    let mut long = 0;
    for i in 0..n {
        let w = if rng.random_bool(p_long) {
            long += 1;
            LONG[rng.random_range(0..LONG.len())]
        } else {
            SHORT[rng.random_range(0..SHORT.len())]
        };
        let mut w = w.to_string();
        if i == 0 {
            let mut c = w.chars();
            w = c.next().map(|f| f.to_uppercase().collect::<String>() + c.as_str()).unwrap_or_default();
        }
        words.push(w);
    }
    let mut text = words.join(" ");
    text.push('.');
    Sentence {
        text,
        tokens: n + 1,
        long_ratio: long as f64 / n as f64,
    }
}

/// `n` sentences labelled `clamp(f(sentence) + N(0, noise²), 1, 7)`.
pub fn corpus<F>(n: usize, seed: u64, noise: f64, min_words: usize, max_words: usize, f: F) -> Vec<RatedSentence>
where
    F: Fn(&Sentence) -> f64,
{
    let mut rng = rand_xoshiro::SplitMix64::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise.max(1e-300)).unwrap();
    (0..n)
        .map(|i| {
            let s = sentence(&mut rng, min_words, max_words);
            let e = if noise > 0.0 { normal.sample(&mut rng) } else { 0.0 };
            let mos = (f(&s) + e).clamp(1.0, 7.0);
            RatedSentence::new(format!("s{i:04}"), s.text, mos).unwrap()
        })
        .collect()
}

/// Labels driven by sentence length and the share of long compounds.
pub fn readability_corpus(n: usize, seed: u64) -> Vec<RatedSentence> {
    corpus(n, seed, 0.25, 3, 18, |s| 0.6 + 0.17 * s.tokens as f64 + 4.0 * s.long_ratio)
}
