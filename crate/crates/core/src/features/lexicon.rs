use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};

/// Frequency returned for words missing from the lexicon.
pub const DEFAULT_FLOOR_FREQUENCY: f64 = 0.01;

/// Word frequencies (per million tokens) with case-insensitive lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyLexicon {
    freqs: HashMap<String, f64>,
    floor: f64,
}

impl Default for FrequencyLexicon {
    /// An empty lexicon: every word is out-of-lexicon.
    fn default() -> Self {
        FrequencyLexicon {
            freqs: HashMap::new(),
            floor: DEFAULT_FLOOR_FREQUENCY,
        }
    }
}

pub(crate) fn normalize(word: &str) -> String {
    word.to_lowercase()
}

fn check_frequency(f: f64) -> std::result::Result<(), String> {
    if f.is_finite() && f > 0.0 {
        Ok(())
    } else {
        Err(format!("frequency must be positive and finite, got {f}"))
    }
}

impl FrequencyLexicon {
    /// Builds a lexicon in memory; the first occurrence of a word wins.
    pub fn from_entries<'a, I>(entries: I, floor: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        check_frequency(floor).map_err(Error::InvalidArgument)?;
        let mut freqs = HashMap::new();
        for (w, f) in entries {
            check_frequency(f).map_err(Error::InvalidArgument)?;
            freqs.entry(normalize(w)).or_insert(f);
        }
        Ok(FrequencyLexicon { freqs, floor })
    }

    pub fn with_floor(mut self, floor: f64) -> Result<Self> {
        check_frequency(floor).map_err(Error::InvalidArgument)?;
        self.floor = floor;
        Ok(self)
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.freqs.contains_key(&normalize(word))
    }

    /// Frequency of `word`, or the floor when it is unknown.
    pub fn lookup(&self, word: &str) -> f64 {
        self.freqs.get(&normalize(word)).copied().unwrap_or(self.floor)
    }
}

/// Reads `word<TAB>frequency` lines. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn load_frequency_lexicon(path: impl AsRef<Path>) -> Result<FrequencyLexicon> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize, message: String| Error::MalformedLine {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut freqs = HashMap::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (word, freq) = line
            .split_once('\t')
            .ok_or_else(|| bad(line_no, "expected `word<TAB>frequency`".into()))?;
        if word.is_empty() {
            return Err(bad(line_no, "empty word".into()));
        }
        let f: f64 = freq
            .trim()
            .parse()
            .map_err(|_| bad(line_no, format!("cannot parse frequency `{freq}`")))?;
        check_frequency(f).map_err(|m| bad(line_no, m))?;
        freqs.entry(normalize(word)).or_insert(f);
    }
    Ok(FrequencyLexicon {
        freqs,
        floor: DEFAULT_FLOOR_FREQUENCY,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn lexicon_file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn lookup_is_case_insensitive() {
        let f = lexicon_file("der\t12.5\n");
        let lex = load_frequency_lexicon(f.path()).unwrap();
        assert_eq!(lex.lookup("Der"), 12.5);
        assert_eq!(lex.lookup("DER"), 12.5);
    }

    #[test]
    fn missing_word_gets_floor() {
        let f = lexicon_file("der\t12.5\n");
        let lex = load_frequency_lexicon(f.path()).unwrap();
        assert_eq!(lex.lookup("Hund"), 0.01);
        assert_eq!(lex.with_floor(0.5).unwrap().lookup("Hund"), 0.5);
    }

    #[test]
    fn first_duplicate_wins() {
        let f = lexicon_file("der\t12.5\nDer\t99\n\nund\t3\n");
        let lex = load_frequency_lexicon(f.path()).unwrap();
        assert_eq!(lex.lookup("der"), 12.5);
        assert_eq!(lex.len(), 2);
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        for (contents, expected) in [
            ("der\t1\nkaputt\n", 2),
            ("der\t1\nund\tabc\n", 2),
            ("der\t0\n", 1),
            ("a\t1\nb\t2\nc\t-3\n", 3),
        ] {
            let f = lexicon_file(contents);
            match load_frequency_lexicon(f.path()) {
                Err(Error::MalformedLine { line, .. }) => assert_eq!(line, expected, "{contents:?}"),
                other => panic!("unexpected {other:?}"),
            }
        }
    }
}
