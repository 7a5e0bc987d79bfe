//! Word/punctuation tokenization shared by the vocabulary and the feature
//! extractor.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    /// Maximal run of alphanumeric characters.
    Word,
    /// A single non-alphanumeric, non-whitespace character.
    Punct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub kind: TokenKind,
}

/// Splits on whitespace and punctuation boundaries. Case is preserved.
///
/// `"Er sagte, hallo."` yields `Er`, `sagte`, `,`, `hallo`, `.`.
pub fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut word_start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            word_start.get_or_insert(i);
            continue;
        }
        if let Some(s) = word_start.take() {
            out.push(Token {
                text: &text[s..i],
                kind: TokenKind::Word,
            });
        }
        if !c.is_whitespace() {
            out.push(Token {
                text: &text[i..i + c.len_utf8()],
                kind: TokenKind::Punct,
            });
        }
    }
    if let Some(s) = word_start {
        out.push(Token {
            text: &text[s..],
            kind: TokenKind::Word,
        });
    }
    out
}
