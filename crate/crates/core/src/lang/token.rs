//! Model-facing token view. Numerals are split into one token per digit.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::LangError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TokenKind {
    Var,
    Equals,
    Plus,
    Digit,
    Comma,
    Qmark,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
}

impl Token {
    fn new(kind: TokenKind, text: impl Into<String>) -> Self {
        Self {
            kind,
            text: text.into(),
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Lexes `text` into tokens. Works on partial lines too, which the
/// token-by-token protocol relies on.
pub fn tokenize(text: &str) -> Result<Vec<Token>, LangError> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((pos, c)) = chars.next() {
        match c {
            ' ' | '\t' => {}
            'A'..='Z' => {
                let mut name = String::from(c);
                while let Some(&(_, next @ 'A'..='Z')) = chars.peek() {
                    name.push(next);
                    chars.next();
                }
                tokens.push(Token::new(TokenKind::Var, name));
            }
            '0'..='9' => tokens.push(Token::new(TokenKind::Digit, c)),
            '=' => tokens.push(Token::new(TokenKind::Equals, "=")),
            '+' => tokens.push(Token::new(TokenKind::Plus, "+")),
            ',' => tokens.push(Token::new(TokenKind::Comma, ",")),
            '?' => tokens.push(Token::new(TokenKind::Qmark, "?")),
            other => {
                return Err(LangError::Lex {
                    position: pos,
                    found: other,
                })
            }
        }
    }
    Ok(tokens)
}

/// Inverse of [`tokenize`] on canonical text: a comma is followed by one space,
/// every other token is glued to its neighbour.
pub fn detokenize<'a>(tokens: impl IntoIterator<Item = &'a Token>) -> String {
    let mut out = String::new();
    for token in tokens {
        out.push_str(&token.text);
        if token.kind == TokenKind::Comma {
            out.push(' ');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<(TokenKind, String)> {
        tokenize(text)
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.text))
            .collect()
    }

    #[test]
    fn digits_are_split() {
        use TokenKind::*;
        assert_eq!(
            kinds("B=12"),
            vec![
                (Var, "B".into()),
                (Equals, "=".into()),
                (Digit, "1".into()),
                (Digit, "2".into())
            ]
        );
    }

    #[test]
    fn question_tokens() {
        use TokenKind::*;
        let got: Vec<TokenKind> = kinds("A=1, A?").into_iter().map(|(k, _)| k).collect();
        assert_eq!(got, vec![Var, Equals, Digit, Comma, Var, Qmark]);
        let got: Vec<TokenKind> = kinds("B=3+1").into_iter().map(|(k, _)| k).collect();
        assert_eq!(got, vec![Var, Equals, Digit, Plus, Digit]);
    }

    #[test]
    fn multi_letter_names_are_one_token() {
        assert_eq!(kinds("AB=1")[0], (TokenKind::Var, "AB".into()));
    }

    #[test]
    fn foreign_characters_fail() {
        assert_eq!(
            tokenize("B=1;2"),
            Err(LangError::Lex {
                position: 3,
                found: ';'
            })
        );
    }

    #[test]
    fn detokenize_restores_canonical_text() {
        for text in ["A=1, A?", "A=1, B=2+A, B=2+1, B=3", "C=12+B", "B="] {
            assert_eq!(detokenize(&tokenize(text).unwrap()), text);
        }
        assert_eq!(detokenize(&tokenize("A=1,").unwrap()), "A=1, ");
    }
}
