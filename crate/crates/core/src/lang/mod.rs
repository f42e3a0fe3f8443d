//! The question and trace surface language.
//!
//! ```text
//! question := eq (", " eq)* ", " VAR "?"
//! eq       := VAR "=" rhs
//! rhs      := operand | operand "+" operand
//! operand  := VAR | NUM            NUM := 0..99
//! ```
//!
//! Rendering through [`std::fmt::Display`] is canonical: items are joined by
//! `", "` and equations contain no whitespace.

mod ast;
mod parse;
mod token;

pub use ast::{
    DerivationLine, Equation, Numeral, Operand, Question, Rhs, SemanticError, Trace, VarName,
    MODULUS,
};
pub use parse::{parse_line, parse_question, parse_trace};
pub use token::{detokenize, tokenize, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LangError {
    #[error("syntax error at byte {position}: expected {expected}, found {}", found.map(|c| format!("{c:?}")).unwrap_or_else(|| "end of input".into()))]
    Syntax {
        position: usize,
        expected: String,
        found: Option<char>,
    },
    #[error(transparent)]
    Semantic(#[from] SemanticError),
    #[error("unexpected character {found:?} at byte {position}")]
    Lex { position: usize, found: char },
    #[error("invalid variable name {0:?}")]
    InvalidName(String),
}
