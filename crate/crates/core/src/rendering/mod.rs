//! Supervision pairs for the three output strategies.
//!
//! The iterative strategies share one accretion law: the model input is the
//! question, [`CONTEXT_SEPARATOR`], then whatever has been produced so far.
//! The harness drivers build their requests with the same functions, so the
//! training data and the decoding loop can never drift apart.

mod jsonl;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use jsonl::{
    from_jsonl_str, read_jsonl, to_jsonl_string, write_jsonl, DatasetError, FieldError, Record,
};

use crate::chaining::ChainingStrategy;
use crate::generator::Instance;
use crate::lang::{detokenize, tokenize, DerivationLine, Question, Token};

/// Sits between the question and the chain so far. `;` is outside the grammar.
pub const CONTEXT_SEPARATOR: &str = " ; ";

/// Joins chain lines.
pub const LINE_SEPARATOR: &str = ", ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputStrategy {
    AllAtOnce,
    StepByStep,
    TokenByToken,
}

impl OutputStrategy {
    pub const ALL: [OutputStrategy; 3] = [
        OutputStrategy::AllAtOnce,
        OutputStrategy::StepByStep,
        OutputStrategy::TokenByToken,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OutputStrategy::AllAtOnce => "all_at_once",
            OutputStrategy::StepByStep => "step_by_step",
            OutputStrategy::TokenByToken => "token_by_token",
        }
    }

    /// Short command-line spelling.
    pub fn short_name(self) -> &'static str {
        match self {
            OutputStrategy::AllAtOnce => "all",
            OutputStrategy::StepByStep => "step",
            OutputStrategy::TokenByToken => "token",
        }
    }
}

impl fmt::Display for OutputStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OutputStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|o| o.name() == s || o.short_name() == s)
            .ok_or_else(|| format!("unknown output strategy {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub instance_id: String,
    pub output_strategy: OutputStrategy,
    pub chaining_strategy: ChainingStrategy,
    /// 0-based position of this unit in the trace.
    pub step_index: usize,
    pub input_text: String,
    pub target_text: String,
}

/// Input for the next line after `lines`.
pub fn step_context(question: &Question, lines: &[DerivationLine]) -> String {
    let mut out = format!("{question}{CONTEXT_SEPARATOR}");
    for (i, line) in lines.iter().enumerate() {
        if i > 0 {
            out.push_str(LINE_SEPARATOR);
        }
        out.push_str(&line.to_string());
    }
    out
}

/// Input for the next token after `tokens`.
pub fn token_context(question: &Question, tokens: &[Token]) -> String {
    format!("{question}{CONTEXT_SEPARATOR}{}", detokenize(tokens))
}

/// Splits a context back into the question text and the chain text.
pub fn split_context(input: &str) -> (&str, Option<&str>) {
    match input.split_once(';') {
        Some((question, chain)) => (question.trim(), Some(chain.strip_prefix(' ').unwrap_or(chain))),
        None => (input.trim(), None),
    }
}

fn example(
    inst: &Instance,
    output: OutputStrategy,
    chaining: ChainingStrategy,
    step_index: usize,
    input_text: String,
    target_text: String,
) -> TrainingExample {
    TrainingExample {
        instance_id: inst.id.clone(),
        output_strategy: output,
        chaining_strategy: chaining,
        step_index,
        input_text,
        target_text,
    }
}

pub fn render_all_at_once(inst: &Instance, chaining: ChainingStrategy) -> Vec<TrainingExample> {
    vec![example(
        inst,
        OutputStrategy::AllAtOnce,
        chaining,
        0,
        inst.question.to_string(),
        inst.gold(chaining).to_string(),
    )]
}

pub fn render_step_by_step(inst: &Instance, chaining: ChainingStrategy) -> Vec<TrainingExample> {
    let lines = &inst.gold(chaining).lines;
    (0..lines.len())
        .map(|k| {
            example(
                inst,
                OutputStrategy::StepByStep,
                chaining,
                k,
                step_context(&inst.question, &lines[..k]),
                lines[k].to_string(),
            )
        })
        .collect()
}

pub fn render_token_by_token(inst: &Instance, chaining: ChainingStrategy) -> Vec<TrainingExample> {
    let tokens = tokenize(&inst.gold(chaining).to_string()).expect("gold traces lex");
    (0..tokens.len())
        .map(|k| {
            example(
                inst,
                OutputStrategy::TokenByToken,
                chaining,
                k,
                token_context(&inst.question, &tokens[..k]),
                tokens[k].text.clone(),
            )
        })
        .collect()
}

pub fn render_examples(
    inst: &Instance,
    output: OutputStrategy,
    chaining: ChainingStrategy,
) -> Vec<TrainingExample> {
    match output {
        OutputStrategy::AllAtOnce => render_all_at_once(inst, chaining),
        OutputStrategy::StepByStep => render_step_by_step(inst, chaining),
        OutputStrategy::TokenByToken => render_token_by_token(inst, chaining),
    }
}
