//! Order-insensitive chain checking and error classification.
//!
//! A predicted chain is correct when
//!
//! 1. every line is *sound*: a verbatim copy of a context equation, a single
//!    substitution of an established value into an earlier line with the same
//!    left-hand side, the mod-100 result of an earlier numeral-only line, or
//!    the final `TARGET=answer` claim;
//! 2. its lines form the same multiset as the gold chain (canonical text,
//!    operand order preserved); and
//! 3. the answer is right.
//!
//! Only dependency order matters, never gold's order. A value is established
//! by the latest emitted `V=n` line, falling back to a direct assignment in
//! the question. Values from wrong lines are trusted downstream, so an error
//! is reported where it starts rather than everywhere it propagates.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lang::{
    parse_line, DerivationLine, Equation, Numeral, Operand, Question, Rhs, Trace, VarName,
};
use crate::semantics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorClass {
    /// A copy line that alters its context equation.
    CopyingError,
    /// A substitution with no preceding copy and a made-up value.
    HastyAssignment,
    /// A wrong line later redone correctly.
    IgnoringIncorrectStep,
    /// A wrong copy followed by the substitution the right copy would give.
    CorrectAssignment,
    /// Lines about variables outside the gold chain.
    NonAffectingError,
    Malformed,
    WrongAnswer,
    MissingSteps,
}

impl ErrorClass {
    pub const ALL: [ErrorClass; 8] = [
        ErrorClass::CopyingError,
        ErrorClass::HastyAssignment,
        ErrorClass::IgnoringIncorrectStep,
        ErrorClass::CorrectAssignment,
        ErrorClass::NonAffectingError,
        ErrorClass::Malformed,
        ErrorClass::WrongAnswer,
        ErrorClass::MissingSteps,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ErrorClass::CopyingError => "COPYING_ERROR",
            ErrorClass::HastyAssignment => "HASTY_ASSIGNMENT",
            ErrorClass::IgnoringIncorrectStep => "IGNORING_INCORRECT_STEP",
            ErrorClass::CorrectAssignment => "CORRECT_ASSIGNMENT",
            ErrorClass::NonAffectingError => "NON_AFFECTING_ERROR",
            ErrorClass::Malformed => "MALFORMED",
            ErrorClass::WrongAnswer => "WRONG_ANSWER",
            ErrorClass::MissingSteps => "MISSING_STEPS",
        }
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PredictedLine {
    Line(DerivationLine),
    Malformed(String),
}

impl fmt::Display for PredictedLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictedLine::Line(line) => line.fmt(f),
            PredictedLine::Malformed(raw) => f.write_str(raw),
        }
    }
}

/// Model output split into lines; unparseable pieces are kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Prediction {
    pub lines: Vec<PredictedLine>,
}

impl Prediction {
    /// Splits on commas. The empty string yields a single malformed line.
    pub fn parse(text: &str) -> Self {
        let lines = text
            .split(',')
            .map(|piece| match parse_line(piece) {
                Ok(line) => PredictedLine::Line(line),
                Err(_) => PredictedLine::Malformed(piece.trim().to_string()),
            })
            .collect();
        Self { lines }
    }

    pub fn from_trace(trace: &Trace) -> Self {
        Self {
            lines: trace.lines.iter().cloned().map(PredictedLine::Line).collect(),
        }
    }

    pub fn parsed(&self) -> impl Iterator<Item = &DerivationLine> {
        self.lines.iter().filter_map(|l| match l {
            PredictedLine::Line(line) => Some(line),
            PredictedLine::Malformed(_) => None,
        })
    }

    pub fn has_malformed(&self) -> bool {
        self.lines
            .iter()
            .any(|l| matches!(l, PredictedLine::Malformed(_)))
    }
}

impl fmt::Display for Prediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, line) in self.lines.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            line.fmt(f)?;
        }
        Ok(())
    }
}

impl From<&Trace> for Prediction {
    fn from(trace: &Trace) -> Self {
        Prediction::from_trace(trace)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub answer_correct: bool,
    pub chain_correct: bool,
    pub errors: Vec<ErrorClass>,
    pub first_bad_line: Option<usize>,
    /// The decoding loop hit its iteration cap before the answer.
    #[serde(default)]
    pub capped: bool,
}

impl Verdict {
    /// Single-label view: the first class in [`ErrorClass`] priority order.
    pub fn primary_error(&self) -> Option<ErrorClass> {
        self.errors.first().copied()
    }
}

/// True iff the last parseable line is `TARGET=answer`.
pub fn check_answer(q: &Question, predicted: &Prediction) -> bool {
    let Ok(answer) = semantics::answer(q) else {
        return false;
    };
    predicted
        .parsed()
        .last()
        .is_some_and(|line| line.lhs == *q.target() && line.rhs.as_value() == Some(answer))
}

/// Is `line` `base` with exactly one variable operand replaced by its value?
fn single_substitution(
    base: &DerivationLine,
    line: &DerivationLine,
    values: &HashMap<VarName, Numeral>,
) -> bool {
    if base.lhs != line.lhs {
        return false;
    }
    let pairs: Vec<(&Operand, &Operand)> = match (&base.rhs, &line.rhs) {
        (Rhs::Direct(a), Rhs::Direct(b)) => vec![(a, b)],
        (Rhs::Add(a1, a2), Rhs::Add(b1, b2)) => vec![(a1, b1), (a2, b2)],
        _ => return false,
    };
    let mut substituted = 0;
    for (from, to) in pairs {
        if from == to {
            continue;
        }
        match (from, to) {
            (Operand::Var(v), Operand::Num(n)) if values.get(v) == Some(n) => substituted += 1,
            _ => return false,
        }
    }
    substituted == 1
}

fn is_result_of(base: &DerivationLine, line: &DerivationLine) -> bool {
    base.lhs == line.lhs
        && matches!(base.rhs, Rhs::Add(..))
        && base.rhs.numeric_value().is_some()
        && line.rhs.as_value() == base.rhs.numeric_value()
}

/// Compares `line` with its context equation `ctx`. Returns `Some(correct)`
/// when every difference is a variable replaced by a numeral, `None` for any
/// other edit.
fn substitution_of(
    ctx: &Equation,
    line: &DerivationLine,
    values: &HashMap<VarName, Numeral>,
) -> Option<bool> {
    let pairs: Vec<(&Operand, &Operand)> = match (&ctx.rhs, &line.rhs) {
        (Rhs::Direct(a), Rhs::Direct(b)) => vec![(a, b)],
        (Rhs::Add(a1, a2), Rhs::Add(b1, b2)) => vec![(a1, b1), (a2, b2)],
        _ => return None,
    };
    let mut correct = true;
    let mut substituted = false;
    for (from, to) in pairs {
        if from == to {
            continue;
        }
        match (from, to) {
            (Operand::Var(v), Operand::Num(n)) => {
                substituted = true;
                correct &= values.get(v) == Some(n);
            }
            _ => return None,
        }
    }
    substituted.then_some(correct)
}

/// Per-line facts gathered in one forward pass.
#[derive(Debug, Clone)]
struct LineFacts {
    index: usize,
    line: DerivationLine,
    sound: bool,
    /// Indices of earlier same-lhs lines this line validly follows from.
    derived_from: Vec<usize>,
    /// `Some(correct)` when the line is its context equation with variables
    /// replaced by numerals and nothing else changed.
    context_substitution: Option<bool>,
    /// Both are direct, or both are additions.
    same_shape_as_context: bool,
}

fn analyze(q: &Question, predicted: &Prediction) -> Vec<LineFacts> {
    let answer = semantics::answer(q).ok();
    let mut values: HashMap<VarName, Numeral> = q
        .equations()
        .iter()
        .filter_map(|eq| Some((eq.lhs.clone(), eq.rhs.as_value()?)))
        .collect();
    let mut history: HashMap<VarName, Vec<(usize, DerivationLine)>> = HashMap::new();
    let parsed_count = predicted.parsed().count();
    let mut facts = Vec::new();
    let mut seen = 0;

    for (index, entry) in predicted.lines.iter().enumerate() {
        let PredictedLine::Line(line) = entry else {
            continue;
        };
        seen += 1;
        let context = q.definition(&line.lhs);
        let is_copy = context == Some(line);
        let derived_from: Vec<usize> = history
            .get(&line.lhs)
            .into_iter()
            .flatten()
            .filter(|(_, base)| single_substitution(base, line, &values) || is_result_of(base, line))
            .map(|(i, _)| *i)
            .collect();
        let answer_claim = seen == parsed_count
            && line.lhs == *q.target()
            && answer.is_some()
            && line.rhs.as_value() == answer;
        let context_substitution =
            context.and_then(|ctx| substitution_of(ctx, line, &values));
        let same_shape_as_context = context.is_some_and(|ctx| {
            matches!(
                (&ctx.rhs, &line.rhs),
                (Rhs::Direct(_), Rhs::Direct(_)) | (Rhs::Add(..), Rhs::Add(..))
            )
        });

        facts.push(LineFacts {
            index,
            line: line.clone(),
            sound: is_copy || !derived_from.is_empty() || answer_claim,
            derived_from,
            context_substitution,
            same_shape_as_context,
        });

        if let Some(v) = line.rhs.as_value() {
            values.insert(line.lhs.clone(), v);
        }
        history
            .entry(line.lhs.clone())
            .or_default()
            .push((index, line.clone()));
    }
    facts
}

fn same_multiset(predicted: &Prediction, gold: &Trace) -> bool {
    let mut counts: HashMap<&DerivationLine, isize> = HashMap::new();
    for line in &gold.lines {
        *counts.entry(line).or_default() += 1;
    }
    for line in predicted.parsed() {
        *counts.entry(line).or_default() -= 1;
    }
    !predicted.has_malformed() && counts.values().all(|&c| c == 0)
}

/// What an unsound line looks like before later lines are considered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Copy,
    Hasty,
    SkippedCopy,
    Unnamed,
}

fn shape_of(fact: &LineFacts, has_prior: bool) -> Shape {
    if has_prior {
        return if matches!(fact.line.rhs, Rhs::Add(..)) && fact.line.rhs.has_var() {
            Shape::Copy
        } else {
            Shape::Unnamed
        };
    }
    match fact.context_substitution {
        Some(true) => Shape::SkippedCopy,
        Some(false) => Shape::Hasty,
        None if fact.same_shape_as_context => Shape::Copy,
        None => Shape::Unnamed,
    }
}

fn taxonomy(q: &Question, gold: &Trace, facts: &[LineFacts]) -> Vec<ErrorClass> {
    let gold_vars: HashSet<&VarName> = gold.lines.iter().map(|l| &l.lhs).collect();
    let mut found = Vec::new();

    for (pos, fact) in facts.iter().enumerate() {
        let var = &fact.line.lhs;
        if !gold_vars.contains(var) {
            found.push(ErrorClass::NonAffectingError);
            continue;
        }
        if fact.sound {
            continue;
        }
        let has_prior = facts[..pos].iter().any(|f| f.line.lhs == *var);
        if fact.context_substitution == Some(true) && !has_prior {
            found.push(ErrorClass::MissingSteps);
            continue;
        }
        let context = q.definition(var);
        let mut later = facts[pos + 1..].iter().filter(|f| f.line.lhs == *var);
        // redone: a later line that is exactly what should have come here
        let redone = later.clone().any(|f| {
            Some(&f.line) == context || f.derived_from.iter().any(|&i| i < fact.index)
        });
        if redone {
            found.push(ErrorClass::IgnoringIncorrectStep);
            continue;
        }
        match shape_of(fact, has_prior) {
            Shape::Copy => {
                let next = later.next();
                let rescued = next.is_some_and(|f| {
                    f.context_substitution == Some(true) && !f.derived_from.contains(&fact.index)
                });
                found.push(if rescued {
                    ErrorClass::CorrectAssignment
                } else {
                    ErrorClass::CopyingError
                });
            }
            Shape::Hasty => found.push(ErrorClass::HastyAssignment),
            Shape::SkippedCopy => found.push(ErrorClass::MissingSteps),
            Shape::Unnamed => {}
        }
    }
    found
}

/// All error classes that apply, in priority order. Empty for a correct chain.
pub fn classify(q: &Question, gold: &Trace, predicted: &Prediction) -> Vec<ErrorClass> {
    check_chain(q, gold, predicted).errors
}

pub fn check_chain(q: &Question, gold: &Trace, predicted: &Prediction) -> Verdict {
    let answer_correct = check_answer(q, predicted);
    let facts = analyze(q, predicted);
    let all_sound = facts.iter().all(|f| f.sound);
    let chain_correct = answer_correct && all_sound && same_multiset(predicted, gold);

    let mut errors = Vec::new();
    if !chain_correct {
        errors = taxonomy(q, gold, &facts);
        if predicted.has_malformed() {
            errors.push(ErrorClass::Malformed);
        }
        if errors.is_empty() {
            errors.push(if answer_correct {
                ErrorClass::MissingSteps
            } else {
                ErrorClass::WrongAnswer
            });
        }
        errors.sort();
        errors.dedup();
    }

    Verdict {
        answer_correct,
        chain_correct,
        errors,
        first_bad_line: if chain_correct {
            None
        } else {
            first_bad_line(predicted, gold, &facts)
        },
        capped: false,
    }
}

fn first_bad_line(predicted: &Prediction, gold: &Trace, facts: &[LineFacts]) -> Option<usize> {
    let unsound = facts.iter().find(|f| !f.sound).map(|f| f.index);
    let malformed = predicted
        .lines
        .iter()
        .position(|l| matches!(l, PredictedLine::Malformed(_)));
    match (unsound, malformed) {
        (Some(a), Some(b)) => return Some(a.min(b)),
        (Some(a), None) | (None, Some(a)) => return Some(a),
        (None, None) => {}
    }
    // every line is sound; point at the first one gold has no room for
    let mut remaining: HashMap<&DerivationLine, usize> = HashMap::new();
    for line in &gold.lines {
        *remaining.entry(line).or_default() += 1;
    }
    for (i, entry) in predicted.lines.iter().enumerate() {
        if let PredictedLine::Line(line) = entry {
            match remaining.get_mut(line) {
                Some(n) if *n > 0 => *n -= 1,
                _ => return Some(i),
            }
        }
    }
    None
}
