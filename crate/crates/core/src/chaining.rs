//! Gold-trace engines.
//!
//! Each strategy first produces a *schedule*, a list of [`Step`]s that only
//! depends on the question's structure, and [`realize`] then turns the
//! schedule into concrete lines. Every equation expands the same way:
//!
//! * a copy line, the context equation verbatim;
//! * one substitution line per variable operand, left to right;
//! * a result line `X=v` (mod 100) when the rhs is an addition.
//!
//! A direct assignment `X=n` therefore expands to its copy line only.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::lang::{DerivationLine, Equation, Numeral, Operand, Question, Rhs, Trace, VarName};
use crate::semantics::{self, SemanticsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainingStrategy {
    Shortest,
    Exhaustive,
    Backward,
    None,
}

impl ChainingStrategy {
    pub const ALL: [ChainingStrategy; 4] = [
        ChainingStrategy::Shortest,
        ChainingStrategy::Exhaustive,
        ChainingStrategy::Backward,
        ChainingStrategy::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChainingStrategy::Shortest => "shortest",
            ChainingStrategy::Exhaustive => "exhaustive",
            ChainingStrategy::Backward => "backward",
            ChainingStrategy::None => "none",
        }
    }
}

impl fmt::Display for ChainingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChainingStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown chaining strategy {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Copy,
    /// Replace the leftmost remaining variable operand by its value.
    Substitute,
    Result,
    /// The bare `TARGET=answer` line of the no-chaining baseline.
    Answer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    /// Index into the question's equation list.
    pub equation: usize,
    pub kind: StepKind,
}

fn expansion(index: usize, eq: &Equation) -> Vec<Step> {
    let mut steps = vec![Step {
        equation: index,
        kind: StepKind::Copy,
    }];
    steps.extend((0..eq.var_operand_count()).map(|_| Step {
        equation: index,
        kind: StepKind::Substitute,
    }));
    if matches!(eq.rhs, Rhs::Add(..)) {
        steps.push(Step {
            equation: index,
            kind: StepKind::Result,
        });
    }
    steps
}

pub fn schedule(q: &Question, strategy: ChainingStrategy) -> Result<Vec<Step>, SemanticsError> {
    match strategy {
        ChainingStrategy::Shortest => shortest_schedule(q),
        ChainingStrategy::Exhaustive => exhaustive_schedule(q),
        ChainingStrategy::Backward => backward_schedule(q),
        ChainingStrategy::None => {
            semantics::answer(q)?;
            let target = q.position(q.target()).expect("target defined");
            Ok(vec![Step {
                equation: target,
                kind: StepKind::Answer,
            }])
        }
    }
}

fn shortest_schedule(q: &Question) -> Result<Vec<Step>, SemanticsError> {
    Ok(semantics::necessary_indices(q)?
        .into_iter()
        .flat_map(|i| expansion(i, &q.equations()[i]))
        .collect())
}

/// Leftmost-solvable sweep that restarts from the first equation after every
/// solve and halts once the target is solved.
fn exhaustive_schedule(q: &Question) -> Result<Vec<Step>, SemanticsError> {
    let eqs = q.equations();
    let mut solved: HashSet<&VarName> = HashSet::new();
    let mut steps = Vec::new();
    while !solved.contains(q.target()) {
        let next = eqs
            .iter()
            .position(|eq| {
                !solved.contains(&eq.lhs) && eq.referenced_vars().iter().all(|v| solved.contains(v))
            })
            .ok_or_else(|| SemanticsError::Unsolvable(q.target().clone()))?;
        steps.extend(expansion(next, &eqs[next]));
        solved.insert(&eqs[next].lhs);
    }
    Ok(steps)
}

/// Copies from the target down to the base, then solves base-first without
/// repeating copies.
fn backward_schedule(q: &Question) -> Result<Vec<Step>, SemanticsError> {
    let order = semantics::necessary_indices(q)?;
    let mut steps: Vec<Step> = order
        .iter()
        .rev()
        .map(|&i| Step {
            equation: i,
            kind: StepKind::Copy,
        })
        .collect();
    for &i in &order {
        steps.extend(
            expansion(i, &q.equations()[i])
                .into_iter()
                .filter(|s| s.kind != StepKind::Copy),
        );
    }
    Ok(steps)
}

/// Turns a schedule into lines, tracking each variable's latest line and
/// every value established so far.
pub fn realize(q: &Question, steps: &[Step]) -> Result<Trace, SemanticsError> {
    let mut current: HashMap<VarName, DerivationLine> = HashMap::new();
    let mut values: HashMap<VarName, Numeral> = HashMap::new();
    let mut lines = Vec::with_capacity(steps.len());
    for step in steps {
        let eq = &q.equations()[step.equation];
        let line = match step.kind {
            StepKind::Copy => eq.clone(),
            StepKind::Substitute => {
                let mut line = current.get(&eq.lhs).cloned().unwrap_or_else(|| eq.clone());
                substitute_leftmost(&mut line, &values);
                line
            }
            StepKind::Result => {
                let line = current.get(&eq.lhs).unwrap_or(eq);
                let value = line
                    .rhs
                    .numeric_value()
                    .ok_or_else(|| SemanticsError::Unsolvable(eq.lhs.clone()))?;
                Equation::direct(eq.lhs.clone(), value)
            }
            StepKind::Answer => Equation::direct(eq.lhs.clone(), semantics::answer(q)?),
        };
        if let Some(v) = line.rhs.as_value() {
            values.insert(line.lhs.clone(), v);
        }
        current.insert(line.lhs.clone(), line.clone());
        lines.push(line);
    }
    Ok(Trace::new(lines))
}

fn substitute_leftmost(line: &mut DerivationLine, values: &HashMap<VarName, Numeral>) {
    for op in line.rhs.operands_mut() {
        if let Operand::Var(v) = op {
            if let Some(value) = values.get(v) {
                *op = Operand::Num(*value);
                return;
            }
        }
    }
}

pub fn trace(q: &Question, strategy: ChainingStrategy) -> Result<Trace, SemanticsError> {
    realize(q, &schedule(q, strategy)?)
}

pub fn shortest_trace(q: &Question) -> Result<Trace, SemanticsError> {
    trace(q, ChainingStrategy::Shortest)
}

pub fn exhaustive_trace(q: &Question) -> Result<Trace, SemanticsError> {
    trace(q, ChainingStrategy::Exhaustive)
}

pub fn backward_trace(q: &Question) -> Result<Trace, SemanticsError> {
    trace(q, ChainingStrategy::Backward)
}

pub fn none_trace(q: &Question) -> Result<Trace, SemanticsError> {
    trace(q, ChainingStrategy::None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_question;

    const UNORDERED: &str = "D=A+2, A=1, B=A+1, C=3+B, C?";
    const DISTRACTED: &str = "A=1, C=5+B, B=2+A, D=3+A, C?";

    fn render(strategy: ChainingStrategy, question: &str) -> String {
        trace(&parse_question(question).unwrap(), strategy)
            .unwrap()
            .to_string()
    }

    #[test]
    fn shortest_traces() {
        use ChainingStrategy::Shortest;
        assert_eq!(
            render(Shortest, DISTRACTED),
            "A=1, B=2+A, B=2+1, B=3, C=5+B, C=5+3, C=8"
        );
        assert_eq!(render(Shortest, "A=1, A?"), "A=1");
        assert_eq!(
            render(Shortest, UNORDERED),
            "A=1, B=A+1, B=1+1, B=2, C=3+B, C=3+2, C=5"
        );
        assert_eq!(render(Shortest, "A=1, B=2+A, B?"), "A=1, B=2+A, B=2+1, B=3");
    }

    #[test]
    fn exhaustive_traces() {
        use ChainingStrategy::Exhaustive;
        assert_eq!(
            render(Exhaustive, UNORDERED),
            "A=1, D=A+2, D=1+2, D=3, B=A+1, B=1+1, B=2, C=3+B, C=3+2, C=5"
        );
        // the sweep restarts after B, so C (position 2) wins over D (position 4)
        assert_eq!(
            render(Exhaustive, DISTRACTED),
            "A=1, B=2+A, B=2+1, B=3, C=5+B, C=5+3, C=8"
        );
        let plain = "A=1, B=2+A, C=3+B, C?";
        assert_eq!(
            render(Exhaustive, plain),
            render(ChainingStrategy::Shortest, plain)
        );
    }

    #[test]
    fn backward_traces() {
        use ChainingStrategy::Backward;
        assert_eq!(
            render(Backward, UNORDERED),
            "C=3+B, B=A+1, A=1, B=1+1, B=2, C=3+2, C=5"
        );
        assert_eq!(render(Backward, "A=1, A?"), "A=1");
        assert_eq!(
            render(Backward, DISTRACTED),
            "C=5+B, B=2+A, A=1, B=2+1, B=3, C=5+3, C=8"
        );
        // a numeral-only base is a known value: its result comes in phase two
        assert_eq!(render(Backward, "A=1+3, A?"), "A=1+3, A=4");
    }

    #[test]
    fn none_traces() {
        use ChainingStrategy::None;
        assert_eq!(render(None, UNORDERED), "C=5");
        assert_eq!(render(None, "A=1, A?"), "A=1");
        assert_eq!(render(None, "A=1, B=2+A, C=3+B, D=2, C?"), "C=6");
    }

    #[test]
    fn wraps_mod_100() {
        assert_eq!(
            render(ChainingStrategy::Shortest, "A=99, B=3+A, B?"),
            "A=99, B=3+A, B=3+99, B=2"
        );
    }

    #[test]
    fn two_variable_operands_substitute_one_at_a_time() {
        assert_eq!(
            render(ChainingStrategy::Shortest, "A=1, B=4, C=A+B, C?"),
            "A=1, B=4, C=A+B, C=1+B, C=1+4, C=5"
        );
        assert_eq!(
            render(ChainingStrategy::Shortest, "A=7, B=A, B?"),
            "A=7, B=A, B=7"
        );
    }

    #[test]
    fn unsolvable_target() {
        let q = parse_question("A=B+1, B=A+1, C=1, A?").unwrap();
        for s in ChainingStrategy::ALL {
            assert!(matches!(trace(&q, s), Err(SemanticsError::Unsolvable(_))));
        }
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in ChainingStrategy::ALL {
            assert_eq!(s.name().parse::<ChainingStrategy>().unwrap(), s);
        }
        assert!("forward".parse::<ChainingStrategy>().is_err());
    }
}
