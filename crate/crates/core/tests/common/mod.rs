#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use symchain::lang::{DerivationLine, Operand, Question, Rhs, Trace};

/// Evaluates question text by string splitting and repeated passes, without
/// the crate's parser or solver. Returns every value and the target name.
pub fn naive_solve(text: &str) -> (HashMap<String, u32>, String) {
    let parts: Vec<&str> = text.split(", ").collect();
    let (target, equations) = parts.split_last().expect("non-empty");
    let target = target.trim_end_matches('?').to_string();
    let equations: Vec<(String, Vec<String>)> = equations
        .iter()
        .map(|eq| {
            let (lhs, rhs) = eq.split_once('=').expect("equation");
            (lhs.to_string(), rhs.split('+').map(str::to_string).collect())
        })
        .collect();
    let mut values: HashMap<String, u32> = HashMap::new();
    loop {
        let mut changed = false;
        for (lhs, operands) in &equations {
            if values.contains_key(lhs) {
                continue;
            }
            let resolved: Option<Vec<u32>> = operands
                .iter()
                .map(|op| op.parse::<u32>().ok().or_else(|| values.get(op).copied()))
                .collect();
            if let Some(nums) = resolved {
                values.insert(lhs.clone(), nums.iter().sum::<u32>() % 100);
                changed = true;
            }
        }
        if !changed {
            return (values, target);
        }
    }
}

/// Number of equations the target transitively depends on, itself included.
pub fn naive_depth(text: &str) -> usize {
    let parts: Vec<&str> = text.split(", ").collect();
    let (target, equations) = parts.split_last().expect("non-empty");
    let defs: HashMap<&str, Vec<&str>> = equations
        .iter()
        .map(|eq| {
            let (lhs, rhs) = eq.split_once('=').expect("equation");
            (
                lhs,
                rhs.split('+')
                    .filter(|op| op.parse::<u32>().is_err())
                    .collect(),
            )
        })
        .collect();
    let mut seen = HashSet::new();
    let mut stack = vec![target.trim_end_matches('?')];
    while let Some(v) = stack.pop() {
        if seen.insert(v) {
            stack.extend(defs[v].iter().copied());
        }
    }
    seen.len()
}

/// Indices of the lines each gold line depends on: the previous line with the
/// same lhs, and the line establishing each variable it substitutes.
fn line_dependencies(q: &Question, gold: &Trace) -> Vec<Vec<usize>> {
    let mut last: HashMap<&str, usize> = HashMap::new();
    let mut value_line: HashMap<String, usize> = HashMap::new();
    let mut deps = Vec::new();
    for (i, line) in gold.lines.iter().enumerate() {
        let mut d = Vec::new();
        if let Some(&prev) = last.get(line.lhs.as_str()) {
            d.push(prev);
            let before = &gold.lines[prev];
            for (from, to) in before.rhs.operands().iter().zip(line.rhs.operands()) {
                if let (Operand::Var(v), Operand::Num(_)) = (from, to) {
                    if let Some(&j) = value_line.get(v.as_str()) {
                        d.push(j);
                    }
                }
            }
        }
        if line.rhs.as_value().is_some() {
            value_line.insert(line.lhs.to_string(), i);
        }
        last.insert(line.lhs.as_str(), i);
        deps.push(d);
    }
    let _ = q;
    deps
}

/// A random order of `gold` that keeps every dependency and the answer line last.
pub fn dependency_shuffle(q: &Question, gold: &Trace, rng: &mut impl Rng) -> Trace {
    let n = gold.lines.len();
    if n <= 1 {
        return gold.clone();
    }
    let deps = line_dependencies(q, gold);
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n - 1 {
        let ready: Vec<usize> = (0..n - 1)
            .filter(|&i| !placed[i] && deps[i].iter().all(|&d| placed[d]))
            .collect();
        let &pick = ready.choose(rng).expect("acyclic");
        placed[pick] = true;
        order.push(pick);
    }
    order.push(n - 1);
    Trace::new(order.into_iter().map(|i| gold.lines[i].clone()).collect())
}

/// Replaces one numeral somewhere in the trace with a different one.
pub fn mutate_numeral(trace: &Trace, rng: &mut impl Rng) -> Option<Trace> {
    let candidates: Vec<(usize, usize)> = trace
        .lines
        .iter()
        .enumerate()
        .flat_map(|(i, l)| {
            l.rhs
                .operands()
                .into_iter()
                .enumerate()
                .filter(|(_, op)| op.as_num().is_some())
                .map(move |(j, _)| (i, j))
                .collect::<Vec<_>>()
        })
        .collect();
    let &(i, j) = candidates.choose(rng)?;
    let mut lines: Vec<DerivationLine> = trace.lines.clone();
    let op = lines[i].rhs.operands_mut().into_iter().nth(j).expect("operand");
    if let Operand::Num(n) = *op {
        let shift = symchain::Numeral::reduce(rng.gen_range(1..100));
        *op = Operand::Num(n + shift);
    }
    Some(Trace::new(lines))
}

pub fn is_add(rhs: &Rhs) -> bool {
    matches!(rhs, Rhs::Add(..))
}
