//! Dependency analysis and the brute-force evaluation oracle.
//!
//! [`fixpoint_eval`] is deliberately naive: it sweeps the equation list,
//! resolving whatever has known operands, until a sweep makes no progress.
//! Every trace engine and the verifier are checked against it.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::lang::{Equation, Numeral, Operand, Question, VarName};

pub type Valuation = BTreeMap<VarName, Numeral>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SemanticsError {
    #[error("cyclic references among {}", join(.0))]
    Cycle(Vec<VarName>),
    #[error("target {0} cannot be solved")]
    Unsolvable(VarName),
}

fn join(vars: &[VarName]) -> String {
    vars.iter().map(VarName::as_str).collect::<Vec<_>>().join(", ")
}

/// Nodes are defined variables; an edge `(user, used)` means `used` occurs in
/// the right-hand side of `user`'s equation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    pub nodes: Vec<VarName>,
    pub edges: BTreeSet<(VarName, VarName)>,
}

impl DependencyGraph {
    pub fn dependencies<'a>(&'a self, var: &'a VarName) -> impl Iterator<Item = &'a VarName> + 'a {
        self.edges
            .iter()
            .filter(move |(user, _)| user == var)
            .map(|(_, used)| used)
    }
}

pub fn build_graph(q: &Question) -> Result<DependencyGraph, SemanticsError> {
    let nodes: Vec<VarName> = q.equations().iter().map(|eq| eq.lhs.clone()).collect();
    let edges: BTreeSet<(VarName, VarName)> = q
        .equations()
        .iter()
        .flat_map(|eq| {
            eq.referenced_vars()
                .into_iter()
                .map(move |used| (eq.lhs.clone(), used.clone()))
        })
        .collect();
    let graph = DependencyGraph { nodes, edges };
    if let Some(cycle) = find_cycle(&graph) {
        return Err(SemanticsError::Cycle(cycle));
    }
    Ok(graph)
}

fn find_cycle(graph: &DependencyGraph) -> Option<Vec<VarName>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    fn visit(
        graph: &DependencyGraph,
        var: &VarName,
        marks: &mut BTreeMap<VarName, Mark>,
        stack: &mut Vec<VarName>,
    ) -> Option<Vec<VarName>> {
        match marks.get(var) {
            Some(Mark::Done) => return None,
            Some(Mark::Open) => {
                let start = stack.iter().position(|v| v == var).unwrap_or(0);
                return Some(stack[start..].to_vec());
            }
            None => {}
        }
        marks.insert(var.clone(), Mark::Open);
        stack.push(var.clone());
        for dep in graph.dependencies(var) {
            if let Some(cycle) = visit(graph, dep, marks, stack) {
                return Some(cycle);
            }
        }
        stack.pop();
        marks.insert(var.clone(), Mark::Done);
        None
    }

    let mut marks = BTreeMap::new();
    for node in &graph.nodes {
        let mut stack = Vec::new();
        if let Some(cycle) = visit(graph, node, &mut marks, &mut stack) {
            return Some(cycle);
        }
    }
    None
}

fn operand_value(op: &Operand, values: &Valuation) -> Option<Numeral> {
    match op {
        Operand::Num(n) => Some(*n),
        Operand::Var(v) => values.get(v).copied(),
    }
}

/// Value of `eq` under `values`, if every operand is known.
pub fn evaluate_equation(eq: &Equation, values: &Valuation) -> Option<Numeral> {
    let mut sum = 0;
    for op in eq.rhs.operands() {
        sum += operand_value(op, values)?.value();
    }
    Some(Numeral::reduce(sum))
}

/// Everything solvable, leaving cyclic variables out.
pub fn solve_partial(q: &Question) -> Valuation {
    let mut values = Valuation::new();
    loop {
        let mut progressed = false;
        for eq in q.equations() {
            if values.contains_key(&eq.lhs) {
                continue;
            }
            if let Some(v) = evaluate_equation(eq, &values) {
                values.insert(eq.lhs.clone(), v);
                progressed = true;
            }
        }
        if !progressed {
            return values;
        }
    }
}

/// Solves every variable; any leftover variable can only be caught in a cycle.
pub fn fixpoint_eval(q: &Question) -> Result<Valuation, SemanticsError> {
    let values = solve_partial(q);
    let unresolved: Vec<VarName> = q
        .equations()
        .iter()
        .filter(|eq| !values.contains_key(&eq.lhs))
        .map(|eq| eq.lhs.clone())
        .collect();
    if unresolved.is_empty() {
        Ok(values)
    } else {
        Err(SemanticsError::Cycle(unresolved))
    }
}

pub fn answer(q: &Question) -> Result<Numeral, SemanticsError> {
    solve_partial(q)
        .get(q.target())
        .copied()
        .ok_or_else(|| SemanticsError::Unsolvable(q.target().clone()))
}

/// Indices of the equations backward-reachable from the target, base-first.
/// Ties between independent equations go to the earlier input position.
pub fn necessary_indices(q: &Question) -> Result<Vec<usize>, SemanticsError> {
    answer(q)?;
    let mut needed: HashSet<&VarName> = HashSet::new();
    let mut stack = vec![q.target()];
    while let Some(var) = stack.pop() {
        if needed.insert(var) {
            let eq = q.definition(var).expect("question references are defined");
            stack.extend(eq.referenced_vars());
        }
    }

    let mut order = Vec::with_capacity(needed.len());
    let mut placed: HashSet<&VarName> = HashSet::new();
    while order.len() < needed.len() {
        let next = q
            .equations()
            .iter()
            .enumerate()
            .find(|(_, eq)| {
                needed.contains(&eq.lhs)
                    && !placed.contains(&eq.lhs)
                    && eq.referenced_vars().iter().all(|v| placed.contains(v))
            })
            .map(|(i, _)| i)
            .ok_or_else(|| SemanticsError::Unsolvable(q.target().clone()))?;
        placed.insert(&q.equations()[next].lhs);
        order.push(next);
    }
    Ok(order)
}

pub fn necessary_set(q: &Question) -> Result<Vec<Equation>, SemanticsError> {
    Ok(necessary_indices(q)?
        .into_iter()
        .map(|i| q.equations()[i].clone())
        .collect())
}

/// Equations not needed for the target, in input order.
pub fn distractors(q: &Question) -> Result<Vec<Equation>, SemanticsError> {
    let needed: HashSet<usize> = necessary_indices(q)?.into_iter().collect();
    Ok(q.equations()
        .iter()
        .enumerate()
        .filter(|(i, _)| !needed.contains(i))
        .map(|(_, eq)| eq.clone())
        .collect())
}

/// Number of equations needed to reach the target, its own included.
pub fn depth_of(q: &Question) -> Result<usize, SemanticsError> {
    Ok(necessary_indices(q)?.len())
}
