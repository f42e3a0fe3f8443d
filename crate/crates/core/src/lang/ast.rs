use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::LangError;

/// Additions wrap at this modulus; every numeral is a residue.
pub const MODULUS: u32 = 100;

/// An uppercase variable name such as `A` or `AB`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarName(String);

impl VarName {
    pub fn new(name: impl Into<String>) -> Result<Self, LangError> {
        let name = name.into();
        if name.is_empty() || !name.bytes().all(|b| b.is_ascii_uppercase()) {
            return Err(LangError::InvalidName(name));
        }
        Ok(Self(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The single-letter pool `A..=Z` used by the generator by default.
    pub fn latin_alphabet() -> Vec<VarName> {
        (b'A'..=b'Z').map(|b| VarName((b as char).to_string())).collect()
    }
}

impl fmt::Display for VarName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A residue in `0..=99`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Numeral(u8);

impl Numeral {
    pub fn new(value: u32) -> Option<Self> {
        (value < MODULUS).then_some(Self(value as u8))
    }

    /// Reduces any integer to its residue.
    pub fn reduce(value: u32) -> Self {
        Self((value % MODULUS) as u8)
    }

    pub fn value(self) -> u32 {
        u32::from(self.0)
    }
}

impl std::ops::Add for Numeral {
    type Output = Numeral;

    fn add(self, other: Numeral) -> Numeral {
        Numeral::reduce(self.value() + other.value())
    }
}

impl fmt::Display for Numeral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Numeral {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.0)
    }
}

impl<'de> Deserialize<'de> for Numeral {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = u32::deserialize(deserializer)?;
        Numeral::new(raw)
            .ok_or_else(|| serde::de::Error::custom(format!("numeral {raw} outside 0..=99")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operand {
    Num(Numeral),
    Var(VarName),
}

impl Operand {
    pub fn as_var(&self) -> Option<&VarName> {
        match self {
            Operand::Var(v) => Some(v),
            Operand::Num(_) => None,
        }
    }

    pub fn as_num(&self) -> Option<Numeral> {
        match self {
            Operand::Num(n) => Some(*n),
            Operand::Var(_) => None,
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Num(n) => n.fmt(f),
            Operand::Var(v) => v.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rhs {
    Direct(Operand),
    Add(Operand, Operand),
}

impl Rhs {
    pub fn operands(&self) -> Vec<&Operand> {
        match self {
            Rhs::Direct(o) => vec![o],
            Rhs::Add(l, r) => vec![l, r],
        }
    }

    pub fn operands_mut(&mut self) -> Vec<&mut Operand> {
        match self {
            Rhs::Direct(o) => vec![o],
            Rhs::Add(l, r) => vec![l, r],
        }
    }

    pub fn has_var(&self) -> bool {
        self.operands().iter().any(|o| o.as_var().is_some())
    }

    /// The value of a direct numeral, e.g. the `8` of `C=8`.
    pub fn as_value(&self) -> Option<Numeral> {
        match self {
            Rhs::Direct(Operand::Num(n)) => Some(*n),
            _ => None,
        }
    }

    /// Evaluates a variable-free rhs.
    pub fn numeric_value(&self) -> Option<Numeral> {
        match self {
            Rhs::Direct(o) => o.as_num(),
            Rhs::Add(l, r) => Some(l.as_num()? + r.as_num()?),
        }
    }
}

impl fmt::Display for Rhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rhs::Direct(o) => o.fmt(f),
            Rhs::Add(l, r) => write!(f, "{l}+{r}"),
        }
    }
}

/// `lhs = rhs`. Used both for question context and for reasoning lines.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Equation {
    pub lhs: VarName,
    pub rhs: Rhs,
}

/// A reasoning line has the same shape as a context equation; its role
/// (copy, substitution, result) is decided by the verifier.
pub type DerivationLine = Equation;

impl Equation {
    pub fn new(lhs: VarName, rhs: Rhs) -> Self {
        Self { lhs, rhs }
    }

    pub fn direct(lhs: VarName, value: Numeral) -> Self {
        Self::new(lhs, Rhs::Direct(Operand::Num(value)))
    }

    pub fn referenced_vars(&self) -> Vec<&VarName> {
        self.rhs.operands().into_iter().filter_map(Operand::as_var).collect()
    }

    /// `X=n` with a literal numeral.
    pub fn is_value_line(&self) -> bool {
        self.rhs.as_value().is_some()
    }

    pub fn var_operand_count(&self) -> usize {
        self.referenced_vars().len()
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.lhs, self.rhs)
    }
}

/// Ordered equations plus the variable asked for.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Question {
    equations: Vec<Equation>,
    target: VarName,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SemanticError {
    #[error("variable {0} is defined more than once")]
    DuplicateDefinition(VarName),
    #[error("variable {var} referenced in `{equation}` is never defined")]
    UndefinedReference { var: VarName, equation: String },
    #[error("target {0} has no defining equation")]
    MissingTarget(VarName),
    #[error("equation `{0}` refers to its own left-hand side")]
    SelfReference(String),
    #[error("a question needs at least one equation")]
    Empty,
}

impl Question {
    pub fn new(equations: Vec<Equation>, target: VarName) -> Result<Self, SemanticError> {
        if equations.is_empty() {
            return Err(SemanticError::Empty);
        }
        let mut defined = HashSet::new();
        for eq in &equations {
            if !defined.insert(&eq.lhs) {
                return Err(SemanticError::DuplicateDefinition(eq.lhs.clone()));
            }
        }
        for eq in &equations {
            for v in eq.referenced_vars() {
                if *v == eq.lhs {
                    return Err(SemanticError::SelfReference(eq.to_string()));
                }
                if !defined.contains(v) {
                    return Err(SemanticError::UndefinedReference {
                        var: v.clone(),
                        equation: eq.to_string(),
                    });
                }
            }
        }
        if !defined.contains(&target) {
            return Err(SemanticError::MissingTarget(target));
        }
        Ok(Self { equations, target })
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    pub fn target(&self) -> &VarName {
        &self.target
    }

    pub fn definition(&self, var: &VarName) -> Option<&Equation> {
        self.equations.iter().find(|eq| eq.lhs == *var)
    }

    pub fn position(&self, var: &VarName) -> Option<usize> {
        self.equations.iter().position(|eq| eq.lhs == *var)
    }

    pub fn target_equation(&self) -> &Equation {
        self.definition(&self.target)
            .expect("target definition checked at construction")
    }
}

impl fmt::Display for Question {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for eq in &self.equations {
            write!(f, "{eq}, ")?;
        }
        write!(f, "{}?", self.target)
    }
}

/// An ordered list of reasoning lines.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Trace {
    pub lines: Vec<DerivationLine>,
}

impl Trace {
    pub fn new(lines: Vec<DerivationLine>) -> Self {
        Self { lines }
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn last(&self) -> Option<&DerivationLine> {
        self.lines.last()
    }
}

impl fmt::Display for Trace {
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

macro_rules! string_serde {
    ($ty:ty, $parse:path) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let text = String::deserialize(deserializer)?;
                $parse(&text).map_err(serde::de::Error::custom)
            }
        }

        impl std::str::FromStr for $ty {
            type Err = LangError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                $parse(s)
            }
        }
    };
}

string_serde!(Question, super::parse_question);
string_serde!(Equation, super::parse_line);
string_serde!(Trace, super::parse_trace);
string_serde!(VarName, VarName::new);
