//! Seeded instance sampling with exact depth control.
//!
//! Randomness comes from ChaCha8 (`rand_chacha` 0.3.1, seeded through
//! `SeedableRng::seed_from_u64`) with `rand` pinned at 0.8.5, so a seed
//! produces the same bytes on every platform. Split generation derives one
//! seed per instance with [`derive_seed`], which keeps parallel generation
//! order-independent.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chaining::{self, ChainingStrategy};
use crate::lang::{Equation, Numeral, Operand, Question, Rhs, Trace, VarName, MODULUS};
use crate::semantics::{self, SemanticsError};

/// Default number of distractors when none is fixed: uniform over this range.
pub const DEFAULT_DISTRACTORS: std::ops::RangeInclusive<usize> = 1..=3;

pub const TRAIN_DEPTHS: std::ops::RangeInclusive<usize> = 1..=5;
pub const TRAIN_PER_DEPTH: usize = 1000;
pub const TEST_DEPTHS: std::ops::RangeInclusive<usize> = 1..=12;
pub const TEST_PER_DEPTH: usize = 200;
pub const PRETRAIN_COUNT: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("depth {depth} plus {distractors} distractors needs more than {available} variable names")]
    AlphabetExhausted {
        depth: usize,
        distractors: usize,
        available: usize,
    },
    #[error("alphabet contains duplicate names")]
    DuplicateNames,
    #[error("per-depth count must be at least 1")]
    EmptySplit,
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    pub depth: usize,
    /// `None` samples uniformly from [`DEFAULT_DISTRACTORS`].
    pub distractors: Option<usize>,
    pub alphabet: Vec<VarName>,
}

impl GenConfig {
    pub fn new(seed: u64, depth: usize) -> Self {
        Self {
            seed,
            depth,
            distractors: None,
            alphabet: VarName::latin_alphabet(),
        }
    }

    pub fn with_distractors(mut self, distractors: usize) -> Self {
        self.distractors = Some(distractors);
        self
    }

    fn validate(&self) -> Result<(), GenError> {
        if self.depth == 0 {
            return Err(GenError::ZeroDepth);
        }
        let unique: HashSet<&VarName> = self.alphabet.iter().collect();
        if unique.len() != self.alphabet.len() {
            return Err(GenError::DuplicateNames);
        }
        let needed = self.depth + self.distractors.unwrap_or(0);
        if needed > self.alphabet.len() {
            return Err(GenError::AlphabetExhausted {
                depth: self.depth,
                distractors: self.distractors.unwrap_or(0),
                available: self.alphabet.len(),
            });
        }
        Ok(())
    }
}

/// A question with its answer, depth and one gold trace per chaining strategy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub id: String,
    pub question: Question,
    pub answer: Numeral,
    pub depth: usize,
    pub gold: BTreeMap<ChainingStrategy, Trace>,
}

impl Instance {
    /// Solves `question` and derives all gold traces.
    pub fn from_question(id: impl Into<String>, question: Question) -> Result<Self, SemanticsError> {
        let answer = semantics::answer(&question)?;
        let depth = semantics::depth_of(&question)?;
        let gold = ChainingStrategy::ALL
            .into_iter()
            .map(|s| Ok((s, chaining::trace(&question, s)?)))
            .collect::<Result<_, SemanticsError>>()?;
        Ok(Self {
            id: id.into(),
            question,
            answer,
            depth,
            gold,
        })
    }

    pub fn gold(&self, strategy: ChainingStrategy) -> &Trace {
        &self.gold[&strategy]
    }
}

fn numeral(rng: &mut impl Rng) -> Numeral {
    Numeral::reduce(rng.gen_range(0..MODULUS))
}

fn add_with_var(rng: &mut impl Rng, var: VarName) -> Rhs {
    let num = Operand::Num(numeral(rng));
    if rng.gen_bool(0.5) {
        Rhs::Add(Operand::Var(var), num)
    } else {
        Rhs::Add(num, Operand::Var(var))
    }
}

/// Samples one instance. The necessary chain is linear: `v1 = n1` and each
/// later `v_i` adds a fresh numeral to `v_{i-1}`. Distractors define fresh
/// variables that reference a numeral or any earlier variable, so nothing on
/// the chain can depend on them.
pub fn gen_instance(cfg: &GenConfig) -> Result<Instance, GenError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let distractors = match cfg.distractors {
        Some(n) => n,
        None => {
            let room = cfg.alphabet.len() - cfg.depth;
            let hi = (*DEFAULT_DISTRACTORS.end()).min(room);
            let lo = (*DEFAULT_DISTRACTORS.start()).min(hi);
            rng.gen_range(lo..=hi)
        }
    };

    let mut names = cfg.alphabet.clone();
    names.shuffle(&mut rng);
    names.truncate(cfg.depth + distractors);

    let mut equations = Vec::with_capacity(names.len());
    for (i, name) in names.iter().take(cfg.depth).enumerate() {
        let rhs = if i == 0 {
            Rhs::Direct(Operand::Num(numeral(&mut rng)))
        } else {
            add_with_var(&mut rng, names[i - 1].clone())
        };
        equations.push(Equation::new(name.clone(), rhs));
    }
    for (j, name) in names.iter().enumerate().skip(cfg.depth) {
        let rhs = if rng.gen_bool(0.5) {
            Rhs::Direct(Operand::Num(numeral(&mut rng)))
        } else {
            let referenced = names[rng.gen_range(0..j)].clone();
            add_with_var(&mut rng, referenced)
        };
        equations.push(Equation::new(name.clone(), rhs));
    }

    let target = names[cfg.depth - 1].clone();
    equations.shuffle(&mut rng);
    let question = Question::new(equations, target).expect("generated question is well formed");
    Ok(Instance::from_question(
        format!("{:016x}", cfg.seed),
        question,
    )?)
}

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `index`-th instance at `depth` under a split seed:
/// `splitmix64(seed ^ splitmix64(depth << 32 | index))`.
pub fn derive_seed(seed: u64, depth: usize, index: usize) -> u64 {
    splitmix64(seed ^ splitmix64(((depth as u64) << 32) | index as u64))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitConfig {
    pub seed: u64,
    pub depths: Vec<usize>,
    pub per_depth: usize,
    pub distractors: Option<usize>,
    pub alphabet: Vec<VarName>,
}

impl SplitConfig {
    pub fn new(seed: u64, depths: impl IntoIterator<Item = usize>, per_depth: usize) -> Self {
        Self {
            seed,
            depths: depths.into_iter().collect(),
            per_depth,
            distractors: None,
            alphabet: VarName::latin_alphabet(),
        }
    }

    pub fn train(seed: u64) -> Self {
        Self::new(seed, TRAIN_DEPTHS, TRAIN_PER_DEPTH)
    }

    pub fn test(seed: u64) -> Self {
        Self::new(seed, TEST_DEPTHS, TEST_PER_DEPTH)
    }
}

/// `per_depth` instances for each depth, grouped by depth in the listed order.
pub fn gen_split(seed: u64, depths: &[usize], per_depth: usize) -> Result<Vec<Instance>, GenError> {
    gen_split_with(&SplitConfig::new(seed, depths.iter().copied(), per_depth))
}

pub fn gen_split_with(cfg: &SplitConfig) -> Result<Vec<Instance>, GenError> {
    if cfg.per_depth == 0 {
        return Err(GenError::EmptySplit);
    }
    let jobs: Vec<(usize, usize)> = cfg
        .depths
        .iter()
        .flat_map(|&d| (0..cfg.per_depth).map(move |i| (d, i)))
        .collect();
    jobs.into_par_iter()
        .map(|(depth, index)| {
            let instance_cfg = GenConfig {
                seed: derive_seed(cfg.seed, depth, index),
                depth,
                distractors: cfg.distractors,
                alphabet: cfg.alphabet.clone(),
            };
            let mut instance = gen_instance(&instance_cfg)?;
            instance.id = format!("d{depth:02}-{index:05}");
            Ok(instance)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PretrainKind {
    /// `A=1, A?`
    AssignRefer,
    /// `A=1+3, A?`
    OperateAssignRefer,
}

/// `count` depth-1 instances without distractors, alternating assign-refer
/// and operate-assign-refer so that each kind makes up half.
pub fn gen_pretraining(seed: u64, count: usize) -> Result<Vec<Instance>, GenError> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let kind = if i % 2 == 0 {
                PretrainKind::AssignRefer
            } else {
                PretrainKind::OperateAssignRefer
            };
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, i));
            let names = VarName::latin_alphabet();
            let var = names.choose(&mut rng).expect("non-empty").clone();
            let rhs = match kind {
                PretrainKind::AssignRefer => Rhs::Direct(Operand::Num(numeral(&mut rng))),
                PretrainKind::OperateAssignRefer => Rhs::Add(
                    Operand::Num(numeral(&mut rng)),
                    Operand::Num(numeral(&mut rng)),
                ),
            };
            let question = Question::new(vec![Equation::new(var.clone(), rhs)], var)
                .expect("single equation question");
            Ok(Instance::from_question(format!("p-{i:05}"), question)?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_question;

    #[test]
    fn depth_and_size_follow_config() {
        let inst = gen_instance(&GenConfig::new(11, 3).with_distractors(1)).unwrap();
        assert_eq!(inst.question.equations().len(), 4);
        assert_eq!(semantics::depth_of(&inst.question).unwrap(), 3);
        assert_eq!(inst.depth, 3);
    }

    #[test]
    fn depth_one_without_distractors() {
        for seed in 0..20 {
            let inst = gen_instance(&GenConfig::new(seed, 1).with_distractors(0)).unwrap();
            assert_eq!(inst.question.equations().len(), 1);
            let eq = &inst.question.equations()[0];
            assert!(eq.is_value_line());
            assert_eq!(&eq.lhs, inst.question.target());
        }
    }

    #[test]
    fn unordered_shape_is_producible() {
        // depth 3 with one distractor hanging off a chain variable
        let unordered = parse_question("D=A+2, A=1, B=A+1, C=3+B, C?").unwrap();
        assert_eq!(semantics::depth_of(&unordered).unwrap(), 3);
        let found = (0..5000u64).any(|seed| {
            let inst = gen_instance(&GenConfig::new(seed, 3).with_distractors(1)).unwrap();
            let distractor = &semantics::distractors(&inst.question).unwrap()[0];
            let chain: Vec<_> = semantics::necessary_set(&inst.question)
                .unwrap()
                .into_iter()
                .map(|e| e.lhs)
                .collect();
            distractor
                .referenced_vars()
                .first()
                .is_some_and(|v| chain.contains(v))
                && inst.question.equations()[0] == *distractor
        });
        assert!(found);
    }

    #[test]
    fn config_errors() {
        assert_eq!(gen_instance(&GenConfig::new(0, 0)), Err(GenError::ZeroDepth));
        assert!(matches!(
            gen_instance(&GenConfig::new(0, 20).with_distractors(7)),
            Err(GenError::AlphabetExhausted { .. })
        ));
        let mut cfg = GenConfig::new(0, 2);
        cfg.alphabet = vec![VarName::new("A").unwrap(), VarName::new("A").unwrap()];
        assert_eq!(gen_instance(&cfg), Err(GenError::DuplicateNames));
        // the default distractor count shrinks to what the alphabet can hold
        assert!(gen_instance(&GenConfig::new(0, 26)).is_ok());
        assert_eq!(gen_split(0, &[1], 0), Err(GenError::EmptySplit));
    }

    #[test]
    fn reproducible() {
        let cfg = GenConfig::new(42, 7);
        assert_eq!(gen_instance(&cfg).unwrap(), gen_instance(&cfg).unwrap());
        assert_ne!(
            gen_instance(&cfg).unwrap().question,
            gen_instance(&GenConfig::new(43, 7)).unwrap().question
        );
    }

    #[test]
    fn split_sizes() {
        assert_eq!(gen_split(1, &[1, 2, 3, 4, 5], 40).unwrap().len(), 200);
        let one = gen_split(1, &[2], 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].depth, 2);
    }

    #[test]
    fn pretraining_kinds() {
        let items = gen_pretraining(3, 2).unwrap();
        assert_eq!(items.len(), 2);
        assert!(items[0].question.equations()[0].is_value_line());
        assert!(matches!(
            items[1].question.equations()[0].rhs,
            Rhs::Add(Operand::Num(_), Operand::Num(_))
        ));
        for inst in &items {
            assert_eq!(inst.depth, 1);
        }
        let q = parse_question("A=1+3, A?").unwrap();
        assert_eq!(semantics::answer(&q).unwrap().value(), 4);
    }
}
