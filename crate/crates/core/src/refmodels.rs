//! In-process stand-ins for a trained model.
//!
//! * [`PerfectModel`] answers with the exact next unit of the gold trace.
//! * [`FaultyModel`] wraps another model and injects copying errors, hasty
//!   assignments and missing answers at configurable rates.
//! * [`GarbageModel`] returns seeded junk, for exercising the harness.
//!
//! All of them re-derive the question from the request input, so they work
//! over any transport.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chaining::{self, ChainingStrategy};
use crate::harness::{ModelPort, ModelRequest, ModelResponse, TransportError};
use crate::lang::{
    parse_question, parse_trace, tokenize, DerivationLine, Equation, Numeral, Operand, Question,
    Rhs, Trace, VarName, MODULUS,
};
use crate::rendering::{split_context, OutputStrategy};

/// A full output together with its line and token units.
#[derive(Debug, Clone)]
struct Script {
    full: String,
    lines: Vec<String>,
    tokens: Vec<String>,
}

impl Script {
    fn new(trace: &Trace) -> Self {
        let full = trace.to_string();
        let tokens = tokenize(&full)
            .expect("traces lex")
            .into_iter()
            .map(|t| t.text)
            .collect();
        Self {
            lines: trace.lines.iter().map(ToString::to_string).collect(),
            full,
            tokens,
        }
    }

    /// The unit that follows the chain already in `request.input`.
    fn next(&self, request: &ModelRequest) -> ModelResponse {
        let chain = split_context(&request.input).1.unwrap_or("");
        let output = match request.mode {
            OutputStrategy::AllAtOnce => self.full.clone(),
            OutputStrategy::StepByStep => {
                let done = match parse_trace(chain) {
                    Ok(t) => t.len(),
                    Err(e) => return ModelResponse::failed(&request.id, e),
                };
                // past the end the answer line is repeated
                self.lines
                    .get(done)
                    .or(self.lines.last())
                    .cloned()
                    .unwrap_or_default()
            }
            OutputStrategy::TokenByToken => {
                let done = match tokenize(chain) {
                    Ok(t) => t.len(),
                    Err(e) => return ModelResponse::failed(&request.id, e),
                };
                // past the end: the empty end-of-output marker
                self.tokens.get(done).cloned().unwrap_or_default()
            }
        };
        ModelResponse::ok(&request.id, output)
    }
}

fn question_of(request: &ModelRequest) -> Result<Question, ModelResponse> {
    parse_question(split_context(&request.input).0)
        .map_err(|e| ModelResponse::failed(&request.id, format!("undecodable context: {e}")))
}

/// Replays gold traces for one chaining strategy.
#[derive(Debug, Clone)]
pub struct PerfectModel {
    chaining: ChainingStrategy,
    cache: HashMap<String, Script>,
}

impl PerfectModel {
    pub fn new(chaining: ChainingStrategy) -> Self {
        Self {
            chaining,
            cache: HashMap::new(),
        }
    }

    pub fn chaining(&self) -> ChainingStrategy {
        self.chaining
    }

    fn respond(&mut self, request: &ModelRequest) -> ModelResponse {
        let key = split_context(&request.input).0.to_string();
        if !self.cache.contains_key(&key) {
            let q = match question_of(request) {
                Ok(q) => q,
                Err(r) => return r,
            };
            let trace = match chaining::trace(&q, self.chaining) {
                Ok(t) => t,
                Err(e) => return ModelResponse::failed(&request.id, e),
            };
            self.cache.insert(key.clone(), Script::new(&trace));
        }
        self.cache[&key].next(request)
    }
}

impl ModelPort for PerfectModel {
    fn call(&mut self, request: &ModelRequest) -> Result<ModelResponse, TransportError> {
        Ok(self.respond(request))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultConfig {
    /// Chance that a copy line gets one numeral changed.
    pub p_copy: f64,
    /// Chance that an equation with a variable operand skips its copy and
    /// substitutes a wrong value.
    pub p_hasty: f64,
    /// Chance that the final answer line is left out.
    pub p_skip_answer: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("probability {name} = {value} is outside [0, 1]")]
pub struct FaultConfigError {
    pub name: &'static str,
    pub value: f64,
}

impl FaultConfig {
    pub fn new(p_copy: f64, p_hasty: f64, p_skip_answer: f64, seed: u64) -> Result<Self, FaultConfigError> {
        for (name, value) in [
            ("p_copy", p_copy),
            ("p_hasty", p_hasty),
            ("p_skip_answer", p_skip_answer),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(FaultConfigError { name, value });
            }
        }
        Ok(Self {
            p_copy,
            p_hasty,
            p_skip_answer,
            seed,
        })
    }

    pub fn is_clean(&self) -> bool {
        self.p_copy == 0.0 && self.p_hasty == 0.0 && self.p_skip_answer == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Copy,
    Substitute,
    Result,
    Answer,
}

/// Reads each line's role off a well-formed trace.
fn roles(q: &Question, trace: &Trace) -> Vec<Role> {
    let mut previous: HashMap<&VarName, &DerivationLine> = HashMap::new();
    trace
        .lines
        .iter()
        .map(|line| {
            let role = match previous.get(&line.lhs) {
                None if q.definition(&line.lhs) == Some(line) => Role::Copy,
                None => Role::Answer,
                Some(prev) if line.rhs.as_value().is_some() && prev.rhs.numeric_value().is_some() => {
                    Role::Result
                }
                Some(_) => Role::Substitute,
            };
            previous.insert(&line.lhs, line);
            role
        })
        .collect()
}

fn other_numeral(rng: &mut impl Rng, n: Numeral) -> Numeral {
    n + Numeral::reduce(rng.gen_range(1..MODULUS))
}

/// Rebuilds `trace` line by line, injecting faults so that every later line
/// stays consistent with what was actually emitted.
fn corrupt(q: &Question, trace: &Trace, cfg: &FaultConfig, rng: &mut impl Rng) -> Trace {
    let mut current: HashMap<VarName, Equation> = HashMap::new();
    let mut values: HashMap<VarName, Numeral> = HashMap::new();
    let mut hasty: HashMap<VarName, bool> = HashMap::new();
    let mut out = Vec::new();

    for (line, role) in trace.lines.iter().zip(roles(q, trace)) {
        let var = line.lhs.clone();
        let emitted = match role {
            Role::Copy => {
                if line.rhs.has_var() && matches!(line.rhs, Rhs::Add(..)) && rng.gen_bool(cfg.p_hasty) {
                    hasty.insert(var.clone(), true);
                    current.insert(var, line.clone());
                    continue;
                }
                let mut copy = line.clone();
                if rng.gen_bool(cfg.p_copy) {
                    let numerals: Vec<usize> = copy
                        .rhs
                        .operands()
                        .iter()
                        .enumerate()
                        .filter(|(_, op)| op.as_num().is_some())
                        .map(|(i, _)| i)
                        .collect();
                    if !numerals.is_empty() {
                        let pick = numerals[rng.gen_range(0..numerals.len())];
                        if let Some(op) = copy.rhs.operands_mut().into_iter().nth(pick) {
                            if let Operand::Num(n) = *op {
                                *op = Operand::Num(other_numeral(rng, n));
                            }
                        }
                    }
                }
                copy
            }
            Role::Substitute => {
                let mut next = current.get(&var).cloned().unwrap_or_else(|| line.clone());
                let make_hasty = hasty.remove(&var).unwrap_or(false);
                for op in next.rhs.operands_mut() {
                    if let Operand::Var(v) = op {
                        if let Some(&value) = values.get(v) {
                            *op = Operand::Num(if make_hasty {
                                other_numeral(rng, value)
                            } else {
                                value
                            });
                            break;
                        }
                    }
                }
                next
            }
            Role::Result => {
                let base = current.get(&var).unwrap_or(line);
                match base.rhs.numeric_value() {
                    Some(v) => Equation::direct(var.clone(), v),
                    None => line.clone(),
                }
            }
            Role::Answer => line.clone(),
        };
        if let Some(v) = emitted.rhs.as_value() {
            values.insert(var.clone(), v);
        }
        current.insert(var, emitted.clone());
        out.push(emitted);
    }
    if !out.is_empty() && rng.gen_bool(cfg.p_skip_answer) {
        out.pop();
    }
    Trace::new(out)
}

fn stable_hash(text: &str) -> u64 {
    let digest = Sha256::digest(text.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("eight bytes"))
}

/// Injects faults into another model's full outputs.
pub struct FaultyModel {
    base: Box<dyn ModelPort>,
    cfg: FaultConfig,
    cache: HashMap<String, Script>,
}

impl FaultyModel {
    pub fn new(base: Box<dyn ModelPort>, cfg: FaultConfig) -> Self {
        Self {
            base,
            cfg,
            cache: HashMap::new(),
        }
    }

    /// Shorthand for faults on top of a [`PerfectModel`].
    pub fn over_perfect(chaining: ChainingStrategy, cfg: FaultConfig) -> Self {
        Self::new(Box::new(PerfectModel::new(chaining)), cfg)
    }
}

impl ModelPort for FaultyModel {
    fn call(&mut self, request: &ModelRequest) -> Result<ModelResponse, TransportError> {
        if self.cfg.is_clean() {
            return self.base.call(request);
        }
        let key = split_context(&request.input).0.to_string();
        if !self.cache.contains_key(&key) {
            let q = match question_of(request) {
                Ok(q) => q,
                Err(r) => return Ok(r),
            };
            let full = ModelRequest::new(request.id.clone(), key.clone(), OutputStrategy::AllAtOnce);
            let response = self.base.call(&full)?;
            if response.error.is_some() {
                return Ok(response);
            }
            let base_trace = match parse_trace(&response.output) {
                Ok(t) => t,
                Err(_) => return Ok(ModelResponse::ok(&request.id, response.output)),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ stable_hash(&key));
            let trace = corrupt(&q, &base_trace, &self.cfg, &mut rng);
            self.cache.insert(key.clone(), Script::new(&trace));
        }
        Ok(self.cache[&key].next(request))
    }
}

/// Seeded nonsense: empty strings, stray characters, several lines at once,
/// plausible but wrong tokens.
#[derive(Debug, Clone)]
pub struct GarbageModel {
    seed: u64,
}

impl GarbageModel {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }
}

impl ModelPort for GarbageModel {
    fn call(&mut self, request: &ModelRequest) -> Result<ModelResponse, TransportError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ stable_hash(&request.id) ^ stable_hash(&request.input));
        const PIECES: [&str; 12] = [
            "", "A", "=", "7", ",", "+", "?", "B=", "A=1, B=2", "x y z", "\u{1F600}", "A=1\nB=2",
        ];
        let output = match rng.gen_range(0..4) {
            0 => PIECES[rng.gen_range(0..PIECES.len())].to_string(),
            1 => (0..rng.gen_range(1..40))
                .map(|_| char::from(rng.gen_range(b' '..=b'~')))
                .collect(),
            2 => format!("{}={}", (b'A' + rng.gen_range(0..26)) as char, rng.gen_range(0..200)),
            _ => {
                if rng.gen_bool(0.1) {
                    return Ok(ModelResponse::failed(&request.id, "garbage"));
                }
                "Z=Z+Z".to_string()
            }
        };
        Ok(ModelResponse::ok(&request.id, output))
    }
}
