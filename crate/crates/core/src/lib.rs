//! Synthetic symbolic numerical-reasoning problems and the tools around them.
//!
//! A question is a comma-separated list of equations over mod-100 numerals
//! followed by a target variable, e.g. `A=1, B=2+A, B?`. The crate can
//!
//! * parse and evaluate questions ([`lang`], [`semantics`]);
//! * generate datasets with a controlled reasoning depth ([`generator`]);
//! * produce gold derivation traces under several chaining strategies ([`chaining`]);
//! * render supervision pairs for one-shot, per-line and per-token decoding ([`rendering`]);
//! * check predicted chains and classify their errors ([`verifier`]);
//! * drive a model through any decoding loop and report accuracy ([`harness`]);
//! * stand in for a model with reference implementations ([`refmodels`]).

pub mod chaining;
pub mod cli;
pub mod generator;
pub mod harness;
pub mod lang;
pub mod refmodels;
pub mod rendering;
pub mod semantics;
pub mod verifier;

pub use chaining::{trace, ChainingStrategy};
pub use generator::{gen_instance, gen_split, GenConfig, Instance};
pub use lang::{parse_question, parse_trace, Equation, Numeral, Question, Trace, VarName};
pub use rendering::OutputStrategy;
pub use verifier::{check_answer, check_chain, classify, ErrorClass, Prediction, Verdict};
