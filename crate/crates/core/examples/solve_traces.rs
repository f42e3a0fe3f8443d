//! Solves one question and prints the trace under every chaining strategy.

use symchain::chaining::{trace, ChainingStrategy};
use symchain::semantics;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "A=1, C=5+B, B=2+A, D=3+A, C?".to_string());
    let q = symchain::parse_question(&text)?;
    println!("question:    {q}");
    println!("answer:      {}", semantics::answer(&q)?);
    println!("depth:       {}", semantics::depth_of(&q)?);
    for eq in semantics::distractors(&q)? {
        println!("distractor:  {eq}");
    }
    for s in ChainingStrategy::ALL {
        println!("{:<12} {}", format!("{s}:"), trace(&q, s)?);
    }
    Ok(())
}
