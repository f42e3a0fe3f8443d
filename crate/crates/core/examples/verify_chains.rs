//! Scores a few handwritten predictions and prints their error labels.

use symchain::chaining::{trace, ChainingStrategy};
use symchain::verifier::{check_chain, Prediction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = symchain::parse_question("A=1, C=5+B, B=2+A, D=3+A, C?")?;
    let gold = trace(&q, ChainingStrategy::Shortest)?;
    println!("gold: {gold}");
    let predictions = [
        gold.to_string(),
        "A=1, B=2+D, B=2+1, B=3, C=5+B, C=5+3, C=8".to_string(),
        "A=1, B=2+A, B=2+1, B=3, D=3+A, D=3+2, D=5, C=5+B, C=5+3, C=8".to_string(),
        "A=1, B=4+A, B=4+1, B=5, C=5+B, C=5+5, C=10".to_string(),
        "C=8".to_string(),
        "A=1, B=2+".to_string(),
    ];
    for text in predictions {
        let v = check_chain(&q, &gold, &Prediction::parse(&text));
        let labels: Vec<&str> = v.errors.iter().map(|e| e.name()).collect();
        println!(
            "chain {:<5} answer {:<5} first_bad {:<4} {:<28} {text}",
            v.chain_correct,
            v.answer_correct,
            v.first_bad_line.map_or("-".to_string(), |i| i.to_string()),
            labels.join(","),
        );
    }
    Ok(())
}
