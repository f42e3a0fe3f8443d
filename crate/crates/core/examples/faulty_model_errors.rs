//! Injects copy and hasty faults and prints the resulting error histogram.

use symchain::chaining::ChainingStrategy;
use symchain::harness::{run, ModelPort, Pair, RunConfig, TransportError};
use symchain::refmodels::{FaultConfig, FaultyModel};
use symchain::rendering::OutputStrategy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = FaultConfig::new(0.1, 0.1, 0.02, 3)?;
    let factory = move |pair: &Pair| -> Result<Box<dyn ModelPort>, TransportError> {
        Ok(Box::new(FaultyModel::over_perfect(pair.chaining, cfg)))
    };
    let pair = Pair::new(OutputStrategy::StepByStep, ChainingStrategy::Shortest);
    let report = run(&factory, &RunConfig::new(vec![pair], (1..=6).collect(), 100, vec![0]))?;
    let pair = &report.pairs[0];
    for row in &pair.depths {
        println!(
            "depth {}: chain {:.2} answer {:.2}",
            row.depth, row.chain_accuracy, row.answer_accuracy
        );
    }
    for (class, n) in &pair.error_histogram {
        println!("{:<26} {n}", class.name());
    }
    Ok(())
}
