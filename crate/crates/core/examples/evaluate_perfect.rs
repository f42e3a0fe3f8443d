//! Runs the perfect reference model through every decoding loop in process.

use symchain::chaining::ChainingStrategy;
use symchain::harness::{run, ModelPort, Pair, RunConfig, TransportError};
use symchain::refmodels::PerfectModel;
use symchain::rendering::OutputStrategy;

fn perfect(pair: &Pair) -> Result<Box<dyn ModelPort>, TransportError> {
    Ok(Box::new(PerfectModel::new(pair.chaining)))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pairs = OutputStrategy::ALL
        .into_iter()
        .flat_map(|o| ChainingStrategy::ALL.into_iter().map(move |c| Pair::new(o, c)))
        .collect();
    let cfg = RunConfig::new(pairs, vec![1, 4, 8, 12], 25, vec![0]);
    let report = run(&perfect, &cfg)?;
    for pair in &report.pairs {
        let deepest = pair.depths.last().expect("depths");
        println!(
            "{:<14} {:<10} depth {:>2}: chain {:>5.1}% answer {:>5.1}% mean length {:>6.1} max calls {}",
            pair.output.to_string(),
            pair.chaining.to_string(),
            deepest.depth,
            100.0 * deepest.chain_accuracy,
            100.0 * deepest.answer_accuracy,
            deepest.mean_length,
            pair.max_calls,
        );
    }
    Ok(())
}
