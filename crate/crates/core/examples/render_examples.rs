//! Shows the training examples each output strategy derives from one instance.

use symchain::chaining::ChainingStrategy;
use symchain::rendering::{render_examples, OutputStrategy};
use symchain::Instance;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = symchain::parse_question("A=1, B=2+A, B?")?;
    let inst = Instance::from_question("demo", q)?;
    for output in OutputStrategy::ALL {
        println!("== {output}");
        for ex in render_examples(&inst, output, ChainingStrategy::Shortest) {
            println!("{:>3}  {:<40} -> {}", ex.step_index, ex.input_text, ex.target_text);
        }
    }
    Ok(())
}
