//! Generates a small test split and writes it as JSONL next to the target dir.

use symchain::generator::gen_split;
use symchain::rendering::{to_jsonl_string, write_jsonl};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let split = gen_split(7, &[1, 3, 6], 2)?;
    for inst in &split {
        println!("{} depth {} answer {:>2}  {}", inst.id, inst.depth, inst.answer, inst.question);
    }
    let path = std::env::temp_dir().join("symchain-example.jsonl");
    write_jsonl(&path, &split)?;
    println!("wrote {} ({} bytes)", path.display(), to_jsonl_string(&split).len());
    Ok(())
}
