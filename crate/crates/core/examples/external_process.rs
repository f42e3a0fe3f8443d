//! Evaluates a model spawned as a child process over stdio JSON lines, then
//! the same model behind HTTP. Pass a command to evaluate your own model.

use symchain::chaining::ChainingStrategy;
use symchain::generator::gen_split;
use symchain::harness::{evaluate, HttpFactory, HttpServer, Pair, ProcessFactory};
use symchain::refmodels::PerfectModel;
use symchain::rendering::OutputStrategy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let command = std::env::args().nth(1).unwrap_or_else(|| {
        let bin = std::env::current_exe().expect("exe");
        let root = bin.ancestors().nth(3).expect("target dir").to_path_buf();
        format!("{} serve-ref --kind perfect", root.join("debug/symchain").display())
    });
    let dataset = gen_split(1, &[2, 5], 10)?;
    let pair = Pair::new(OutputStrategy::TokenByToken, ChainingStrategy::Backward);

    let eval = evaluate(&ProcessFactory { command: command.clone() }, &dataset, pair, 2);
    let correct = eval.outcomes.iter().filter(|o| o.verdict.chain_correct).count();
    println!("stdio `{command}`: {correct}/{} chain-correct, failure {:?}", dataset.len(), eval.failure);

    let server = HttpServer::bind("127.0.0.1:0")?;
    let url = format!("http://{}", server.local_addr().expect("ip address"));
    std::thread::spawn(move || server.run(2, || Box::new(PerfectModel::new(ChainingStrategy::Backward))));
    let eval = evaluate(&HttpFactory { base_url: url.clone() }, &dataset, pair, 2);
    let correct = eval.outcomes.iter().filter(|o| o.verdict.chain_correct).count();
    println!("http {url}: {correct}/{} chain-correct, failure {:?}", dataset.len(), eval.failure);
    Ok(())
}
