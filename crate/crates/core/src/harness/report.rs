//! Parallel evaluation and per-depth aggregation.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chaining::ChainingStrategy;
use crate::generator::{gen_split, GenError, Instance};
use crate::rendering::{to_jsonl_string, OutputStrategy};
use crate::verifier::{check_chain, ErrorClass, Verdict};

use super::drive::{default_cap, drive};
use super::port::PortFactory;

/// One (output, chaining) combination to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair {
    pub output: OutputStrategy,
    pub chaining: ChainingStrategy,
    pub max_steps: usize,
}

impl Pair {
    /// Uses the default cap for `output`.
    pub fn new(output: OutputStrategy, chaining: ChainingStrategy) -> Self {
        Self {
            output,
            chaining,
            max_steps: default_cap(output),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub pairs: Vec<Pair>,
    pub depths: Vec<usize>,
    pub per_depth: usize,
    /// One test split is generated per seed.
    pub seeds: Vec<u64>,
    /// Concurrent sessions. Results do not depend on it.
    #[serde(skip)]
    pub jobs: usize,
}

impl RunConfig {
    pub fn new(pairs: Vec<Pair>, depths: Vec<usize>, per_depth: usize, seeds: Vec<u64>) -> Self {
        Self {
            pairs,
            depths,
            per_depth,
            seeds,
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }

    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("max_steps must be at least 1")]
    ZeroCap,
    #[error("no strategy pairs, depths or seeds to evaluate")]
    Empty,
    #[error(transparent)]
    Generation(#[from] GenError),
}

/// The scored outcome for one instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub index: usize,
    pub id: String,
    pub depth: usize,
    pub verdict: Verdict,
    pub calls: usize,
    /// Characters in the canonical rendering of the prediction.
    pub length: usize,
}

/// Outcomes in dataset order, plus the first transport failure if any.
#[derive(Debug, Clone, Default)]
pub struct Evaluation {
    pub outcomes: Vec<Outcome>,
    pub failure: Option<String>,
}

/// Drives and scores every instance. A transport failure stops new work and
/// is reported alongside whatever finished.
pub fn evaluate(
    factory: &dyn PortFactory,
    dataset: &[Instance],
    pair: Pair,
    jobs: usize,
) -> Evaluation {
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let failure: Mutex<Option<String>> = Mutex::new(None);
    let fail = |message: String| {
        abort.store(true, Ordering::SeqCst);
        failure.lock().expect("not poisoned").get_or_insert(message);
    };
    let workers = jobs.clamp(1, dataset.len().max(1));

    let mut outcomes: Vec<Outcome> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut done = Vec::new();
                    let mut port = match factory.open(&pair) {
                        Ok(p) => p,
                        Err(e) => {
                            fail(e.to_string());
                            return done;
                        }
                    };
                    while !abort.load(Ordering::SeqCst) {
                        let index = next.fetch_add(1, Ordering::SeqCst);
                        let Some(inst) = dataset.get(index) else {
                            break;
                        };
                        match drive(
                            port.as_mut(),
                            &inst.question,
                            &inst.id,
                            pair.output,
                            pair.max_steps,
                        ) {
                            Ok(d) => {
                                let mut verdict =
                                    check_chain(&inst.question, inst.gold(pair.chaining), &d.prediction);
                                verdict.capped = d.capped;
                                done.push(Outcome {
                                    index,
                                    id: inst.id.clone(),
                                    depth: inst.depth,
                                    verdict,
                                    calls: d.calls,
                                    length: d.prediction.to_string().chars().count(),
                                });
                            }
                            Err(e) => {
                                fail(format!("{}: {e}", inst.id));
                                break;
                            }
                        }
                    }
                    done
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    outcomes.sort_by_key(|o| o.index);
    Evaluation {
        outcomes,
        failure: failure.into_inner().expect("not poisoned"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedScore {
    pub seed: u64,
    pub n: usize,
    pub chain_correct: usize,
    pub answer_correct: usize,
}

impl SeedScore {
    pub fn chain_accuracy(&self) -> f64 {
        ratio(self.chain_correct, self.n)
    }

    pub fn answer_accuracy(&self) -> f64 {
        ratio(self.answer_correct, self.n)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthRow {
    pub depth: usize,
    /// Instances over all seeds.
    pub n: usize,
    /// Mean over seeds of the per-seed accuracy.
    pub chain_accuracy: f64,
    pub answer_accuracy: f64,
    pub per_seed: Vec<SeedScore>,
    /// Prediction length in characters to count.
    pub length_histogram: BTreeMap<usize, usize>,
    pub mean_length: f64,
    pub max_calls: usize,
    pub capped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub output: OutputStrategy,
    pub chaining: ChainingStrategy,
    pub max_steps: usize,
    pub depths: Vec<DepthRow>,
    /// Primary error label of every chain-incorrect verdict.
    pub error_histogram: BTreeMap<ErrorClass, usize>,
    pub total_calls: usize,
    pub max_calls: usize,
    pub capped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub seeds: Vec<u64>,
    pub depths: Vec<usize>,
    pub per_depth: usize,
    /// SHA-256 of each seed's test split in JSONL form.
    pub dataset_hashes: Vec<String>,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub metadata: Metadata,
    pub pairs: Vec<PairReport>,
}

impl Report {
    pub fn pair(&self, output: OutputStrategy, chaining: ChainingStrategy) -> Option<&PairReport> {
        self.pairs
            .iter()
            .find(|p| p.output == output && p.chaining == chaining)
    }
}

pub fn dataset_hash(dataset: &[Instance]) -> String {
    let digest = Sha256::digest(to_jsonl_string(dataset).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Aggregates per-seed outcomes (`(seed, outcomes)` in seed order) for one pair.
pub fn aggregate(pair: Pair, depths: &[usize], runs: &[(u64, Vec<Outcome>)]) -> PairReport {
    let mut rows = Vec::new();
    let mut error_histogram = BTreeMap::new();
    let mut total_calls = 0;
    let mut max_calls = 0;
    let mut capped = 0;
    for &depth in depths {
        let mut row = DepthRow {
            depth,
            n: 0,
            chain_accuracy: 0.0,
            answer_accuracy: 0.0,
            per_seed: Vec::new(),
            length_histogram: BTreeMap::new(),
            mean_length: 0.0,
            max_calls: 0,
            capped: 0,
        };
        let mut length_sum = 0;
        for (seed, outcomes) in runs {
            let mut score = SeedScore {
                seed: *seed,
                n: 0,
                chain_correct: 0,
                answer_correct: 0,
            };
            for o in outcomes.iter().filter(|o| o.depth == depth) {
                score.n += 1;
                score.chain_correct += usize::from(o.verdict.chain_correct);
                score.answer_correct += usize::from(o.verdict.answer_correct);
                *row.length_histogram.entry(o.length).or_default() += 1;
                length_sum += o.length;
                row.max_calls = row.max_calls.max(o.calls);
                row.capped += usize::from(o.verdict.capped);
                total_calls += o.calls;
                if let Some(label) = o.verdict.primary_error() {
                    *error_histogram.entry(label).or_default() += 1;
                }
            }
            row.n += score.n;
            row.per_seed.push(score);
        }
        let seeds = row.per_seed.len().max(1) as f64;
        row.chain_accuracy = row.per_seed.iter().map(SeedScore::chain_accuracy).sum::<f64>() / seeds;
        row.answer_accuracy = row.per_seed.iter().map(SeedScore::answer_accuracy).sum::<f64>() / seeds;
        row.mean_length = ratio(length_sum, row.n);
        max_calls = max_calls.max(row.max_calls);
        capped += row.capped;
        rows.push(row);
    }
    PairReport {
        output: pair.output,
        chaining: pair.chaining,
        max_steps: pair.max_steps,
        depths: rows,
        error_histogram,
        total_calls,
        max_calls,
        capped,
    }
}

/// Generates one test split per seed and evaluates every pair on each.
pub fn run(factory: &dyn PortFactory, cfg: &RunConfig) -> Result<Report, RunError> {
    if cfg.pairs.is_empty() || cfg.depths.is_empty() || cfg.seeds.is_empty() {
        return Err(RunError::Empty);
    }
    if cfg.pairs.iter().any(|p| p.max_steps == 0) {
        return Err(RunError::ZeroCap);
    }
    let datasets: Vec<(u64, Vec<Instance>)> = cfg
        .seeds
        .iter()
        .map(|&seed| Ok((seed, gen_split(seed, &cfg.depths, cfg.per_depth)?)))
        .collect::<Result<_, GenError>>()?;
    let dataset_refs: Vec<(u64, &[Instance])> =
        datasets.iter().map(|(s, d)| (*s, d.as_slice())).collect();
    Ok(run_on(factory, cfg, &dataset_refs))
}

/// Like [`run`] on caller-supplied datasets, one per entry of `cfg.seeds`.
pub fn run_on(factory: &dyn PortFactory, cfg: &RunConfig, datasets: &[(u64, &[Instance])]) -> Report {
    let mut failure = None;
    let mut pairs = Vec::new();
    'pairs: for &pair in &cfg.pairs {
        let mut runs = Vec::new();
        for &(seed, dataset) in datasets {
            let eval = evaluate(factory, dataset, pair, cfg.jobs);
            runs.push((seed, eval.outcomes));
            if eval.failure.is_some() {
                failure = eval.failure;
                pairs.push(aggregate(pair, &cfg.depths, &runs));
                break 'pairs;
            }
        }
        pairs.push(aggregate(pair, &cfg.depths, &runs));
    }
    Report {
        complete: failure.is_none(),
        failure,
        metadata: Metadata {
            seeds: datasets.iter().map(|(s, _)| *s).collect(),
            depths: cfg.depths.clone(),
            per_depth: cfg.per_depth,
            dataset_hashes: datasets.iter().map(|(_, d)| dataset_hash(d)).collect(),
            config: cfg.clone(),
        },
        pairs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(depth: usize, chain: bool, answer: bool, length: usize) -> Outcome {
        Outcome {
            index: 0,
            id: String::new(),
            depth,
            verdict: Verdict {
                answer_correct: answer,
                chain_correct: chain,
                errors: if chain {
                    vec![]
                } else {
                    vec![ErrorClass::CopyingError, ErrorClass::Malformed]
                },
                first_bad_line: None,
                capped: false,
            },
            calls: length,
            length,
        }
    }

    #[test]
    fn multi_seed_means() {
        let pair = Pair::new(OutputStrategy::AllAtOnce, ChainingStrategy::Shortest);
        let runs = vec![
            (
                1,
                vec![
                    outcome(1, true, true, 3),
                    outcome(1, false, true, 5),
                    outcome(2, true, true, 9),
                    outcome(2, true, true, 9),
                ],
            ),
            (
                2,
                vec![
                    outcome(1, true, true, 3),
                    outcome(1, true, true, 3),
                    outcome(1, false, false, 4),
                    outcome(2, false, false, 7),
                ],
            ),
        ];
        let report = aggregate(pair, &[1, 2], &runs);
        let d1 = &report.depths[0];
        assert_eq!(d1.n, 5);
        // seed 1: 1/2 chain, 2/2 answer; seed 2: 2/3 chain, 2/3 answer
        assert!((d1.chain_accuracy - (0.5 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert!((d1.answer_accuracy - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert_eq!(d1.length_histogram.values().sum::<usize>(), d1.n);
        assert_eq!(d1.length_histogram[&3], 3);
        assert!((d1.mean_length - 18.0 / 5.0).abs() < 1e-12);
        let d2 = &report.depths[1];
        assert_eq!(d2.n, 3);
        assert!((d2.chain_accuracy - 0.5).abs() < 1e-12);
        assert_eq!(report.error_histogram[&ErrorClass::CopyingError], 3);
        assert_eq!(report.error_histogram.len(), 1);
        assert_eq!(report.max_calls, 9);
    }

    #[test]
    fn empty_configs_are_rejected() {
        let factory = |_: &Pair| -> Result<Box<dyn super::super::ModelPort>, super::super::TransportError> {
            unreachable!()
        };
        let cfg = RunConfig::new(vec![], vec![1], 1, vec![0]);
        assert!(matches!(run(&factory, &cfg), Err(RunError::Empty)));
        let mut pair = Pair::new(OutputStrategy::StepByStep, ChainingStrategy::Shortest);
        pair.max_steps = 0;
        let cfg = RunConfig::new(vec![pair], vec![1], 1, vec![0]);
        assert!(matches!(run(&factory, &cfg), Err(RunError::ZeroCap)));
    }
}
