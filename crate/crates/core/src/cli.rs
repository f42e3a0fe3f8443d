//! The `symchain` command line.
//!
//! Exit codes: 0 success, 1 usage, 2 data or schema problems, 3 transport
//! failures. `--config FILE` reads flat TOML key-value pairs and turns each
//! into a flag unless that flag is already given on the command line.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::chaining::{self, ChainingStrategy};
use crate::generator::{gen_pretraining, gen_split_with, GenError, Instance, SplitConfig};
use crate::harness::{
    run, run_on, serve_stdio, HttpFactory, HttpServer, ModelPort, Pair, PortFactory,
    ProcessFactory, Report, RunConfig, RunError, TransportError,
};
use crate::lang::parse_question;
use crate::plain_record;
use crate::refmodels::{FaultConfig, FaultyModel, GarbageModel, PerfectModel};
use crate::rendering::{
    read_jsonl, render_examples, write_jsonl, DatasetError, OutputStrategy, TrainingExample,
};
use crate::semantics;
use crate::verifier::{check_chain, Prediction, Verdict};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Transport(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Transport(_) => 3,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<TransportError> for CliError {
    fn from(e: TransportError) -> Self {
        CliError::Transport(e.to_string())
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Generation(g) => g.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(
    name = "symchain",
    version,
    about = "Symbolic reasoning problems, gold chains, chain verification and model evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate instances with gold traces as JSONL.
    Gen(GenArgs),
    /// Generate the depth-1 pretraining set.
    Pretrain(PretrainArgs),
    /// Expand instances into training examples.
    Render(RenderArgs),
    /// Print the gold traces of one question.
    Solve(SolveArgs),
    /// Score predictions against gold instances.
    Verify(VerifyArgs),
    /// Evaluate a model through the decoding harness.
    Eval(EvalArgs),
    /// Serve a reference model over the wire protocol.
    ServeRef(ServeArgs),
    /// Format an evaluation report as a table.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    /// Depths 1..5, 1000 per depth.
    Train,
    /// Depths 1..12, 200 per depth.
    Test,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value_t = Split::Train)]
    pub split: Split,
    /// Inclusive range `a..b`, a single depth, or a comma list. Overrides the split.
    #[arg(long)]
    pub depths: Option<String>,
    /// Overrides the split.
    #[arg(long)]
    pub per_depth: Option<usize>,
    /// Fixed distractor count; random in 1..3 when absent.
    #[arg(long)]
    pub distractors: Option<usize>,
    #[arg(long, env = "SYMCHAIN_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    #[arg(long, default_value_t = crate::generator::PRETRAIN_COUNT)]
    pub count: usize,
    #[arg(long, env = "SYMCHAIN_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Instance JSONL written by `gen`.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Output strategies: all, step, token (comma separated).
    #[arg(long, default_value = "all")]
    pub output: String,
    /// Chaining strategies: shortest, exhaustive, backward, none (comma separated).
    #[arg(long, default_value = "shortest")]
    pub chaining: String,
    #[arg(short, long = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// A question such as "A=1, B=2+A, B?".
    pub question: String,
    /// Print only this strategy's trace.
    #[arg(long)]
    pub chaining: Option<ChainingStrategy>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Instance JSONL with gold traces.
    #[arg(long)]
    pub gold: PathBuf,
    /// JSONL records with `instance_id` (or `id`) and `prediction` (or `target_text`).
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long, default_value_t = ChainingStrategy::Shortest)]
    pub chaining: ChainingStrategy,
    /// Verdict JSONL destination; standard output when absent.
    #[arg(short, long = "out")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RefKind {
    Perfect,
    Faulty,
    Garbage,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("model").required(true).args(["model_cmd", "model_url", "reference"])))]
pub struct EvalArgs {
    /// Shell command speaking the wire protocol on its standard streams.
    #[arg(long)]
    pub model_cmd: Option<String>,
    /// Base URL of a model serving `POST /generate`.
    #[arg(long)]
    pub model_url: Option<String>,
    /// Run a reference model in-process.
    #[arg(long = "ref", value_enum)]
    pub reference: Option<RefKind>,
    /// Output strategies: all, step, token (comma separated).
    #[arg(long, default_value = "step")]
    pub output: String,
    /// Chaining strategies (comma separated).
    #[arg(long, default_value = "shortest")]
    pub chaining: String,
    #[arg(long, default_value = "1..12")]
    pub depths: String,
    #[arg(long, default_value_t = crate::generator::TEST_PER_DEPTH)]
    pub per_depth: usize,
    /// Number of test splits, seeded `seed`, `seed + 1`, ...
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,
    #[arg(long, env = "SYMCHAIN_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Request cap per instance; 100 for step and 500 for token by default.
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Evaluate this instance file instead of generated splits.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Report JSON destination; standard output when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub faults: FaultArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FaultArgs {
    #[arg(long, default_value_t = 0.0)]
    pub p_copy: f64,
    #[arg(long, default_value_t = 0.0)]
    pub p_hasty: f64,
    #[arg(long, default_value_t = 0.0)]
    pub p_skip_answer: f64,
    #[arg(long, default_value_t = 0)]
    pub fault_seed: u64,
}

impl FaultArgs {
    fn config(&self) -> Result<FaultConfig, CliError> {
        FaultConfig::new(self.p_copy, self.p_hasty, self.p_skip_answer, self.fault_seed)
            .map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, value_enum, default_value_t = RefKind::Perfect)]
    pub kind: RefKind,
    #[arg(long, env = "SYMCHAIN_CHAINING", default_value_t = ChainingStrategy::Shortest)]
    pub chaining: ChainingStrategy,
    #[command(flatten)]
    pub faults: FaultArgs,
    /// Serve HTTP on this address instead of standard streams.
    #[arg(long)]
    pub http: Option<String>,
    #[arg(long, default_value_t = 4)]
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report JSON written by `eval`.
    pub report: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// With csv: emit length histograms instead of accuracies.
    #[arg(long)]
    pub lengths: bool,
}

/// Parses `a..b` (inclusive), `n`, or `a,b,c`.
pub fn parse_depths(text: &str) -> Result<Vec<usize>, String> {
    let bad = || format!("invalid depths {text:?}: expected a..b, n, or a comma list");
    let depths: Vec<usize> = if let Some((a, b)) = text.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        text.split(',')
            .map(|d| d.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if depths.is_empty() || depths.contains(&0) {
        return Err(bad());
    }
    Ok(depths)
}

fn parse_list<T: std::str::FromStr<Err = String>>(text: &str) -> Result<Vec<T>, CliError> {
    let items: Vec<T> = text
        .split(',')
        .map(|s| s.trim().parse::<T>().map_err(CliError::Usage))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(CliError::Usage("empty list".into()));
    }
    Ok(items)
}

/// Inserts flags from `--config FILE` right after the subcommand, skipping
/// any that are given explicitly.
pub fn expand_config(mut args: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(pos) = args
        .iter()
        .position(|a| a == "--config" || a.starts_with("--config="))
    else {
        return Ok(args);
    };
    let path = if let Some(value) = args[pos].strip_prefix("--config=") {
        let value = value.to_string();
        args.remove(pos);
        value
    } else {
        if pos + 1 >= args.len() {
            return Err(CliError::Usage("--config needs a file".into()));
        }
        args.remove(pos);
        args.remove(pos)
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
    let table: toml::Table =
        text.parse().map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
    let explicit: Vec<String> = args
        .iter()
        .filter_map(|a| match a.as_str() {
            "-o" => Some("--out".to_string()),
            "-i" => Some("--input".to_string()),
            a if a.starts_with("--") => Some(a.split('=').next().unwrap_or(a).to_string()),
            _ => None,
        })
        .collect();
    let mut flags = Vec::new();
    for (key, value) in table {
        let flag = format!("--{}", key.replace('_', "-"));
        if explicit.contains(&flag) {
            continue;
        }
        let scalar = |v: &toml::Value| -> Result<String, CliError> {
            match v {
                toml::Value::String(s) => Ok(s.clone()),
                toml::Value::Integer(i) => Ok(i.to_string()),
                toml::Value::Float(f) => Ok(f.to_string()),
                other => Err(CliError::Usage(format!(
                    "{path}: unsupported value for {key}: {other}"
                ))),
            }
        };
        match &value {
            toml::Value::Boolean(true) => flags.push(flag),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let joined: Vec<String> = items.iter().map(scalar).collect::<Result<_, _>>()?;
                flags.push(format!("{flag}={}", joined.join(",")));
            }
            v => flags.push(format!("{flag}={}", scalar(v)?)),
        }
    }
    let at = args
        .iter()
        .skip(1)
        .position(|a| !a.starts_with('-'))
        .map_or(args.len(), |i| i + 2);
    args.splice(at..at, flags);
    Ok(args)
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with_args(args: Vec<String>) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Pretrain(a) => cmd_pretrain(a),
        Command::Render(a) => cmd_render(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Eval(a) => cmd_eval(a),
        Command::ServeRef(a) => cmd_serve(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match jobs {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| CliError::Usage(e.to_string())),
    }
}

/// Writes `<out>.meta.json` and echoes it to standard error.
fn write_meta(out: &Path, meta: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(meta).expect("metadata serializes");
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    let path = PathBuf::from(name);
    fs::write(&path, format!("{text}\n")).map_err(|e| io_error(&path, e))?;
    eprintln!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct GenMeta<'a> {
    command: &'a str,
    split: Option<Split>,
    seed: u64,
    depths: &'a [usize],
    per_depth: usize,
    distractors: Option<usize>,
    count: usize,
}

fn cmd_gen(a: GenArgs) -> Result<(), CliError> {
    let mut cfg = match a.split {
        Split::Train => SplitConfig::train(a.seed),
        Split::Test => SplitConfig::test(a.seed),
    };
    if let Some(d) = &a.depths {
        cfg.depths = parse_depths(d).map_err(CliError::Usage)?;
    }
    if let Some(n) = a.per_depth {
        cfg.per_depth = n;
    }
    cfg.distractors = a.distractors;
    let instances = with_jobs(a.jobs, || gen_split_with(&cfg))??;
    write_jsonl(&a.out, &instances)?;
    write_meta(
        &a.out,
        &GenMeta {
            command: "gen",
            split: Some(a.split),
            seed: cfg.seed,
            depths: &cfg.depths,
            per_depth: cfg.per_depth,
            distractors: cfg.distractors,
            count: instances.len(),
        },
    )
}

fn cmd_pretrain(a: PretrainArgs) -> Result<(), CliError> {
    let instances = with_jobs(a.jobs, || gen_pretraining(a.seed, a.count))??;
    write_jsonl(&a.out, &instances)?;
    write_meta(
        &a.out,
        &GenMeta {
            command: "pretrain",
            split: None,
            seed: a.seed,
            depths: &[1],
            per_depth: a.count,
            distractors: Some(0),
            count: instances.len(),
        },
    )
}

#[derive(Serialize)]
struct RenderMeta<'a> {
    command: &'a str,
    input: String,
    outputs: Vec<OutputStrategy>,
    chainings: Vec<ChainingStrategy>,
    instances: usize,
    examples: usize,
}

fn cmd_render(a: RenderArgs) -> Result<(), CliError> {
    let outputs: Vec<OutputStrategy> = parse_list(&a.output)?;
    let chainings: Vec<ChainingStrategy> = parse_list(&a.chaining)?;
    let instances: Vec<Instance> = read_jsonl(&a.input)?;
    let mut examples: Vec<TrainingExample> = Vec::new();
    for &output in &outputs {
        for &chaining in &chainings {
            for inst in &instances {
                examples.extend(render_examples(inst, output, chaining));
            }
        }
    }
    write_jsonl(&a.out, &examples)?;
    write_meta(
        &a.out,
        &RenderMeta {
            command: "render",
            input: a.input.display().to_string(),
            outputs,
            chainings,
            instances: instances.len(),
            examples: examples.len(),
        },
    )
}

fn cmd_solve(a: SolveArgs) -> Result<(), CliError> {
    let q = parse_question(&a.question).map_err(|e| CliError::Data(e.to_string()))?;
    let data = |e: semantics::SemanticsError| CliError::Data(e.to_string());
    if let Some(strategy) = a.chaining {
        println!("{}", chaining::trace(&q, strategy).map_err(data)?);
        return Ok(());
    }
    println!("answer: {}", semantics::answer(&q).map_err(data)?);
    println!("depth: {}", semantics::depth_of(&q).map_err(data)?);
    for strategy in ChainingStrategy::ALL {
        println!("{strategy}: {}", chaining::trace(&q, strategy).map_err(data)?);
    }
    Ok(())
}

/// A prediction for one instance. Rendered all-at-once examples also qualify.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionRecord {
    #[serde(alias = "id")]
    pub instance_id: String,
    #[serde(alias = "target_text")]
    pub prediction: String,
}

plain_record!(PredictionRecord);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub id: String,
    #[serde(flatten)]
    pub verdict: Verdict,
}

fn cmd_verify(a: VerifyArgs) -> Result<(), CliError> {
    let gold: Vec<Instance> = read_jsonl(&a.gold)?;
    let predictions: Vec<PredictionRecord> = read_jsonl(&a.predictions)?;
    let by_id: BTreeMap<&str, &Instance> = gold.iter().map(|i| (i.id.as_str(), i)).collect();
    let mut records = Vec::with_capacity(predictions.len());
    for p in &predictions {
        let inst = by_id.get(p.instance_id.as_str()).ok_or_else(|| {
            CliError::Data(format!("prediction for unknown instance {:?}", p.instance_id))
        })?;
        records.push(VerdictRecord {
            id: p.instance_id.clone(),
            verdict: check_chain(
                &inst.question,
                inst.gold(a.chaining),
                &Prediction::parse(&p.prediction),
            ),
        });
    }
    let text: String = records
        .iter()
        .map(|r| serde_json::to_string(r).expect("verdicts serialize") + "\n")
        .collect();
    match &a.out {
        Some(path) => fs::write(path, text).map_err(|e| io_error(path, e))?,
        None => print!("{text}"),
    }
    let chain = records.iter().filter(|r| r.verdict.chain_correct).count();
    let answer = records.iter().filter(|r| r.verdict.answer_correct).count();
    eprintln!(
        "{} predictions: {chain} chain-correct, {answer} answer-correct",
        records.len()
    );
    Ok(())
}

/// Builds a session for an in-process reference model.
fn reference_model(kind: RefKind, chaining: ChainingStrategy, faults: FaultConfig) -> Box<dyn ModelPort> {
    match kind {
        RefKind::Perfect => Box::new(PerfectModel::new(chaining)),
        RefKind::Faulty => Box::new(FaultyModel::over_perfect(chaining, faults)),
        RefKind::Garbage => Box::new(GarbageModel::new(faults.seed)),
    }
}

struct ReferenceFactory {
    kind: RefKind,
    faults: FaultConfig,
}

impl PortFactory for ReferenceFactory {
    fn open(&self, pair: &Pair) -> Result<Box<dyn ModelPort>, TransportError> {
        Ok(reference_model(self.kind, pair.chaining, self.faults))
    }
}

fn cmd_eval(a: EvalArgs) -> Result<(), CliError> {
    let outputs: Vec<OutputStrategy> = parse_list(&a.output)?;
    let chainings: Vec<ChainingStrategy> = parse_list(&a.chaining)?;
    let mut pairs = Vec::new();
    for &output in &outputs {
        for &chaining in &chainings {
            let mut pair = Pair::new(output, chaining);
            if let Some(cap) = a.max_steps {
                pair.max_steps = cap;
            }
            pairs.push(pair);
        }
    }
    let factory: Box<dyn PortFactory> = match (&a.model_cmd, &a.model_url, a.reference) {
        (Some(cmd), _, _) => Box::new(ProcessFactory {
            command: cmd.clone(),
        }),
        (_, Some(url), _) => Box::new(HttpFactory {
            base_url: url.clone(),
        }),
        (_, _, Some(kind)) => Box::new(ReferenceFactory {
            kind,
            faults: a.faults.config()?,
        }),
        _ => return Err(CliError::Usage("no model given".into())),
    };
    let mut depths = parse_depths(&a.depths).map_err(CliError::Usage)?;
    let seeds: Vec<u64> = (0..a.seeds.max(1) as u64)
        .map(|i| a.seed.wrapping_add(i))
        .collect();
    let mut cfg = RunConfig::new(pairs, depths.clone(), a.per_depth, seeds);
    if let Some(j) = a.jobs {
        cfg = cfg.with_jobs(j);
    }
    let report = match &a.data {
        Some(path) => {
            let instances: Vec<Instance> = read_jsonl(path)?;
            depths = instances.iter().map(|i| i.depth).collect();
            depths.sort_unstable();
            depths.dedup();
            cfg.depths = depths;
            cfg.per_depth = instances.iter().filter(|i| i.depth == cfg.depths[0]).count();
            cfg.seeds = vec![a.seed];
            if cfg.pairs.iter().any(|p| p.max_steps == 0) {
                return Err(CliError::Usage("max_steps must be at least 1".into()));
            }
            run_on(factory.as_ref(), &cfg, &[(a.seed, &instances)])
        }
        None => run(factory.as_ref(), &cfg)?,
    };
    let json = serde_json::to_string_pretty(&report).expect("reports serialize") + "\n";
    match &a.report {
        Some(path) => fs::write(path, &json).map_err(|e| io_error(path, e))?,
        None => print!("{json}"),
    }
    eprint!("{}", format_text(&report));
    match report.failure {
        Some(f) => Err(CliError::Transport(format!("evaluation incomplete: {f}"))),
        None => Ok(()),
    }
}

fn cmd_serve(a: ServeArgs) -> Result<(), CliError> {
    let faults = a.faults.config()?;
    match &a.http {
        Some(addr) => {
            let server = HttpServer::bind(addr)?;
            let bound = server
                .local_addr()
                .map_or_else(|| addr.clone(), |s| s.to_string());
            println!("listening on http://{bound}");
            io::stdout().flush().map_err(TransportError::from)?;
            server.run(a.threads, || reference_model(a.kind, a.chaining, faults));
            Ok(())
        }
        None => {
            let mut model = reference_model(a.kind, a.chaining, faults);
            let stdin = io::stdin();
            let stdout = io::stdout();
            serve_stdio(
                model.as_mut(),
                &OutputStrategy::ALL,
                stdin.lock(),
                BufWriter::new(stdout.lock()),
            )
            .map_err(|e| CliError::Transport(e.to_string()))
        }
    }
}

/// Accuracy table, error histogram and length histograms.
pub fn format_text(report: &Report) -> String {
    let mut out = String::new();
    for pair in &report.pairs {
        out.push_str(&format!(
            "{} / {} (max {} calls)\n",
            pair.output, pair.chaining, pair.max_steps
        ));
        out.push_str("depth      n   chain  answer  mean_len  max_calls  capped\n");
        for row in &pair.depths {
            out.push_str(&format!(
                "{:>5} {:>6} {:>7.1} {:>7.1} {:>9.1} {:>10} {:>7}\n",
                row.depth,
                row.n,
                100.0 * row.chain_accuracy,
                100.0 * row.answer_accuracy,
                row.mean_length,
                row.max_calls,
                row.capped
            ));
        }
        if !pair.error_histogram.is_empty() {
            let errors: Vec<String> = pair
                .error_histogram
                .iter()
                .map(|(class, n)| format!("{class}={n}"))
                .collect();
            out.push_str(&format!("errors: {}\n", errors.join(" ")));
        }
        out.push_str("lengths (characters: count)\n");
        for row in &pair.depths {
            let bins: Vec<String> = row
                .length_histogram
                .iter()
                .map(|(len, n)| format!("{len}:{n}"))
                .collect();
            out.push_str(&format!("{:>5}  {}\n", row.depth, bins.join(" ")));
        }
        out.push('\n');
    }
    if let Some(f) = &report.failure {
        out.push_str(&format!("INCOMPLETE: {f}\n"));
    }
    out
}

pub fn format_csv(report: &Report, lengths: bool) -> String {
    let mut out = String::new();
    if lengths {
        out.push_str("output,chaining,depth,length,count\n");
        for pair in &report.pairs {
            for row in &pair.depths {
                for (len, n) in &row.length_histogram {
                    out.push_str(&format!(
                        "{},{},{},{len},{n}\n",
                        pair.output, pair.chaining, row.depth
                    ));
                }
            }
        }
        return out;
    }
    out.push_str("output,chaining,depth,n,chain_accuracy,answer_accuracy,mean_length,max_calls,capped\n");
    for pair in &report.pairs {
        for row in &pair.depths {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                pair.output,
                pair.chaining,
                row.depth,
                row.n,
                row.chain_accuracy,
                row.answer_accuracy,
                row.mean_length,
                row.max_calls,
                row.capped
            ));
        }
    }
    out
}

fn cmd_report(a: ReportArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.report).map_err(|e| io_error(&a.report, e))?;
    let report: Report = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", a.report.display())))?;
    match a.format {
        Format::Text => print!("{}", format_text(&report)),
        Format::Csv => print!("{}", format_csv(&report, a.lengths)),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(args: &[&str]) -> Vec<String> {
        args.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn depth_ranges() {
        assert_eq!(parse_depths("1..5").unwrap(), vec![1, 2, 3, 4, 5]);
        assert_eq!(parse_depths("3").unwrap(), vec![3]);
        assert_eq!(parse_depths("2,4").unwrap(), vec![2, 4]);
        assert!(parse_depths("5..1").is_err());
        assert!(parse_depths("0..2").is_err());
        assert!(parse_depths("x").is_err());
    }

    #[test]
    fn config_flags_come_first() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, "per_depth = 3\ndepths = \"1..2\"\nseed = 9\n").unwrap();
        let args = strings(&["symchain", "gen", "--config", path.to_str().unwrap(), "--seed", "4", "-o", "x"]);
        let expanded = expand_config(args).unwrap();
        assert_eq!(
            expanded,
            strings(&["symchain", "gen", "--depths=1..2", "--per-depth=3", "--seed", "4", "-o", "x"])
        );
        let Command::Gen(g) = Cli::try_parse_from(expanded).unwrap().command else {
            panic!("wrong subcommand");
        };
        assert_eq!(g.seed, 4);
        assert_eq!(g.per_depth, Some(3));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main_with_args(strings(&["symchain", "--help"])), 0);
        assert_eq!(main_with_args(strings(&["symchain", "frobnicate"])), 1);
        assert_eq!(main_with_args(strings(&["symchain", "solve", "A=1, A"])), 2);
        assert_eq!(main_with_args(strings(&["symchain", "solve", "A=1, B=2+A, B?"])), 0);
    }
}
