use std::io::{BufRead, BufReader};
use std::process::{Command, Stdio};

use symchain::chaining::ChainingStrategy;
use symchain::generator::gen_split;
use symchain::harness::{
    default_cap, drive, evaluate, run, run_on, Hello, HttpFactory, HttpServer, ModelPort,
    ModelRequest, ModelResponse, Pair, PortFactory, ProcessFactory, ProcessPort, RunConfig,
    TransportError,
};
use symchain::refmodels::{FaultConfig, FaultyModel, GarbageModel, PerfectModel};
use symchain::rendering::{render_examples, OutputStrategy};
use symchain::verifier::ErrorClass;

const BIN: &str = env!("CARGO_BIN_EXE_symchain");

/// Records every exchange with the wrapped model.
struct Recorder<P> {
    inner: P,
    log: Vec<(String, String)>,
}

impl<P: ModelPort> ModelPort for Recorder<P> {
    fn call(&mut self, request: &ModelRequest) -> Result<ModelResponse, TransportError> {
        let response = self.inner.call(request)?;
        self.log.push((request.input.clone(), response.output.clone()));
        Ok(response)
    }
}

fn perfect_factory(pair: &Pair) -> Result<Box<dyn ModelPort>, TransportError> {
    Ok(Box::new(PerfectModel::new(pair.chaining)))
}

#[test]
fn driven_contexts_match_rendered_examples() {
    for inst in gen_split(11, &[1, 3, 7, 12], 5).unwrap() {
        for chaining in ChainingStrategy::ALL {
            for output in OutputStrategy::ALL {
                let mut port = Recorder {
                    inner: PerfectModel::new(chaining),
                    log: Vec::new(),
                };
                let driven = drive(&mut port, &inst.question, &inst.id, output, default_cap(output)).unwrap();
                assert!(!driven.capped);
                let rendered: Vec<(String, String)> = render_examples(&inst, output, chaining)
                    .into_iter()
                    .map(|e| (e.input_text, e.target_text))
                    .collect();
                match output {
                    OutputStrategy::TokenByToken => {
                        assert_eq!(port.log.len(), rendered.len() + 1);
                        assert_eq!(&port.log[..rendered.len()], &rendered[..]);
                        assert_eq!(port.log.last().unwrap().1, "");
                    }
                    _ => assert_eq!(port.log, rendered, "{output} {chaining} {}", inst.question),
                }
                assert_eq!(driven.prediction.to_string(), inst.gold(chaining).to_string());
            }
        }
    }
}

#[test]
fn garbage_never_escapes_the_caps() {
    let dataset = gen_split(5, &[1, 2, 6, 12], 25).unwrap();
    for output in OutputStrategy::ALL {
        for seed in 0..4u64 {
            let factory = move |_: &Pair| -> Result<Box<dyn ModelPort>, TransportError> {
                Ok(Box::new(GarbageModel::new(seed)))
            };
            let pair = Pair {
                output,
                chaining: ChainingStrategy::Shortest,
                max_steps: 30,
            };
            let eval = evaluate(&factory, &dataset, pair, 4);
            assert!(eval.failure.is_none());
            assert_eq!(eval.outcomes.len(), dataset.len());
            for o in &eval.outcomes {
                assert!(o.calls >= 1 && o.calls <= 30, "{o:?}");
                if !o.verdict.chain_correct {
                    assert!(!o.verdict.errors.is_empty());
                }
            }
        }
    }
}

fn script(body: &str) -> String {
    let hello = serde_json::to_string(&Hello::new(&OutputStrategy::ALL)).unwrap();
    format!("printf '%s\\n' '{hello}'; {body}")
}

fn first_call(command: &str) -> Result<ModelResponse, TransportError> {
    let mut port = ProcessPort::spawn(command, &[])?;
    port.call(&ModelRequest::new("x/0", "A=1, A?", OutputStrategy::AllAtOnce))
}

#[test]
fn framing_faults_surface_as_transport_errors() {
    let cases: Vec<(&str, String)> = vec![
        ("no handshake", "echo not-json; cat".to_string()),
        (
            "wrong protocol",
            r#"echo '{"hello":"other/9","modes":["ALL_AT_ONCE"]}'; cat"#.to_string(),
        ),
        ("silent exit", script("exit 0")),
        ("bad json", script("read line; echo '{oops'")),
        ("wrong id", script(r#"read line; echo '{"id":"nope","output":"A=1"}'"#)),
        ("missing field", script(r#"read line; echo '{"id":"x/0"}'"#)),
    ];
    for (name, command) in cases {
        let result = first_call(&command);
        let err = result.expect_err(name);
        let ok = match name {
            "no handshake" | "wrong protocol" => matches!(err, TransportError::Handshake(_) | TransportError::Decode { .. }),
            "silent exit" => matches!(err, TransportError::Closed | TransportError::Io(_)),
            "bad json" | "missing field" => matches!(err, TransportError::Decode { .. }),
            "wrong id" => matches!(err, TransportError::IdMismatch { .. }),
            _ => unreachable!(),
        };
        assert!(ok, "{name}: {err:?}");
    }
    let missing = ProcessPort::spawn("/definitely/not/here 2>/dev/null", &[]);
    assert!(missing.is_err());
}

#[test]
fn transport_failure_marks_the_report_incomplete() {
    let factory = ProcessFactory {
        command: script("read line; exit 0"),
    };
    let cfg = RunConfig::new(
        vec![Pair::new(OutputStrategy::AllAtOnce, ChainingStrategy::Shortest)],
        vec![1, 2],
        3,
        vec![0],
    );
    let report = run(&factory, &cfg).unwrap();
    assert!(!report.complete);
    assert!(report.failure.is_some());
}

#[test]
fn stdio_reference_model_end_to_end() {
    let factory = ProcessFactory {
        command: format!("{BIN} serve-ref --kind perfect"),
    };
    let cfg = RunConfig::new(
        vec![
            Pair::new(OutputStrategy::StepByStep, ChainingStrategy::Backward),
            Pair::new(OutputStrategy::TokenByToken, ChainingStrategy::Exhaustive),
            Pair::new(OutputStrategy::AllAtOnce, ChainingStrategy::None),
        ],
        vec![1, 4, 8],
        6,
        vec![1],
    )
    .with_jobs(3);
    let report = run(&factory, &cfg).unwrap();
    assert!(report.complete, "{:?}", report.failure);
    for pair in &report.pairs {
        for row in &pair.depths {
            assert_eq!(row.chain_accuracy, 1.0, "{} {}", pair.output, pair.chaining);
            assert_eq!(row.capped, 0);
        }
    }
}

#[test]
fn http_reference_model_end_to_end() {
    let mut child = Command::new(BIN)
        .args(["serve-ref", "--kind", "perfect", "--chaining", "exhaustive", "--http", "127.0.0.1:0"])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let url = line.trim().strip_prefix("listening on ").expect("banner").to_string();
    let factory = HttpFactory { base_url: url.clone() };
    let dataset = gen_split(9, &[2, 5], 5).unwrap();
    let pair = Pair::new(OutputStrategy::TokenByToken, ChainingStrategy::Exhaustive);
    let eval = evaluate(&factory, &dataset, pair, 2);
    let not_found = ureq::get(&format!("{url}/other")).call();
    let _ = child.kill();
    let _ = child.wait();
    assert!(eval.failure.is_none(), "{:?}", eval.failure);
    assert!(eval.outcomes.iter().all(|o| o.verdict.chain_correct));
    assert!(matches!(not_found, Err(ureq::Error::Status(404, _))));
}

#[test]
fn in_process_http_server() {
    let server = HttpServer::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", server.local_addr().unwrap());
    std::thread::spawn(move || {
        server.run(2, || Box::new(PerfectModel::new(ChainingStrategy::Shortest)));
    });
    let dataset = gen_split(4, &[3], 4).unwrap();
    let eval = evaluate(
        &HttpFactory { base_url: url },
        &dataset,
        Pair::new(OutputStrategy::StepByStep, ChainingStrategy::Shortest),
        2,
    );
    assert!(eval.outcomes.iter().all(|o| o.verdict.chain_correct));
}

/// Expected (chain, answer) accuracy of copy faults at p = 0.3 for depths 1..=6
/// on shortest chains.
const FAULTY_P03: [(f64, f64); 6] = [
    (0.700000, 0.700000),
    (0.490000, 0.490909),
    (0.343000, 0.345179),
    (0.240100, 0.243610),
    (0.168070, 0.172819),
    (0.117649, 0.123480),
];

#[test]
fn copy_fault_rates_match_the_analytic_model() {
    let n = 1500;
    let depths: Vec<usize> = (1..=6).collect();
    let dataset = gen_split(77, &depths, n).unwrap();
    let cfg = FaultConfig::new(0.3, 0.0, 0.0, 5).unwrap();
    let factory = move |pair: &Pair| -> Result<Box<dyn ModelPort>, TransportError> {
        Ok(Box::new(FaultyModel::over_perfect(pair.chaining, cfg)))
    };
    let pair = Pair::new(OutputStrategy::AllAtOnce, ChainingStrategy::Shortest);
    let report = run_on(
        &factory,
        &RunConfig::new(vec![pair], depths.clone(), n, vec![77]),
        &[(77, &dataset)],
    );
    let rows = &report.pairs[0].depths;
    for (row, (chain, answer)) in rows.iter().zip(FAULTY_P03) {
        let tolerance = |p: f64| 4.0 * (p * (1.0 - p) / n as f64).sqrt();
        assert!(
            (row.chain_accuracy - chain).abs() <= tolerance(chain),
            "depth {} chain {} vs {chain}",
            row.depth,
            row.chain_accuracy
        );
        assert!(
            (row.answer_accuracy - answer).abs() <= tolerance(answer),
            "depth {} answer {} vs {answer}",
            row.depth,
            row.answer_accuracy
        );
    }
    let errors = &report.pairs[0].error_histogram;
    assert!(errors.keys().all(|e| *e == ErrorClass::CopyingError), "{errors:?}");
}

#[test]
fn custom_factories_can_be_plain_closures() {
    fn takes(_: &dyn PortFactory) {}
    takes(&perfect_factory);
    let dataset = gen_split(1, &[2], 3).unwrap();
    let eval = evaluate(
        &perfect_factory,
        &dataset,
        Pair::new(OutputStrategy::AllAtOnce, ChainingStrategy::Backward),
        1,
    );
    assert!(eval.outcomes.iter().all(|o| o.verdict.chain_correct && o.calls == 1));
}
