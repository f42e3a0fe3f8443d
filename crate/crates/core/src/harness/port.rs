//! The model wire protocol and its transports.
//!
//! One JSON object per line in each direction. A spawned model first prints
//! a handshake line, then answers every request line with exactly one
//! response line carrying the same `id`:
//!
//! ```text
//! <- {"hello":"symchain/1","modes":["all_at_once","step_by_step","token_by_token"]}
//! -> {"id":"d01-00000/0","input":"A=1, B=2+A, B? ; ","mode":"step_by_step","stop_hint":"LINE"}
//! <- {"id":"d01-00000/0","output":"A=1"}
//! ```
//!
//! Over HTTP the same bodies are exchanged with `POST /generate`, without a
//! handshake.

use std::io::{self, BufRead, BufReader, Write};
use std::net::SocketAddr;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::rendering::OutputStrategy;

use super::report::Pair;

pub const PROTOCOL: &str = "symchain/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum StopHint {
    /// Generate the whole sequence.
    Full,
    /// Stop after one line.
    Line,
    /// Stop after one token.
    Token,
}

impl From<OutputStrategy> for StopHint {
    fn from(mode: OutputStrategy) -> Self {
        match mode {
            OutputStrategy::AllAtOnce => StopHint::Full,
            OutputStrategy::StepByStep => StopHint::Line,
            OutputStrategy::TokenByToken => StopHint::Token,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelRequest {
    pub id: String,
    pub input: String,
    pub mode: OutputStrategy,
    pub stop_hint: StopHint,
}

impl ModelRequest {
    pub fn new(id: impl Into<String>, input: impl Into<String>, mode: OutputStrategy) -> Self {
        Self {
            id: id.into(),
            input: input.into(),
            mode,
            stop_hint: mode.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelResponse {
    pub id: String,
    pub output: String,
    /// Set when the model could not make sense of the request.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ModelResponse {
    pub fn ok(id: impl Into<String>, output: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            output: output.into(),
            error: None,
        }
    }

    pub fn failed(id: impl Into<String>, error: impl ToString) -> Self {
        Self {
            id: id.into(),
            output: String::new(),
            error: Some(error.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hello {
    pub hello: String,
    pub modes: Vec<OutputStrategy>,
}

impl Hello {
    pub fn new(modes: &[OutputStrategy]) -> Self {
        Self {
            hello: PROTOCOL.to_string(),
            modes: modes.to_vec(),
        }
    }
}

/// A broken channel. Wrong answers are never transport errors.
#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("cannot start model command {command:?}: {source}")]
    Spawn {
        command: String,
        #[source]
        source: io::Error,
    },
    #[error("model channel: {0}")]
    Io(#[from] io::Error),
    #[error("model closed the channel")]
    Closed,
    #[error("bad handshake: {0}")]
    Handshake(String),
    #[error("undecodable response {line:?}: {message}")]
    Decode { line: String, message: String },
    #[error("response id {got:?} does not answer request {expected:?}")]
    IdMismatch { expected: String, got: String },
    #[error("http: {0}")]
    Http(String),
}

/// One request-response session with a model.
pub trait ModelPort: Send {
    fn call(&mut self, request: &ModelRequest) -> Result<ModelResponse, TransportError>;
}

impl<P: ModelPort + ?Sized> ModelPort for Box<P> {
    fn call(&mut self, request: &ModelRequest) -> Result<ModelResponse, TransportError> {
        (**self).call(request)
    }
}

/// Opens independent sessions, one per worker, for the pair being evaluated.
pub trait PortFactory: Sync {
    fn open(&self, pair: &Pair) -> Result<Box<dyn ModelPort>, TransportError>;
}

impl<F> PortFactory for F
where
    F: Fn(&Pair) -> Result<Box<dyn ModelPort>, TransportError> + Sync,
{
    fn open(&self, pair: &Pair) -> Result<Box<dyn ModelPort>, TransportError> {
        self(pair)
    }
}

fn check_id(request: &ModelRequest, response: ModelResponse) -> Result<ModelResponse, TransportError> {
    if response.id != request.id {
        return Err(TransportError::IdMismatch {
            expected: request.id.clone(),
            got: response.id,
        });
    }
    Ok(response)
}

/// A model running as a child process, spoken to over its standard streams.
pub struct ProcessPort {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    hello: Hello,
}

impl ProcessPort {
    /// Runs `command` through `sh -c` and reads the handshake.
    pub fn spawn(command: &str, envs: &[(String, String)]) -> Result<Self, TransportError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .envs(envs.iter().map(|(k, v)| (k, v)))
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| TransportError::Spawn {
                command: command.to_string(),
                source,
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let mut stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        let mut line = String::new();
        if stdout.read_line(&mut line)? == 0 {
            let _ = child.kill();
            let _ = child.wait();
            return Err(TransportError::Handshake(
                "model exited before the handshake".into(),
            ));
        }
        let hello: Hello = match serde_json::from_str(line.trim_end()) {
            Ok(h) => h,
            Err(e) => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(TransportError::Handshake(format!("{:?}: {e}", line.trim_end())));
            }
        };
        if hello.hello != PROTOCOL {
            let _ = child.kill();
            let _ = child.wait();
            return Err(TransportError::Handshake(format!(
                "unsupported protocol {:?}",
                hello.hello
            )));
        }
        Ok(Self {
            child,
            stdin,
            stdout,
            hello,
        })
    }

    pub fn hello(&self) -> &Hello {
        &self.hello
    }
}

impl ModelPort for ProcessPort {
    fn call(&mut self, request: &ModelRequest) -> Result<ModelResponse, TransportError> {
        let mut text = serde_json::to_string(request).expect("requests serialize");
        text.push('\n');
        self.stdin.write_all(text.as_bytes())?;
        self.stdin.flush()?;
        let mut line = String::new();
        if self.stdout.read_line(&mut line)? == 0 {
            return Err(TransportError::Closed);
        }
        let response: ModelResponse =
            serde_json::from_str(line.trim_end()).map_err(|e| TransportError::Decode {
                line: line.trim_end().to_string(),
                message: e.to_string(),
            })?;
        check_id(request, response)
    }
}

impl Drop for ProcessPort {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Environment variable telling a spawned model which chaining strategy to follow.
pub const CHAINING_ENV: &str = "SYMCHAIN_CHAINING";

/// Spawns one child per session, with [`CHAINING_ENV`] set from the pair.
#[derive(Debug, Clone)]
pub struct ProcessFactory {
    pub command: String,
}

impl PortFactory for ProcessFactory {
    fn open(&self, pair: &Pair) -> Result<Box<dyn ModelPort>, TransportError> {
        let envs = [(CHAINING_ENV.to_string(), pair.chaining.to_string())];
        Ok(Box::new(ProcessPort::spawn(&self.command, &envs)?))
    }
}

/// A model behind `POST {base}/generate`.
#[derive(Clone)]
pub struct HttpPort {
    agent: ureq::Agent,
    endpoint: String,
}

impl HttpPort {
    pub fn new(base_url: &str) -> Self {
        Self {
            agent: ureq::Agent::new(),
            endpoint: format!("{}/generate", base_url.trim_end_matches('/')),
        }
    }
}

impl ModelPort for HttpPort {
    fn call(&mut self, request: &ModelRequest) -> Result<ModelResponse, TransportError> {
        let response = self
            .agent
            .post(&self.endpoint)
            .send_json(request)
            .map_err(|e| TransportError::Http(e.to_string()))?;
        let body = response.into_string()?;
        let response: ModelResponse =
            serde_json::from_str(&body).map_err(|e| TransportError::Decode {
                line: body.clone(),
                message: e.to_string(),
            })?;
        check_id(request, response)
    }
}

#[derive(Debug, Clone)]
pub struct HttpFactory {
    pub base_url: String,
}

impl PortFactory for HttpFactory {
    fn open(&self, _pair: &Pair) -> Result<Box<dyn ModelPort>, TransportError> {
        Ok(Box::new(HttpPort::new(&self.base_url)))
    }
}

fn answer(model: &mut dyn ModelPort, body: &str) -> ModelResponse {
    match serde_json::from_str::<ModelRequest>(body) {
        Ok(request) => model
            .call(&request)
            .unwrap_or_else(|e| ModelResponse::failed(request.id.clone(), e)),
        Err(e) => ModelResponse::failed("", format!("bad request: {e}")),
    }
}

/// Serves `model` over line-delimited JSON until `input` ends.
pub fn serve_stdio(
    model: &mut dyn ModelPort,
    modes: &[OutputStrategy],
    input: impl BufRead,
    mut output: impl Write,
) -> io::Result<()> {
    serde_json::to_writer(&mut output, &Hello::new(modes))?;
    output.write_all(b"\n")?;
    output.flush()?;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        serde_json::to_writer(&mut output, &answer(model, &line))?;
        output.write_all(b"\n")?;
        output.flush()?;
    }
    Ok(())
}

/// A bound HTTP endpoint; [`HttpServer::run`] blocks serving it.
pub struct HttpServer {
    server: Arc<tiny_http::Server>,
}

impl HttpServer {
    pub fn bind(addr: &str) -> Result<Self, TransportError> {
        let server = tiny_http::Server::http(addr).map_err(|e| TransportError::Http(e.to_string()))?;
        Ok(Self {
            server: Arc::new(server),
        })
    }

    pub fn local_addr(&self) -> Option<SocketAddr> {
        self.server.server_addr().to_ip()
    }

    /// Handles requests on `threads` workers, each with its own model.
    pub fn run<F>(self, threads: usize, make_model: F)
    where
        F: Fn() -> Box<dyn ModelPort> + Sync,
    {
        std::thread::scope(|scope| {
            for _ in 0..threads.max(1) {
                let server = Arc::clone(&self.server);
                let make_model = &make_model;
                scope.spawn(move || {
                    let mut model = make_model();
                    while let Ok(request) = server.recv() {
                        handle_http(model.as_mut(), request);
                    }
                });
            }
        });
    }
}

fn handle_http(model: &mut dyn ModelPort, mut request: tiny_http::Request) {
    let json = tiny_http::Header::from_bytes("Content-Type", "application/json")
        .expect("static header");
    let routed = *request.method() == tiny_http::Method::Post && request.url() == "/generate";
    if !routed {
        let _ = request.respond(tiny_http::Response::from_string("not found").with_status_code(404));
        return;
    }
    let mut body = String::new();
    if let Err(e) = request.as_reader().read_to_string(&mut body) {
        let reply = serde_json::to_string(&ModelResponse::failed("", e)).expect("serializes");
        let _ = request.respond(
            tiny_http::Response::from_string(reply)
                .with_status_code(400)
                .with_header(json),
        );
        return;
    }
    let reply = serde_json::to_string(&answer(model, &body)).expect("serializes");
    let _ = request.respond(tiny_http::Response::from_string(reply).with_header(json));
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Echo;

    impl ModelPort for Echo {
        fn call(&mut self, request: &ModelRequest) -> Result<ModelResponse, TransportError> {
            Ok(ModelResponse::ok(&request.id, request.input.to_uppercase()))
        }
    }

    #[test]
    fn wire_shapes() {
        let req = ModelRequest::new("x/0", "A=1, A? ; ", OutputStrategy::StepByStep);
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"id":"x/0","input":"A=1, A? ; ","mode":"step_by_step","stop_hint":"LINE"}"#
        );
        assert_eq!(
            serde_json::to_string(&ModelResponse::ok("x/0", "A=1")).unwrap(),
            r#"{"id":"x/0","output":"A=1"}"#
        );
        let back: ModelResponse = serde_json::from_str(r#"{"id":"a","output":""}"#).unwrap();
        assert_eq!(back.error, None);
        assert!(serde_json::from_str::<ModelResponse>(r#"{"id":"a"}"#).is_err());
        assert_eq!(
            serde_json::to_string(&Hello::new(&[OutputStrategy::TokenByToken])).unwrap(),
            r#"{"hello":"symchain/1","modes":["token_by_token"]}"#
        );
    }

    #[test]
    fn stdio_loop() {
        let input = "{\"id\":\"1\",\"input\":\"ab\",\"mode\":\"all_at_once\",\"stop_hint\":\"FULL\"}\n\nnot json\n";
        let mut out = Vec::new();
        serve_stdio(&mut Echo, &OutputStrategy::ALL, input.as_bytes(), &mut out).unwrap();
        let lines: Vec<&str> = std::str::from_utf8(&out).unwrap().lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with(r#"{"hello":"symchain/1""#));
        assert_eq!(lines[1], r#"{"id":"1","output":"AB"}"#);
        let failed: ModelResponse = serde_json::from_str(lines[2]).unwrap();
        assert!(failed.error.unwrap().starts_with("bad request"));
    }

    #[test]
    fn process_port_round_trip() {
        let script = r#"echo '{"hello":"symchain/1","modes":["all_at_once"]}'; while read -r l; do echo '{"id":"q","output":"A=1"}'; done"#;
        let mut port = ProcessPort::spawn(script, &[]).unwrap();
        assert_eq!(port.hello().modes, vec![OutputStrategy::AllAtOnce]);
        let req = ModelRequest::new("q", "A=1, A?", OutputStrategy::AllAtOnce);
        assert_eq!(port.call(&req).unwrap().output, "A=1");
        let other = ModelRequest::new("r", "A=1, A?", OutputStrategy::AllAtOnce);
        assert!(matches!(port.call(&other), Err(TransportError::IdMismatch { .. })));
    }

    #[test]
    fn process_port_failures() {
        assert!(matches!(
            ProcessPort::spawn("echo nope", &[]),
            Err(TransportError::Handshake(_))
        ));
        assert!(matches!(
            ProcessPort::spawn("true", &[]),
            Err(TransportError::Handshake(_))
        ));
        let mut port =
            ProcessPort::spawn(r#"echo '{"hello":"symchain/1","modes":[]}'; read -r l; echo garbage"#, &[])
                .unwrap();
        let req = ModelRequest::new("q", "", OutputStrategy::AllAtOnce);
        assert!(matches!(port.call(&req), Err(TransportError::Decode { .. })));
        assert!(matches!(port.call(&req), Err(TransportError::Closed) | Err(TransportError::Io(_))));
    }

    #[test]
    fn http_round_trip() {
        let server = HttpServer::bind("127.0.0.1:0").unwrap();
        let addr = server.local_addr().unwrap();
        std::thread::spawn(move || server.run(2, || Box::new(Echo)));
        let mut port = HttpPort::new(&format!("http://{addr}"));
        let req = ModelRequest::new("h", "b=1", OutputStrategy::AllAtOnce);
        assert_eq!(port.call(&req).unwrap(), ModelResponse::ok("h", "B=1"));
        let mut wrong = HttpPort::new(&format!("http://{addr}/nowhere"));
        assert!(matches!(wrong.call(&req), Err(TransportError::Http(_))));
    }
}
