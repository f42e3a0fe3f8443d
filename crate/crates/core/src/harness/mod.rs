//! Drives a model through a decoding loop, scores the chains it produces and
//! aggregates the verdicts into per-depth reports.
//!
//! The model sits behind a [`ModelPort`]: in-process, a spawned command
//! speaking line-delimited JSON, or an HTTP endpoint. Sessions are strictly
//! sequential within an instance; instances run concurrently, one session per
//! worker.

mod drive;
mod port;
mod report;

pub use drive::{
    default_cap, drive, drive_all_at_once, drive_step_by_step, drive_token_by_token, Drive,
    DEFAULT_STEP_CAP, DEFAULT_TOKEN_CAP,
};
pub use port::{
    serve_stdio, Hello, HttpFactory, HttpPort, HttpServer, ModelPort, ModelRequest, ModelResponse,
    PortFactory, ProcessFactory, ProcessPort, StopHint, TransportError, CHAINING_ENV, PROTOCOL,
};
pub use report::{
    aggregate, dataset_hash, evaluate, run, run_on, DepthRow, Evaluation, Metadata, Outcome, Pair,
    PairReport, Report, RunConfig, RunError, SeedScore,
};
