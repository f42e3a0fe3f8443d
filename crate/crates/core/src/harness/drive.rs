//! Decoding loops for the three output strategies.
//!
//! Contexts are built with [`step_context`] and [`token_context`], the same
//! functions that render the training data.

use crate::lang::{parse_line, tokenize, DerivationLine, Question, Token, TokenKind, detokenize};
use crate::rendering::{step_context, token_context, OutputStrategy};
use crate::verifier::{PredictedLine, Prediction};

use super::port::{ModelPort, ModelRequest, TransportError};

pub const DEFAULT_STEP_CAP: usize = 100;
pub const DEFAULT_TOKEN_CAP: usize = 500;

/// Default request cap for an output strategy.
pub fn default_cap(output: OutputStrategy) -> usize {
    match output {
        OutputStrategy::AllAtOnce => 1,
        OutputStrategy::StepByStep => DEFAULT_STEP_CAP,
        OutputStrategy::TokenByToken => DEFAULT_TOKEN_CAP,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Drive {
    pub prediction: Prediction,
    pub calls: usize,
    /// Stopped by the cap rather than by an answer, an end marker or an error.
    pub capped: bool,
}

fn is_answer_line(q: &Question, line: &DerivationLine) -> bool {
    line.lhs == *q.target() && line.rhs.as_value().is_some()
}

pub fn drive_all_at_once(
    port: &mut dyn ModelPort,
    q: &Question,
    id: &str,
) -> Result<Drive, TransportError> {
    let request = ModelRequest::new(format!("{id}/0"), q.to_string(), OutputStrategy::AllAtOnce);
    let response = port.call(&request)?;
    let prediction = match response.error {
        Some(_) => Prediction {
            lines: vec![PredictedLine::Malformed(response.output)],
        },
        None => Prediction::parse(&response.output),
    };
    Ok(Drive {
        prediction,
        calls: 1,
        capped: false,
    })
}

/// One line per call until the target's value appears or `max_steps` calls are spent.
pub fn drive_step_by_step(
    port: &mut dyn ModelPort,
    q: &Question,
    id: &str,
    max_steps: usize,
) -> Result<Drive, TransportError> {
    let mut lines: Vec<DerivationLine> = Vec::new();
    let mut malformed = None;
    let mut done = false;
    let mut calls = 0;
    while calls < max_steps {
        let request = ModelRequest::new(
            format!("{id}/{calls}"),
            step_context(q, &lines),
            OutputStrategy::StepByStep,
        );
        let response = port.call(&request)?;
        calls += 1;
        let text = response.output.trim();
        if response.error.is_some() || text.contains([',', '\n']) {
            malformed = Some(text.to_string());
            break;
        }
        match parse_line(text) {
            Ok(line) => {
                done = is_answer_line(q, &line);
                lines.push(line);
                if done {
                    break;
                }
            }
            Err(_) => {
                malformed = Some(text.to_string());
                break;
            }
        }
    }
    let capped = !done && malformed.is_none();
    let mut prediction = Prediction {
        lines: lines.into_iter().map(PredictedLine::Line).collect(),
    };
    prediction.lines.extend(malformed.map(PredictedLine::Malformed));
    Ok(Drive {
        prediction,
        calls,
        capped,
    })
}

/// One token per call. A comma or an empty response closes the current line;
/// an empty response also ends the output.
pub fn drive_token_by_token(
    port: &mut dyn ModelPort,
    q: &Question,
    id: &str,
    max_steps: usize,
) -> Result<Drive, TransportError> {
    let mut tokens: Vec<Token> = Vec::new();
    let mut line_start = 0;
    let mut prediction = Prediction::default();
    let mut calls = 0;
    let mut finished = false;

    let close_line = |tokens: &[Token], prediction: &mut Prediction| -> (bool, bool) {
        let text = detokenize(tokens);
        match parse_line(&text) {
            Ok(line) => {
                let answer = is_answer_line(q, &line);
                prediction.lines.push(PredictedLine::Line(line));
                (answer, true)
            }
            Err(_) => {
                prediction.lines.push(PredictedLine::Malformed(text));
                (false, false)
            }
        }
    };

    while calls < max_steps {
        let request = ModelRequest::new(
            format!("{id}/{calls}"),
            token_context(q, &tokens),
            OutputStrategy::TokenByToken,
        );
        let response = port.call(&request)?;
        calls += 1;
        if response.error.is_some() {
            prediction
                .lines
                .push(PredictedLine::Malformed(response.output.trim().to_string()));
            finished = true;
            break;
        }
        let text = response.output.trim();
        if text.is_empty() {
            if line_start < tokens.len() {
                close_line(&tokens[line_start..], &mut prediction);
            }
            finished = true;
            break;
        }
        let token = match tokenize(text) {
            Ok(mut lexed) if lexed.len() == 1 => lexed.pop().expect("one token"),
            _ => {
                prediction.lines.push(PredictedLine::Malformed(text.to_string()));
                finished = true;
                break;
            }
        };
        if token.kind == TokenKind::Comma {
            let (answer, parsed) = close_line(&tokens[line_start..], &mut prediction);
            tokens.push(token);
            line_start = tokens.len();
            if answer || !parsed {
                finished = true;
                break;
            }
        } else {
            tokens.push(token);
        }
    }
    Ok(Drive {
        prediction,
        calls,
        capped: !finished,
    })
}

pub fn drive(
    port: &mut dyn ModelPort,
    q: &Question,
    id: &str,
    output: OutputStrategy,
    max_steps: usize,
) -> Result<Drive, TransportError> {
    match output {
        OutputStrategy::AllAtOnce => drive_all_at_once(port, q, id),
        OutputStrategy::StepByStep => drive_step_by_step(port, q, id, max_steps),
        OutputStrategy::TokenByToken => drive_token_by_token(port, q, id, max_steps),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::port::ModelResponse;
    use crate::lang::parse_question;

    /// Replies from a fixed script and records every input.
    struct Scripted {
        replies: Vec<&'static str>,
        seen: Vec<String>,
    }

    impl Scripted {
        fn new(replies: &[&'static str]) -> Self {
            Self {
                replies: replies.to_vec(),
                seen: Vec::new(),
            }
        }
    }

    impl ModelPort for Scripted {
        fn call(&mut self, request: &ModelRequest) -> Result<ModelResponse, TransportError> {
            let reply = self
                .replies
                .get(self.seen.len())
                .or(self.replies.last())
                .copied()
                .unwrap_or("");
            self.seen.push(request.input.clone());
            Ok(ModelResponse::ok(&request.id, reply))
        }
    }

    fn two_step() -> Question {
        parse_question("A=1, B=2+A, B?").unwrap()
    }

    #[test]
    fn step_loop_accretes_and_stops_at_the_answer() {
        let mut port = Scripted::new(&["A=1", "B=2+A", "B=2+1", "B=3", "B=3"]);
        let d = drive_step_by_step(&mut port, &two_step(), "t", 100).unwrap();
        assert_eq!(d.calls, 4);
        assert!(!d.capped);
        assert_eq!(d.prediction.to_string(), "A=1, B=2+A, B=2+1, B=3");
        assert_eq!(port.seen[0], "A=1, B=2+A, B? ; ");
        assert_eq!(port.seen[3], "A=1, B=2+A, B? ; A=1, B=2+A, B=2+1");
    }

    #[test]
    fn step_loop_respects_the_cap() {
        let mut port = Scripted::new(&["A=1"]);
        let d = drive_step_by_step(&mut port, &two_step(), "t", 100).unwrap();
        assert_eq!(d.calls, 100);
        assert!(d.capped);
        assert_eq!(d.prediction.lines.len(), 100);
    }

    #[test]
    fn step_loop_multi_line_is_malformed() {
        let mut port = Scripted::new(&["A=1, B=2+A"]);
        let d = drive_step_by_step(&mut port, &two_step(), "t", 100).unwrap();
        assert_eq!(d.calls, 1);
        assert!(!d.capped);
        assert_eq!(
            d.prediction.lines,
            vec![PredictedLine::Malformed("A=1, B=2+A".into())]
        );
    }

    #[test]
    fn token_loop_reassembles_lines() {
        let replies = [
            "A", "=", "1", ",", "B", "=", "2", "+", "A", ",", "B", "=", "2", "+", "1", ",", "B",
            "=", "3", "",
        ];
        let mut port = Scripted::new(&replies);
        let d = drive_token_by_token(&mut port, &two_step(), "t", 500).unwrap();
        assert_eq!(d.calls, replies.len());
        assert_eq!(d.prediction.to_string(), "A=1, B=2+A, B=2+1, B=3");
        assert_eq!(port.seen[4], "A=1, B=2+A, B? ; A=1, ");
        assert_eq!(port.seen[6], "A=1, B=2+A, B? ; A=1, B=");
        assert!(!d.capped);
    }

    #[test]
    fn token_loop_rejects_multi_token_replies() {
        let mut port = Scripted::new(&["B", "B="]);
        let d = drive_token_by_token(&mut port, &two_step(), "t", 500).unwrap();
        assert_eq!(d.calls, 2);
        assert_eq!(d.prediction.lines, vec![PredictedLine::Malformed("B=".into())]);
    }

    #[test]
    fn token_loop_drops_the_partial_line_at_the_cap() {
        let mut port = Scripted::new(&["A", "=", "1", ",", "B", "=", "2", "+", "+"]);
        let d = drive_token_by_token(&mut port, &two_step(), "t", 8).unwrap();
        assert_eq!(d.calls, 8);
        assert!(d.capped);
        assert_eq!(d.prediction.to_string(), "A=1");
    }

    #[test]
    fn all_at_once_empty_reply() {
        let mut port = Scripted::new(&[""]);
        let d = drive_all_at_once(&mut port, &two_step(), "t").unwrap();
        assert_eq!(d.prediction.lines, vec![PredictedLine::Malformed(String::new())]);
        assert_eq!(port.seen[0], "A=1, B=2+A, B?");
    }

    #[test]
    fn caps_by_mode() {
        assert_eq!(default_cap(OutputStrategy::AllAtOnce), 1);
        assert_eq!(default_cap(OutputStrategy::StepByStep), 100);
        assert_eq!(default_cap(OutputStrategy::TokenByToken), 500);
    }
}
