//! Hand-written parser for questions, single lines and comma-separated traces.
//!
//! Spaces and tabs are accepted between tokens. Anything else outside the
//! grammar, including line breaks, is a syntax error.

use super::ast::{Equation, Numeral, Operand, Question, Rhs, Trace, VarName};
use super::LangError;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            bytes: text.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.bytes.get(self.pos), Some(b' ' | b'\t')) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn at_end(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    fn error(&self, expected: &str) -> LangError {
        // Report the offending character, not a byte, so multi-byte input stays readable.
        let found = std::str::from_utf8(&self.bytes[self.pos..])
            .ok()
            .and_then(|rest| rest.chars().next());
        LangError::Syntax {
            position: self.pos,
            expected: expected.to_string(),
            found,
        }
    }

    fn expect(&mut self, byte: u8, expected: &str) -> Result<(), LangError> {
        self.skip_ws();
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn var(&mut self) -> Result<VarName, LangError> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(b'A'..=b'Z')) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("variable"));
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii");
        VarName::new(name)
    }

    fn numeral(&mut self) -> Result<Numeral, LangError> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        let digits = &self.bytes[start..self.pos];
        let canonical = match digits {
            [] => false,
            [_] => true,
            [first, _] => *first != b'0',
            _ => false,
        };
        if !canonical {
            self.pos = start;
            return Err(self.error("numeral 0..99 without leading zeros"));
        }
        let value = digits
            .iter()
            .fold(0u32, |acc, d| acc * 10 + u32::from(d - b'0'));
        Ok(Numeral::new(value).expect("two digits at most"))
    }

    fn operand(&mut self) -> Result<Operand, LangError> {
        self.skip_ws();
        match self.peek() {
            Some(b'A'..=b'Z') => self.var().map(Operand::Var),
            Some(b'0'..=b'9') => self.numeral().map(Operand::Num),
            _ => Err(self.error("variable or numeral")),
        }
    }

    fn rhs(&mut self) -> Result<Rhs, LangError> {
        let left = self.operand()?;
        self.skip_ws();
        if self.peek() == Some(b'+') {
            self.pos += 1;
            let right = self.operand()?;
            Ok(Rhs::Add(left, right))
        } else {
            Ok(Rhs::Direct(left))
        }
    }

    /// `VAR "=" rhs`, with the lhs already consumed.
    fn equation_after(&mut self, lhs: VarName) -> Result<Equation, LangError> {
        self.expect(b'=', "`=`")?;
        Ok(Equation::new(lhs, self.rhs()?))
    }

    fn equation(&mut self) -> Result<Equation, LangError> {
        let lhs = self.var()?;
        self.equation_after(lhs)
    }

    fn finish(&mut self) -> Result<(), LangError> {
        self.skip_ws();
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error("end of input"))
        }
    }
}

/// Parses `eq, eq, ..., X?`.
pub fn parse_question(text: &str) -> Result<Question, LangError> {
    let mut cur = Cursor::new(text.trim());
    let mut equations = Vec::new();
    loop {
        let var = cur.var()?;
        cur.skip_ws();
        match cur.peek() {
            Some(b'?') if !equations.is_empty() => {
                cur.pos += 1;
                cur.finish()?;
                return Ok(Question::new(equations, var)?);
            }
            Some(b'=') => {
                equations.push(cur.equation_after(var)?);
                cur.expect(b',', "`,`")?;
            }
            _ if equations.is_empty() => return Err(cur.error("`=`")),
            _ => return Err(cur.error("`=` or `?`")),
        }
    }
}

/// Parses exactly one equation-shaped line.
pub fn parse_line(text: &str) -> Result<Equation, LangError> {
    let mut cur = Cursor::new(text.trim());
    let eq = cur.equation()?;
    cur.finish()?;
    Ok(eq)
}

/// Parses a `", "`-separated list of lines. The empty string is the empty trace.
pub fn parse_trace(text: &str) -> Result<Trace, LangError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Trace::default());
    }
    let mut cur = Cursor::new(text);
    let mut lines = vec![cur.equation()?];
    loop {
        cur.skip_ws();
        if cur.at_end() {
            return Ok(Trace::new(lines));
        }
        cur.expect(b',', "`,` or end of input")?;
        lines.push(cur.equation()?);
    }
}
