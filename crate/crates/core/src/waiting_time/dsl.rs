//! Text form of waiting-time trees.
//!
//! ```text
//! wtd    := "exp(" RATE ")" | "erlang(" INT "," RATE ")"
//!         | "conv(" wtd ("," wtd)* ")" | "mix(" branch ("," branch)* ")"
//! branch := WEIGHT ":" wtd
//! ```
//!
//! Whitespace is insignificant. Arity and value constraints are checked by
//! [`super::validate`], not here. The `Display` impl prints the canonical
//! form, which parses back to an identical tree.

use std::fmt;

use super::WaitingTimeSpec;
use crate::error::{Error, Result};

pub fn parse_wtd(input: &str) -> Result<WaitingTimeSpec> {
    let mut p = Parser::new(input);
    let spec = p.wtd()?;
    p.skip_ws();
    if let Some(c) = p.peek() {
        return Err(p.error(format!("unexpected '{c}' after expression")));
    }
    Ok(spec)
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            chars: src.chars().collect(),
            pos: 0,
            src,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn location(&self) -> (usize, usize) {
        let mut line = 1;
        let mut col = 1;
        for &c in &self.chars[..self.pos.min(self.chars.len())] {
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        (line, col)
    }

    fn error(&self, message: String) -> Error {
        let (line, col) = self.location();
        Error::Syntax { message, line, col }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected '{c}'")))
        }
    }

    fn ident(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.peek(), Some('+' | '-')) {
            self.pos += 1;
        }
        let mut digits = 0;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
            digits += 1;
        }
        if self.peek() == Some('.') {
            self.pos += 1;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
                digits += 1;
            }
        }
        if digits == 0 {
            self.pos = start;
            return Err(self.error("expected number".into()));
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some('+' | '-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos == exp_start {
                self.pos = save;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<f64>().map_err(|_| {
            let mut at = Parser::new(self.src);
            at.pos = start;
            at.error(format!("invalid number '{text}'"))
        })
    }

    fn integer(&mut self) -> Result<u32> {
        self.skip_ws();
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected integer".into()));
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<u32>().map_err(|_| {
            let mut at = Parser::new(self.src);
            at.pos = start;
            at.error(format!("integer out of range '{text}'"))
        })
    }

    fn wtd(&mut self) -> Result<WaitingTimeSpec> {
        self.skip_ws();
        let start = self.pos;
        let name = self.ident();
        match name.as_str() {
            "exp" => {
                self.expect('(')?;
                let rate = self.number()?;
                self.expect(')')?;
                Ok(WaitingTimeSpec::Exponential { rate })
            }
            "erlang" => {
                self.expect('(')?;
                let stages = self.integer()?;
                self.expect(',')?;
                let rate = self.number()?;
                self.expect(')')?;
                Ok(WaitingTimeSpec::Erlang { stages, rate })
            }
            "conv" => {
                self.expect('(')?;
                let mut children = vec![self.wtd()?];
                while self.comma_or_close()? {
                    children.push(self.wtd()?);
                }
                Ok(WaitingTimeSpec::Convolution { children })
            }
            "mix" => {
                self.expect('(')?;
                let mut branches = vec![self.branch()?];
                while self.comma_or_close()? {
                    branches.push(self.branch()?);
                }
                Ok(WaitingTimeSpec::Mixture { branches })
            }
            "" => Err(self.error("expected 'exp', 'erlang', 'conv' or 'mix'".into())),
            other => {
                self.pos = start;
                Err(self.error(format!("unknown distribution '{other}'")))
            }
        }
    }

    fn branch(&mut self) -> Result<super::Branch> {
        let weight = self.number()?;
        self.expect(':')?;
        let child = self.wtd()?;
        Ok(super::Branch { weight, child })
    }

    /// `true` after a comma, `false` after the closing parenthesis.
    fn comma_or_close(&mut self) -> Result<bool> {
        self.skip_ws();
        match self.peek() {
            Some(',') => {
                self.pos += 1;
                Ok(true)
            }
            Some(')') => {
                self.pos += 1;
                Ok(false)
            }
            _ => Err(self.error("expected ',' or ')'".into())),
        }
    }
}

impl fmt::Display for WaitingTimeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WaitingTimeSpec::Exponential { rate } => write!(f, "exp({rate:?})"),
            WaitingTimeSpec::Erlang { stages, rate } => write!(f, "erlang({stages},{rate:?})"),
            WaitingTimeSpec::Convolution { children } => {
                write!(f, "conv(")?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
            WaitingTimeSpec::Mixture { branches } => {
                write!(f, "mix(")?;
                for (i, b) in branches.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{:?}:{}", b.weight, b.child)?;
                }
                write!(f, ")")
            }
        }
    }
}
