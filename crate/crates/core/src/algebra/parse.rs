//! Recursive-descent parser for the polynomial / rational-function grammar.
//!
//! ```text
//! ratfun ::= expr ("/" "(" expr ")")?
//! expr   ::= ("+"|"-")? term (("+"|"-") term)*
//! term   ::= factor ("*"? factor)*
//! factor ::= rat | "i" | var ("^" uint)? | "(" expr ")" ("^" uint)?
//! rat    ::= int ("/" uint)?
//! ```
//!
//! The parenthesized factor covers the `(crat)` coefficient form and also
//! accepts any polynomial, which keeps the printer's output parseable.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use super::{GaussRat, Poly, RatFun, DEGREE_BOUND};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown variable `{name}` at byte {offset}")]
    UnknownVariable { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownVariable { offset, .. } => *offset,
        }
    }
}

/// Parses `text` as a rational function in the declared variables.
pub fn parse_ratfun(text: &str, vars: &[String]) -> Result<RatFun, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, vars };
    let num = p.expr()?;
    p.skip_ws();
    let mut den = Poly::one(vars.len());
    if p.peek() == Some(b'/') {
        p.pos += 1;
        p.skip_ws();
        p.expect(b'(')?;
        let at = p.pos;
        den = p.expr()?;
        p.skip_ws();
        p.expect(b')')?;
        if den.is_zero() {
            return Err(p.err_at(at, "denominator is zero"));
        }
    }
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err("unexpected input"));
    }
    Ok(RatFun::new(num, den).expect("nonzero denominator"))
}

/// Parses `text` and requires a polynomial result.
pub fn parse_poly(text: &str, vars: &[String]) -> Result<Poly, ParseError> {
    let f = parse_ratfun(text, vars)?;
    match f.as_poly() {
        Some(p) => Ok(p.clone()),
        None => Err(ParseError::Syntax { offset: 0, message: "expected a polynomial".into() }),
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [String],
}

impl Parser<'_> {
    fn nvars(&self) -> usize {
        self.vars.len()
    }

    fn err(&self, message: &str) -> ParseError {
        self.err_at(self.pos, message)
    }

    fn err_at(&self, offset: usize, message: &str) -> ParseError {
        ParseError::Syntax { offset, message: message.to_string() }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Poly, ParseError> {
        self.skip_ws();
        let mut negate = false;
        match self.peek() {
            Some(b'-') => {
                negate = true;
                self.pos += 1;
            }
            Some(b'+') => self.pos += 1,
            _ => {}
        }
        let first = self.term()?;
        let mut acc = if negate { -&first } else { first };
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = &acc + &t;
                }
                Some(b'-') => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = &acc - &t;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Poly, ParseError> {
        self.skip_ws();
        if !self.starts_factor() {
            return Err(self.err("expected a term"));
        }
        let mut acc = Poly::one(self.nvars());
        loop {
            self.skip_ws();
            let at = self.pos;
            if self.peek() == Some(b'*') {
                self.pos += 1;
                self.skip_ws();
                if !self.starts_factor() {
                    return Err(self.err("expected a factor after `*`"));
                }
            } else if !self.starts_factor() {
                return Ok(acc);
            }
            let f = self.factor()?;
            acc = acc.try_mul(&f).ok_or_else(|| self.err_at(at, "degree bound exceeded"))?;
        }
    }

    fn starts_factor(&self) -> bool {
        matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_' || c == b'(')
    }

    fn factor(&mut self) -> Result<Poly, ParseError> {
        let n = self.nvars();
        match self.peek() {
            Some(c) if c.is_ascii_digit() => {
                let r = self.rational()?;
                Ok(Poly::constant(n, GaussRat::real(r)))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                self.expect(b')')?;
                self.power(inner)
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                if name == "i" {
                    return Ok(Poly::constant(n, GaussRat::i()));
                }
                let v = self
                    .vars
                    .iter()
                    .position(|x| x == name)
                    .ok_or_else(|| ParseError::UnknownVariable { name: name.to_string(), offset: start })?;
                self.power(Poly::var(n, v))
            }
            _ => Err(self.err("expected a factor")),
        }
    }

    fn power(&mut self, base: Poly) -> Result<Poly, ParseError> {
        self.skip_ws();
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        self.skip_ws();
        let at = self.pos;
        let e = self.uint()?;
        let e: u32 = match e.try_into() {
            Ok(e) if e <= DEGREE_BOUND => e,
            _ => return Err(self.err_at(at, "exponent exceeds degree bound")),
        };
        let max_deg = (0..self.nvars()).map(|v| base.degree_in(v)).max().unwrap_or(0);
        if max_deg.saturating_mul(e) > DEGREE_BOUND {
            return Err(self.err_at(at, "degree bound exceeded"));
        }
        Ok(base.pow(e))
    }

    fn uint(&mut self) -> Result<BigInt, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an unsigned integer"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok(digits.parse().unwrap())
    }

    /// `int ("/" uint)?`; a `/` not followed by a digit is left for the caller.
    fn rational(&mut self) -> Result<BigRational, ParseError> {
        let num = self.uint()?;
        let save = self.pos;
        self.skip_ws();
        if self.peek() == Some(b'/') {
            self.pos += 1;
            self.skip_ws();
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                let at = self.pos;
                let den = self.uint()?;
                if den.is_zero() {
                    return Err(self.err_at(at, "zero denominator"));
                }
                return Ok(BigRational::new(num, den));
            }
        }
        self.pos = save;
        Ok(BigRational::from_integer(num))
    }
}
