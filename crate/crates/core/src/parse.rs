//! Recursive-descent parser for rational-function expressions.
//!
//! Grammar (standard precedence, left associative, `^` binds tightest and
//! takes a nonnegative integer literal):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('-' | '+') unary | power
//! power  := atom ('^' INT)*
//! atom   := INT | 't' | 'a' | '(' expr ')'
//! ```
//!
//! `a` names the generator of F_q over F_p and is only accepted when `q` is
//! not prime.

use crate::error::{Error, Result};
use crate::fq::Fq;
use crate::ratfunc::RatFunc;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(String),
    Var(char),
    Op(char),
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(text: &'a str) -> Result<Vec<(usize, Tok)>> {
        let mut lx = Lexer {
            src: text.as_bytes(),
            pos: 0,
        };
        let mut out = Vec::new();
        while let Some(t) = lx.next()? {
            out.push(t);
        }
        Ok(out)
    }

    fn next(&mut self) -> Result<Option<(usize, Tok)>> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let Some(&c) = self.src.get(self.pos) else {
            return Ok(None);
        };
        let start = self.pos;
        let tok = match c {
            b'0'..=b'9' => {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                return Ok(Some((start, Tok::Int(s.to_string()))));
            }
            b't' | b'a' => Tok::Var(c as char),
            b'+' | b'-' | b'*' | b'/' | b'^' | b'(' | b')' => Tok::Op(c as char),
            _ => {
                return Err(Error::syntax(
                    start,
                    format!("unexpected character '{}'", c as char),
                ));
            }
        };
        self.pos += 1;
        Ok(Some((start, tok)))
    }
}

struct Parser<'f> {
    toks: Vec<(usize, Tok)>,
    i: usize,
    end: usize,
    field: &'f Fq,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.i).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<RatFunc> {
        let mut acc = self.term()?;
        loop {
            if self.eat_op('+') {
                acc = acc.add_ref(&self.term()?);
            } else if self.eat_op('-') {
                acc = acc.sub_ref(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<RatFunc> {
        let mut acc = self.unary()?;
        loop {
            if self.eat_op('*') {
                acc = acc.mul_ref(&self.unary()?);
            } else if self.peek() == Some(&Tok::Op('/')) {
                let pos = self.pos();
                self.i += 1;
                let rhs = self.unary()?;
                acc = acc
                    .div_ref(&rhs)
                    .map_err(|_| Error::syntax(pos, "division by zero"))?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<RatFunc> {
        if self.eat_op('-') {
            return Ok(self.unary()?.neg_ref());
        }
        if self.eat_op('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<RatFunc> {
        let mut base = self.atom()?;
        while self.eat_op('^') {
            let pos = self.pos();
            match self.peek().cloned() {
                Some(Tok::Int(s)) => {
                    self.i += 1;
                    let e: u64 = s
                        .parse()
                        .map_err(|_| Error::syntax(pos, "exponent too large"))?;
                    if e > 1 << 20 {
                        return Err(Error::syntax(pos, "exponent too large"));
                    }
                    base = base.pow(e as i64);
                }
                _ => return Err(Error::syntax(pos, "expected nonnegative integer exponent")),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<RatFunc> {
        let pos = self.pos();
        let Some(tok) = self.peek().cloned() else {
            return Err(Error::syntax(pos, "unexpected end of input"));
        };
        self.i += 1;
        match tok {
            Tok::Int(s) => {
                let p = self.field.characteristic() as u64;
                let v = s
                    .bytes()
                    .fold(0u64, |acc, d| (acc * 10 + (d - b'0') as u64) % p);
                Ok(RatFunc::from_i64(self.field, v as i64))
            }
            Tok::Var('t') => Ok(RatFunc::t(self.field)),
            Tok::Var(_) => {
                if self.field.is_prime_field() {
                    Err(Error::syntax(pos, "symbol 'a' requires a non-prime field"))
                } else {
                    Ok(RatFunc::constant(self.field, self.field.generator()))
                }
            }
            Tok::Op('(') => {
                let inner = self.expr()?;
                if !self.eat_op(')') {
                    return Err(Error::syntax(self.pos(), "expected ')'"));
                }
                Ok(inner)
            }
            Tok::Op(c) => Err(Error::syntax(pos, format!("unexpected '{c}'"))),
        }
    }
}

/// Parse an expression into a reduced rational function over `field`.
pub fn parse_ratfunc(text: &str, field: &Fq) -> Result<RatFunc> {
    let toks = Lexer::tokens(text)?;
    let mut parser = Parser {
        toks,
        i: 0,
        end: text.len(),
        field,
    };
    let value = parser.expr()?;
    if parser.i < parser.toks.len() {
        return Err(Error::syntax(parser.pos(), "trailing input"));
    }
    Ok(value)
}
