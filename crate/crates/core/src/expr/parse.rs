//! Recursive-descent parser for coefficient expressions.
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := unary (("*"|"/") unary)*
//! unary  := "-" unary | power
//! power  := atom ("^" unary)?
//! atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"
//! ```
//!
//! `x` is the independent variable, the elementary function names are reserved,
//! and every other identifier is a parameter.

use std::fmt;

use thiserror::Error;

use super::{BinOp, Expr, Func};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Empty,
    UnexpectedChar(char),
    UnexpectedToken { found: String, expected: &'static str },
    UnknownFunction(String),
    MissingArgument(&'static str),
    BadNumber(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Empty => write!(f, "empty expression"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::UnexpectedToken { found, expected } => {
                write!(f, "expected {expected}, found {found}")
            }
            ParseErrorKind::UnknownFunction(name) => write!(f, "unknown function `{name}`"),
            ParseErrorKind::MissingArgument(name) => {
                write!(f, "function `{name}` needs a parenthesized argument")
            }
            ParseErrorKind::BadNumber(s) => write!(f, "malformed number `{s}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        match c {
            '+' | '-' | '*' | '/' | '^' => {
                out.push((Tok::Op(c), start));
                i += 1;
            }
            '(' => {
                out.push((Tok::LParen, start));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, start));
                i += 1;
            }
            '0'..='9' | '.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| ParseError {
                    kind: ParseErrorKind::BadNumber(text.to_string()),
                    offset: start,
                })?;
                out.push((Tok::Num(v), start));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or(c);
                return Err(ParseError {
                    kind: ParseErrorKind::UnexpectedChar(ch),
                    offset: start,
                });
            }
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        ParseError {
            kind: ParseErrorKind::UnexpectedToken {
                found: self.peek().describe(),
                expected,
            },
            offset: self.offset(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Tok::Op('-') = self.peek() {
            self.bump();
            return Ok(Expr::negate(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Tok::Op('^') = self.peek() {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::pow(base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (tok, offset) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let is_call = matches!(self.peek(), Tok::LParen);
                match (Func::from_name(&name), is_call) {
                    (Some(f), true) => {
                        self.bump();
                        let arg = self.expr()?;
                        self.expect_rparen()?;
                        Ok(Expr::call(f, arg))
                    }
                    (Some(f), false) => Err(ParseError {
                        kind: ParseErrorKind::MissingArgument(f.name()),
                        offset,
                    }),
                    (None, true) => Err(ParseError {
                        kind: ParseErrorKind::UnknownFunction(name),
                        offset,
                    }),
                    (None, false) if name == "x" => Ok(Expr::X),
                    (None, false) => Ok(Expr::param(&name)),
                }
            }
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.unexpected("a number, identifier or `(`"))
            }
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if let Tok::RParen = self.peek() {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected("`)`"))
        }
    }
}

/// Parses expression text into a constant-folded tree.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    if matches!(toks[0].0, Tok::End) {
        return Err(ParseError {
            kind: ParseErrorKind::Empty,
            offset: 0,
        });
    }
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if !matches!(p.peek(), Tok::End) {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(e)
}
