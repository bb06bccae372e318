//! Infix expression parser.
//!
//! Grammar: `+ - * / ^`, function application, parentheses. Division is
//! only allowed by expressions that fold to a nonzero rational constant;
//! negative integer powers cover the rest of the exact class.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use super::{ScalarExpr, UnaryFunc};
use crate::chart::{Chart, TIME};

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("time symbol `t` not allowed here (position {pos})")]
    TimeNotAllowed { pos: usize },
    #[error("division by a non-constant expression at position {pos}")]
    DivisionByNonConstant { pos: usize },
    #[error("division by zero at position {pos}")]
    DivisionByZero { pos: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push((i, Tok::Plus));
                i += 1;
            }
            '-' => {
                out.push((i, Tok::Minus));
                i += 1;
            }
            '*' => {
                out.push((i, Tok::Star));
                i += 1;
            }
            '/' => {
                out.push((i, Tok::Slash));
                i += 1;
            }
            '^' => {
                out.push((i, Tok::Caret));
                i += 1;
            }
            '(' => {
                out.push((i, Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push((i, Tok::RParen));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let mut frac_digits = 0usize;
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    let fs = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    frac_digits = i - fs;
                    if frac_digits == 0 && i - start == 1 {
                        return Err(ParseError::Syntax {
                            pos: start,
                            msg: "lone `.`".into(),
                        });
                    }
                }
                let digits: String = src[start..i].chars().filter(|c| *c != '.').collect();
                let numer: BigInt = digits.parse().map_err(|_| ParseError::Syntax {
                    pos: start,
                    msg: "bad number".into(),
                })?;
                let denom = num_traits::pow::pow(BigInt::from(10), frac_digits);
                out.push((start, Tok::Num(BigRational::new(numer, denom))));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push((start, Tok::Ident(src[start..i].to_string())));
            }
            _ => {
                return Err(ParseError::Syntax {
                    pos: i,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    chart: &'a Chart,
    allow_time: bool,
    src_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|(p, _)| *p)
            .unwrap_or(self.src_len)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        let pos = self.here();
        match self.bump() {
            Some(t) if t == tok => Ok(()),
            _ => Err(ParseError::Syntax {
                pos,
                msg: format!("expected {tok:?}"),
            }),
        }
    }

    fn expr(&mut self) -> Result<ScalarExpr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Some(Tok::Minus) => {
                    self.bump();
                    terms.push(-self.term()?);
                }
                _ => break,
            }
        }
        Ok(ScalarExpr::Sum(terms).simplify())
    }

    fn term(&mut self) -> Result<ScalarExpr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    acc = acc * self.factor()?;
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let pos = self.here();
                    let rhs = self.factor()?;
                    match rhs.as_const() {
                        Some(c) if c.is_zero() => return Err(ParseError::DivisionByZero { pos }),
                        Some(c) => {
                            acc = acc * ScalarExpr::Const(c.recip());
                        }
                        None => return Err(ParseError::DivisionByNonConstant { pos }),
                    }
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<ScalarExpr, ParseError> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.bump();
                Ok(-self.factor()?)
            }
            _ => {
                let base = self.atom()?;
                if self.peek() == Some(&Tok::Caret) {
                    self.bump();
                    let e = self.exponent()?;
                    Ok(base.pow(e))
                } else {
                    Ok(base)
                }
            }
        }
    }

    fn exponent(&mut self) -> Result<i64, ParseError> {
        let pos = self.here();
        let parenthesized = self.peek() == Some(&Tok::LParen);
        if parenthesized {
            self.bump();
        }
        let negative = if self.peek() == Some(&Tok::Minus) {
            self.bump();
            true
        } else {
            false
        };
        let v: i64 = match self.bump() {
            Some(Tok::Num(n)) if n.is_integer() => {
                n.numer().try_into().map_err(|_| ParseError::Syntax {
                    pos,
                    msg: "exponent out of range".into(),
                })?
            }
            _ => {
                return Err(ParseError::Syntax {
                    pos,
                    msg: "expected integer exponent".into(),
                })
            }
        };
        if parenthesized {
            self.expect(Tok::RParen)?;
        }
        Ok(if negative { -v } else { v })
    }

    fn atom(&mut self) -> Result<ScalarExpr, ParseError> {
        let pos = self.here();
        match self.bump() {
            Some(Tok::Num(n)) => Ok(ScalarExpr::Const(n)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    let func = match name.as_str() {
                        "sin" => UnaryFunc::Sin,
                        "cos" => UnaryFunc::Cos,
                        "exp" => UnaryFunc::Exp,
                        "ln" => UnaryFunc::Ln,
                        _ => return Err(ParseError::UnknownIdentifier { pos, name }),
                    };
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(Tok::RParen)?;
                    Ok(ScalarExpr::func(func, arg))
                } else if name == TIME {
                    if self.allow_time || self.chart.is_extended() {
                        Ok(ScalarExpr::time())
                    } else {
                        Err(ParseError::TimeNotAllowed { pos })
                    }
                } else if self.chart.index_of(&name).is_some() {
                    Ok(ScalarExpr::Var(name))
                } else {
                    Err(ParseError::UnknownIdentifier { pos, name })
                }
            }
            _ => Err(ParseError::Syntax {
                pos,
                msg: "expected a value".into(),
            }),
        }
    }
}

/// Parse `source` over `chart`; `allow_time` admits the symbol `t` on
/// non-extended charts.
pub fn parse(source: &str, chart: &Chart, allow_time: bool) -> Result<ScalarExpr, ParseError> {
    if source.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let toks = tokenize(source)?;
    let mut p = Parser {
        toks,
        pos: 0,
        chart,
        allow_time,
        src_len: source.len(),
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(ParseError::Syntax {
            pos: p.here(),
            msg: "trailing input".into(),
        });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_constant() {
        let chart = Chart::standard(4);
        assert!(parse("0", &chart, false).unwrap().is_zero());
    }

    #[test]
    fn plain_variable() {
        let chart = Chart::standard(4);
        assert_eq!(
            parse("x2", &chart, false).unwrap(),
            ScalarExpr::var("x2")
        );
    }

    #[test]
    fn undeclared_identifier() {
        let chart = Chart::cotangent(1);
        let err = parse("p1*p1/(2*m)", &chart, false).unwrap_err();
        assert!(matches!(err, ParseError::UnknownIdentifier { name, .. } if name == "m"));
    }

    #[test]
    fn time_flag() {
        let chart = Chart::standard(2);
        assert!(parse("sin(t)", &chart, true).is_ok());
        assert!(matches!(
            parse("sin(t)", &chart, false),
            Err(ParseError::TimeNotAllowed { .. })
        ));
    }

    #[test]
    fn division_restrictions() {
        let chart = Chart::cotangent(1);
        assert!(parse("p1*p1/2", &chart, false).is_ok());
        assert!(matches!(
            parse("1/q1", &chart, false),
            Err(ParseError::DivisionByNonConstant { .. })
        ));
        assert!(matches!(
            parse("q1/0", &chart, false),
            Err(ParseError::DivisionByZero { .. })
        ));
        // negative powers express the same thing inside the exact class
        assert!(parse("q1^(-1)", &chart, false).is_ok());
    }

    #[test]
    fn decimals_are_exact_rationals() {
        let chart = Chart::standard(1);
        let e = parse("0.25", &chart, false).unwrap();
        assert_eq!(e, ScalarExpr::rational(1, 4));
    }

    #[test]
    fn syntax_error_position() {
        let chart = Chart::standard(2);
        match parse("x1 + ", &chart, false) {
            Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }
}
