//! Text front-end for rational functions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := ('-' | '+') factor | base ('^' uint)?
//! base   := int | symbol | '(' expr ')'
//! ```
//!
//! Rationals such as `3/4` parse as an integer quotient. Multiplication must
//! be explicit: `2x` is a syntax error.

use std::fmt::Write as _;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed};
use thiserror::Error;

use crate::algebra::{AlgebraError, MPoly, Monomial, RatFn, VarRegistry, Q};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown symbol `{name}` at byte {offset}")]
    UnknownSymbol { offset: usize, name: String },
    #[error("division by zero at byte {offset}")]
    DivisionByZero { offset: usize },
}

/// Parses `text` over the standard registry.
pub fn parse_expr(text: &str) -> Result<RatFn, ParseError> {
    parse_expr_in(&VarRegistry::standard(), text)
}

pub fn parse_expr_in(reg: &Arc<VarRegistry>, text: &str) -> Result<RatFn, ParseError> {
    let mut p = Parser {
        reg,
        src: text.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    reg: &'a Arc<VarRegistry>,
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn error(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn expr(&mut self) -> Result<RatFn, ParseError> {
        let mut acc = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if c == b'+' { &acc + &rhs } else { &acc - &rhs };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<RatFn, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    acc = &acc * &rhs;
                }
                Some(b'/') => {
                    self.pos += 1;
                    let at = self.pos;
                    let rhs = self.factor()?;
                    acc = acc
                        .checked_div(&rhs)
                        .map_err(|_| ParseError::DivisionByZero { offset: at })?;
                }
                Some(c) if c.is_ascii_alphanumeric() || c == b'(' => {
                    return Err(self.error("implicit multiplication is not allowed; use `*`"));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<RatFn, ParseError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                return Ok(-self.factor()?);
            }
            Some(b'+') => {
                self.pos += 1;
                return self.factor();
            }
            _ => {}
        }
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            let digits = self.digits();
            if digits.is_empty() {
                return Err(self.error("expected a non-negative integer exponent"));
            }
            let e: i32 = digits.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                message: "exponent too large".into(),
            })?;
            return base
                .pow(e)
                .map_err(|_| ParseError::DivisionByZero { offset: start });
        }
        Ok(base)
    }

    fn digits(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn base(&mut self) -> Result<RatFn, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let d = self.digits();
                let n: BigInt = d.parse().expect("digits");
                Ok(RatFn::constant(self.reg, Q::from_integer(n)))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                RatFn::symbol(self.reg, name).map_err(|e| match e {
                    AlgebraError::UnknownSymbol(name) => ParseError::UnknownSymbol {
                        offset: start,
                        name,
                    },
                    other => ParseError::Syntax {
                        offset: start,
                        message: other.to_string(),
                    },
                })
            }
            Some(_) => Err(self.error("expected a number, symbol or `(`")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

/// Canonical text: terms in descending graded-lex order, monic denominator.
pub fn print_expr(f: &RatFn) -> String {
    let num = print_poly(f.numer());
    if f.is_polynomial() {
        return num;
    }
    let den = f.denom();
    let num = if f.numer().num_terms() > 1 {
        format!("({num})")
    } else {
        num
    };
    let den_text = print_poly(den);
    let bare = den.num_terms() == 1 && {
        let (m, c) = den.leading_term().expect("nonzero");
        c.is_one() && m.exps().iter().filter(|&&e| e > 0).count() == 1
    };
    if bare {
        format!("{num}/{den_text}")
    } else {
        format!("{num}/({den_text})")
    }
}

pub fn print_poly(p: &MPoly) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let reg = p.registry();
    let mut out = String::new();
    for (i, (m, c)) in p.terms().rev().enumerate() {
        let neg = c.is_negative();
        let mag = c.abs();
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mono = print_monomial(reg, m);
        if mono.is_empty() {
            write_q(&mut out, &mag);
        } else {
            if !mag.is_one() {
                write_q(&mut out, &mag);
                out.push('*');
            }
            out.push_str(&mono);
        }
    }
    out
}

fn write_q(out: &mut String, c: &Q) {
    if c.denom().is_one() {
        write!(out, "{}", c.numer()).expect("string write");
    } else {
        write!(out, "{}/{}", c.numer(), c.denom()).expect("string write");
    }
}

fn print_monomial(reg: &VarRegistry, m: &Monomial) -> String {
    let mut parts = Vec::new();
    for (i, &e) in m.exps().iter().enumerate() {
        if e == 0 {
            continue;
        }
        let name = &reg.names()[i];
        if e == 1 {
            parts.push(name.clone());
        } else {
            parts.push(format!("{name}^{e}"));
        }
    }
    parts.join("*")
}

/// Short diagnostic form for possibly huge expressions.
pub fn truncate_with_hash(text: &str, limit: usize) -> (String, String) {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(text.as_bytes());
    let hash: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    if text.len() <= limit {
        return (text.to_string(), hash);
    }
    let mut cut = limit;
    while !text.is_char_boundary(cut) {
        cut -= 1;
    }
    (format!("{}…", &text[..cut]), hash)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_hamiltonian_prefix() {
        let f = parse_expr("-2*x^2*y+2*y^2-2*t*y").unwrap();
        assert_eq!(print_expr(&f), "-2*x^2*y + 2*y^2 - 2*y*t");
    }

    #[test]
    fn quotient_of_equal_symbols_is_one() {
        assert!(parse_expr("x/x").unwrap().is_one());
    }

    #[test]
    fn division_by_zero_reports_offset() {
        assert_eq!(
            parse_expr("1/0"),
            Err(ParseError::DivisionByZero { offset: 2 })
        );
        assert!(parse_expr("x/(y-y)").is_err());
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        assert!(matches!(
            parse_expr("2x"),
            Err(ParseError::Syntax { offset: 1, .. })
        ));
        assert!(matches!(
            parse_expr("(x+1"),
            Err(ParseError::Syntax { offset: 4, .. })
        ));
        assert!(matches!(parse_expr("x^"), Err(ParseError::Syntax { .. })));
        assert!(matches!(
            parse_expr("x + beta"),
            Err(ParseError::UnknownSymbol { offset: 4, .. })
        ));
    }

    #[test]
    fn printing_basics() {
        assert_eq!(print_expr(&parse_expr("0").unwrap()), "0");
        assert_eq!(print_expr(&parse_expr("1/x").unwrap()), "1/x");
        assert_eq!(print_expr(&parse_expr("3/(4*x*y)").unwrap()), "3/4/(x*y)");
        assert_eq!(
            print_expr(&parse_expr("(x+1)/(2*y-2)").unwrap()),
            "(1/2*x + 1/2)/(y - 1)"
        );
        assert_eq!(print_expr(&parse_expr("-x/y^2").unwrap()), "-x/y^2");
    }

    #[test]
    fn truncation_keeps_hash_of_full_text() {
        let long = "x".repeat(5000);
        let (short, h) = truncate_with_hash(&long, 4096);
        assert!(short.len() < 4200);
        assert_eq!(h.len(), 64);
        assert_eq!(truncate_with_hash("x", 10).0, "x");
    }
}
